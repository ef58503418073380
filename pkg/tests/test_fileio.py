import json

import numpy as np
import pytest

from dagctrl import fileio, fixtures
from dagctrl.runtime import simulate
from dagctrl.synthesis import build_K_minimal


class TestMatrixCodec:
    def test_round_trip(self):
        a = np.arange(6.0).reshape(2, 3)
        np.testing.assert_array_equal(fileio.matrix_from_json(fileio.matrix_to_json(a)), a)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            fileio.matrix_from_json({"rows": 2, "cols": 2, "data": [[1.0, 2.0]]})

    def test_missing_keys_rejected(self):
        with pytest.raises(ValueError):
            fileio.matrix_from_json({"data": [[1.0]]})


class TestProblemFiles:
    def test_round_trip(self, tmp_path, tree5):
        path = tmp_path / "p.json"
        fileio.save_problem(tree5, path, options={"seed": 3})
        loaded, options = fileio.load_problem(path)
        assert options == {"seed": 3}
        assert loaded.graph.n_agents == 5
        np.testing.assert_array_equal(loaded.graph.adj, tree5.graph.adj)
        np.testing.assert_array_equal(loaded.C1, tree5.C1)
        for a, b in zip(loaded.agents, tree5.agents):
            np.testing.assert_array_equal(a.A, b.A)
            np.testing.assert_array_equal(a.D21, b.D21)

    def test_committed_fixture_files_match_constructors(self):
        for path, builder in (
            ("fixtures/chain2.json", fixtures.two_agent_chain),
            ("fixtures/tree5.json", fixtures.five_agent_tree),
        ):
            loaded, _ = fileio.load_problem(path)
            built = builder()
            np.testing.assert_array_equal(loaded.graph.adj, built.graph.adj)
            np.testing.assert_array_equal(loaded.C1, built.C1)
            np.testing.assert_array_equal(loaded.D12, built.D12)
            for a, b in zip(loaded.agents, built.agents):
                for field in ("A", "B1", "B2", "C2", "D21"):
                    np.testing.assert_array_equal(getattr(a, field), getattr(b, field))

    def test_unordered_labels_are_relabeled(self, tmp_path):
        # agent 2 (1-based) feeds agent 1: topological order swaps them
        doc = {
            "graph": {"N": 2, "edges": [[2, 1]]},
            "agents": [
                {  # richer agent listed first under original labels
                    "A": fileio.matrix_to_json([[-2.0]]),
                    "B1": fileio.matrix_to_json([[1.0, 0.0]]),
                    "B2": fileio.matrix_to_json([[1.0]]),
                    "C2": fileio.matrix_to_json([[1.0]]),
                    "D21": fileio.matrix_to_json([[0.0, 1.0]]),
                },
                {
                    "A": fileio.matrix_to_json([[-3.0]]),
                    "B1": fileio.matrix_to_json([[1.0, 0.0]]),
                    "B2": fileio.matrix_to_json([[1.0]]),
                    "C2": fileio.matrix_to_json([[1.0]]),
                    "D21": fileio.matrix_to_json([[0.0, 1.0]]),
                },
            ],
            "cost": {
                "C1": fileio.matrix_to_json(np.vstack([np.diag([2.0, 3.0]), np.zeros((2, 2))])),
                "D12": fileio.matrix_to_json(np.vstack([np.zeros((2, 2)), np.eye(2)])),
            },
        }
        path = tmp_path / "swapped.json"
        path.write_text(json.dumps(doc))
        prob, _ = fileio.load_problem(path)
        # original agent 2 (A=-3) becomes internal agent 0
        assert prob.agents[0].A[0, 0] == -3.0
        assert prob.agents[1].A[0, 0] == -2.0
        # cost block-columns moved with their agents; rows stay put
        np.testing.assert_array_equal(prob.C1[:2, :], [[0.0, 2.0], [3.0, 0.0]])

    def test_cycle_in_file_rejected(self, tmp_path):
        from dagctrl.errors import CycleError

        base, _ = fileio.load_problem("fixtures/chain2.json")
        path = tmp_path / "cyclic.json"
        fileio.save_problem(base, path)
        doc = json.loads(path.read_text())
        doc["graph"]["edges"] = [[1, 2], [2, 1]]
        path.write_text(json.dumps(doc))
        with pytest.raises(CycleError):
            fileio.load_problem(path)

    @pytest.mark.parametrize(
        "mutate",
        [
            lambda d: d.pop("graph"),
            lambda d: d.pop("cost"),
            lambda d: d["graph"].__setitem__("edges", [[0, 1]]),
            lambda d: d["agents"].pop(),
            lambda d: d["agents"][0]["A"].__setitem__("rows", 7),
        ],
    )
    def test_malformed_documents_rejected(self, tmp_path, mutate):
        path = tmp_path / "bad.json"
        fileio.save_problem(fixtures.two_agent_chain(), path)
        doc = json.loads(path.read_text())
        mutate(doc)
        path.write_text(json.dumps(doc))
        with pytest.raises(ValueError):
            fileio.load_problem(path)


class TestControllerFiles:
    def test_round_trip(self, tmp_path, chain2, chain2_gains):
        ctrl = build_K_minimal(chain2, chain2_gains, "state")
        path = tmp_path / "k.json"
        fileio.save_controller(ctrl, chain2_gains, path)
        form, ss, gains = fileio.load_controller(path)
        assert form == "minimal-state"
        np.testing.assert_array_equal(ss.A, ctrl.ss.A)
        np.testing.assert_array_equal(ss.B, ctrl.ss.B)
        assert len(gains) == 2
        np.testing.assert_array_equal(gains[1]["X"], chain2_gains.X[1])

    def test_missing_field_rejected(self, tmp_path):
        path = tmp_path / "k.json"
        path.write_text(json.dumps({"form": "state"}))
        with pytest.raises(ValueError):
            fileio.load_controller(path)


class TestTraceFiles:
    def test_csv_and_summary(self, tmp_path, chain2, chain2_gains):
        tr = simulate(chain2, mode="monolithic", x0=[1.0, 0.0], horizon=0.2,
                      dt=1e-2, gains=chain2_gains)
        csv_path = tmp_path / "trace.csv"
        fileio.save_trace_csv(tr, csv_path)
        lines = csv_path.read_text().strip().splitlines()
        assert lines[0].split(",") == tr.column_names()
        assert len(lines) == 1 + tr.t.size
        summary_path = tmp_path / "s.json"
        fileio.save_summary_json({"final": tr.final_cost}, summary_path)
        assert json.loads(summary_path.read_text())["final"] == tr.final_cost
