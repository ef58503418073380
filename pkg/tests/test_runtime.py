import numpy as np
import pytest

from dagctrl.errors import DivergenceError, MissingAncestorError
from dagctrl.runtime import (
    Message,
    assemble_input,
    compute_partial_input,
    derive_agent_controllers,
    network_rhs,
    simulate,
)
from dagctrl.synthesis import Problem, centralized_lqg, compute_gains

from ._oracles import SQRT2_M1


class TestAgentControllers:
    def test_chain_local_dimensions(self, chain2, chain2_gains):
        ctrls = derive_agent_controllers(chain2, chain2_gains)
        assert [c.n_local for c in ctrls] == [2, 1]
        assert ctrls[0].ancestors == (0,)
        assert ctrls[1].strict_ancestors == (0,)

    def test_chain_injection_lifted_to_own_block(self, chain2, chain2_gains):
        ctrls = derive_agent_controllers(chain2, chain2_gains)
        np.testing.assert_allclose(ctrls[0].inject, [[-SQRT2_M1], [0.0]], atol=1e-12)
        np.testing.assert_allclose(ctrls[1].inject, [[-SQRT2_M1]], atol=1e-12)

    def test_tree_leaf_receives_from_both_ancestors(self, tree5, tree5_gains):
        ctrls = derive_agent_controllers(tree5, tree5_gains)
        assert ctrls[4].strict_ancestors == (0, 3)
        assert set(ctrls[4].embed_state) == {0, 3, 4}
        assert set(ctrls[4].embed_input) == {0, 3}

    def test_message_volume_matches_local_payload(self, tree5, tree5_gains):
        g, dims = tree5.graph, tree5.dims
        for ctrl in derive_agent_controllers(tree5, tree5_gains):
            desc = g.descendants(ctrl.index)
            expected = sum(dims.n[j] for j in desc) + sum(dims.m[j] for j in desc)
            assert ctrl.message_floats == expected
            msg = Message(ctrl.index, np.zeros(ctrl.n_local), np.zeros(ctrl.m_local))
            assert msg.size == expected

    def test_integer_recombination_weights(self, tree5, tree5_gains):
        ctrls = derive_agent_controllers(tree5, tree5_gains)
        assert ctrls[4].inv_row == {0: 0, 3: -1, 4: 1}
        assert ctrls[1].inv_row == {0: -1, 1: 1}


class TestPartialInput:
    def test_root_is_plain_gain(self, chain2, chain2_gains):
        ctrl = derive_agent_controllers(chain2, chain2_gains)[0]
        xi = np.array([0.3, -0.7])
        np.testing.assert_allclose(
            compute_partial_input(ctrl, {0: xi}), chain2_gains.F[0] @ xi, atol=1e-14
        )

    def test_chain_subtracts_ancestor_estimate(self, chain2, chain2_gains):
        ctrl = derive_agent_controllers(chain2, chain2_gains)[1]
        xi_own = np.array([2.0])
        xi_root = np.array([5.0, 3.0])  # root's estimate of (agent 0, agent 1)
        got = compute_partial_input(ctrl, {0: xi_root, 1: xi_own})
        expect = chain2_gains.F[1] @ (xi_own - xi_root[1:])
        np.testing.assert_allclose(got, expect, atol=1e-14)

    def test_zero_payloads_give_zero(self, tree5, tree5_gains):
        ctrl = derive_agent_controllers(tree5, tree5_gains)[4]
        states = {k: np.zeros(sz) for k, sz in ((0, 5), (3, 2), (4, 1))}
        np.testing.assert_array_equal(compute_partial_input(ctrl, states), [0.0])

    def test_missing_ancestor_raises(self, chain2, chain2_gains):
        ctrl = derive_agent_controllers(chain2, chain2_gains)[1]
        with pytest.raises(MissingAncestorError):
            compute_partial_input(ctrl, {1: np.zeros(1)})


class TestAssembleInput:
    def test_root_passthrough(self, chain2, chain2_gains):
        ctrl = derive_agent_controllers(chain2, chain2_gains)[0]
        nu_own = np.array([0.4, 0.1])
        nu, u = assemble_input(ctrl, nu_own, {})
        np.testing.assert_array_equal(nu, nu_own)
        np.testing.assert_array_equal(u, nu_own[:1])

    def test_chain_adds_overlap(self, chain2, chain2_gains):
        ctrl = derive_agent_controllers(chain2, chain2_gains)[1]
        nu, u = assemble_input(ctrl, np.array([0.25]), {0: np.array([9.0, 4.0])})
        np.testing.assert_allclose(nu, [4.25])
        np.testing.assert_allclose(u, [4.25])

    def test_zero_everything(self, chain2, chain2_gains):
        ctrl = derive_agent_controllers(chain2, chain2_gains)[1]
        nu, u = assemble_input(ctrl, np.zeros(1), {0: np.zeros(2)})
        np.testing.assert_array_equal(u, [0.0])

    def test_missing_ancestor_raises(self, chain2, chain2_gains):
        ctrl = derive_agent_controllers(chain2, chain2_gains)[1]
        with pytest.raises(MissingAncestorError):
            assemble_input(ctrl, np.zeros(1), {})


class TestNetworkRhs:
    def test_equilibrium(self, chain2, chain2_gains):
        ctrls = derive_agent_controllers(chain2, chain2_gains)
        out = network_rhs(
            chain2, ctrls, np.zeros(2), [np.zeros(2), np.zeros(1)], np.zeros(4)
        )
        assert np.all(out.dx == 0) and all(np.all(d == 0) for d in out.dxi)
        assert np.all(out.u == 0) and np.all(out.z == 0)

    def test_zero_estimates_inject_only_measurement(self, chain2, chain2_gains):
        ctrls = derive_agent_controllers(chain2, chain2_gains)
        x = np.array([1.0, -2.0])
        out = network_rhs(chain2, ctrls, x, [np.zeros(2), np.zeros(1)], np.zeros(4))
        assert np.all(out.u == 0.0)
        np.testing.assert_allclose(out.dxi[0], -ctrls[0].inject @ [out.y[0]])
        np.testing.assert_allclose(out.dxi[1], -ctrls[1].inject @ [out.y[1]])

    def test_messages_travel_down_only(self, tree5, tree5_gains):
        ctrls = derive_agent_controllers(tree5, tree5_gains)
        rng = np.random.default_rng(0)
        xi = [rng.normal(size=c.n_local) for c in ctrls]
        out = network_rhs(tree5, ctrls, rng.normal(size=5), xi, np.zeros(10))
        assert set(out.messages) == set(range(5))
        for i, msg in out.messages.items():
            assert msg.sender == i
            np.testing.assert_array_equal(msg.state_estimate, xi[i])

    def test_single_agent_matches_classical_observer(self):
        from dagctrl import fixtures

        prob = Problem.from_parts(
            1, [], [fixtures.scalar_agent()],
            np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]]),
        )
        gains = compute_gains(prob)
        ctrls = derive_agent_controllers(prob, gains)
        lqg = centralized_lqg(prob)
        rng = np.random.default_rng(2)
        x, xi, w = rng.normal(size=1), rng.normal(size=1), rng.normal(size=2)
        out = network_rhs(prob, ctrls, x, [xi], w)
        y = prob.C2 @ x + prob.D21 @ w
        np.testing.assert_allclose(out.dxi[0], lqg.A @ xi + lqg.B @ y, atol=1e-14)
        np.testing.assert_allclose(out.u, lqg.C @ xi, atol=1e-14)


class TestSimulate:
    def test_zero_input_zero_trace(self, chain2, chain2_gains):
        tr = simulate(chain2, mode="network", horizon=0.5, dt=1e-2,
                      gains=chain2_gains)
        assert np.all(tr.as_array()[:, 1:] == 0.0)

    def test_network_matches_monolithic(self, chain2, chain2_gains):
        common = dict(x0=[1.0, 1.0], horizon=5.0, dt=1e-3, store_every=10,
                      gains=chain2_gains)
        tr_net = simulate(chain2, mode="network", **common)
        tr_mon = simulate(chain2, mode="monolithic", form="minimal-state", **common)
        assert np.abs(tr_net.u - tr_mon.u).max() <= 1e-6
        assert np.abs(tr_net.x - tr_mon.x).max() <= 1e-6
        assert np.abs(tr_net.controller_state - tr_mon.controller_state).max() <= 1e-6

    def test_monolithic_forms_agree_in_io(self, chain2, chain2_gains):
        common = dict(x0=[0.5, -1.0], horizon=2.0, dt=1e-3, store_every=10,
                      gains=chain2_gains)
        tr_a = simulate(chain2, mode="monolithic", form="state", **common)
        tr_b = simulate(chain2, mode="monolithic", form="innovation", **common)
        assert np.abs(tr_a.u - tr_b.u).max() <= 1e-9

    def test_monolithic_lemma_form_runs(self, chain2, chain2_gains):
        common = dict(x0=[0.5, -1.0], horizon=0.5, dt=1e-2, store_every=10,
                      gains=chain2_gains)
        tr_a = simulate(chain2, mode="monolithic", form="state", **common)
        tr_b = simulate(chain2, mode="monolithic", form="lemma", **common)
        assert np.abs(tr_a.u - tr_b.u).max() <= 1e-8
        assert tr_b.state_labels[0] == "k0"

    def test_deterministic_disturbance_path(self, chain2, chain2_gains):
        pulse = lambda t: np.array([np.exp(-t), 0.0, 0.0, 0.0])
        tr = simulate(chain2, mode="network", w=pulse, horizon=1.0, dt=1e-2,
                      gains=chain2_gains)
        assert tr.final_cost > 0.0
        assert np.isfinite(tr.as_array()).all()

    def test_disturbance_drives_both_modes_identically(self, chain2, chain2_gains):
        wiggle = lambda t: np.array([np.sin(t), 0.2, np.cos(2 * t), -0.1])
        kw = dict(w=wiggle, horizon=2.0, dt=1e-3, store_every=20,
                  gains=chain2_gains)
        tr_net = simulate(chain2, mode="network", **kw)
        tr_mon = simulate(chain2, mode="monolithic", form="minimal-state", **kw)
        assert np.abs(tr_net.u - tr_mon.u).max() <= 1e-9
        assert np.abs(tr_net.y - tr_mon.y).max() <= 1e-9

    def test_store_every_larger_than_run(self, chain2, chain2_gains):
        tr = simulate(chain2, mode="monolithic", x0=[1.0, 0.0], horizon=0.1,
                      dt=1e-2, store_every=1000, gains=chain2_gains)
        np.testing.assert_allclose(tr.t, [0.0, 0.1])

    def test_noise_reproducible_bitwise(self, chain2, chain2_gains):
        kw = dict(mode="monolithic", noise_seed=7, horizon=1.0, dt=1e-3,
                  store_every=100, gains=chain2_gains)
        tr1 = simulate(chain2, **kw)
        tr2 = simulate(chain2, **kw)
        np.testing.assert_array_equal(tr1.as_array(), tr2.as_array())

    def test_noise_modes_track_each_other(self, chain2, chain2_gains):
        kw = dict(noise_seed=5, horizon=1.0, dt=1e-3, store_every=50,
                  gains=chain2_gains)
        tr_net = simulate(chain2, mode="network", **kw)
        tr_mon = simulate(chain2, mode="monolithic", **kw)
        assert np.abs(tr_net.u - tr_mon.u).max() <= 1e-10

    def test_running_cost_recomputation(self, chain2, chain2_gains):
        tr = simulate(chain2, mode="monolithic", x0=[1.0, -1.0], horizon=2.0,
                      dt=1e-2, gains=chain2_gains)
        dt = 1e-2
        manual = np.cumsum(np.einsum("ij,ij->i", tr.z, tr.z) * dt)
        # left Riemann sum excludes the current sample
        manual = np.concatenate([[0.0], manual[:-1]])
        with np.errstate(divide="ignore", invalid="ignore"):
            expect = np.where(tr.t > 0, manual / tr.t, 0.0)
        np.testing.assert_allclose(tr.running_cost, expect, atol=1e-12)

    def test_divergence_guard(self, chain2, chain2_gains):
        with pytest.raises(DivergenceError):
            simulate(chain2, mode="monolithic", x0=[1.0, 1.0], horizon=300.0,
                     dt=3.0, gains=chain2_gains)

    def test_store_every_keeps_final_sample(self, chain2, chain2_gains):
        tr = simulate(chain2, mode="monolithic", x0=[1.0, 0.0], horizon=1.0,
                      dt=1e-2, store_every=7, gains=chain2_gains)
        assert tr.t[-1] == pytest.approx(1.0)
        assert tr.t.size == len({*range(0, 101, 7), 100})

    def test_bad_horizon_rejected(self, chain2, chain2_gains):
        with pytest.raises(ValueError):
            simulate(chain2, horizon=1.05, dt=0.1, gains=chain2_gains)

    def test_trace_columns_consistent(self, chain2, chain2_gains):
        tr = simulate(chain2, mode="network", horizon=0.2, dt=1e-2,
                      gains=chain2_gains)
        assert len(tr.column_names()) == tr.as_array().shape[1]
        assert tr.column_names()[0] == "t"
        assert tr.state_labels[0] == "xi0_0_0"


class TestInformationLocality:
    def test_non_ancestor_bias_leaves_input_unchanged(self, tree5, tree5_gains):
        # corrupt what the controllers see of y_1; agent 3 never hears from 1
        bias = np.zeros(5)
        bias[1] = 10.0
        kw = dict(mode="network", x0=np.ones(5), horizon=1.0, dt=1e-2,
                  gains=tree5_gains)
        clean = simulate(tree5, **kw)
        biased = simulate(tree5, y_bias=bias, **kw)
        offs = np.cumsum([0, *tree5.dims.m])
        dev_agent3 = np.abs(biased.u[:, offs[3]:offs[4]] - clean.u[:, offs[3]:offs[4]])
        assert dev_agent3.max() <= 1e-9
        # the corrupted agent itself must react
        dev_agent1 = np.abs(biased.u[:, offs[1]:offs[2]] - clean.u[:, offs[1]:offs[2]])
        assert dev_agent1.max() > 1e-3
