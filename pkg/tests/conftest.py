import numpy as np
import pytest

from dagctrl import compute_gains, fixtures


@pytest.fixture(scope="session")
def chain2():
    return fixtures.two_agent_chain()


@pytest.fixture(scope="session")
def tree5():
    return fixtures.five_agent_tree()


@pytest.fixture(scope="session")
def chain2_gains(chain2):
    return compute_gains(chain2)


@pytest.fixture(scope="session")
def tree5_gains(tree5):
    return compute_gains(tree5)


@pytest.fixture(scope="session")
def coupled_chain2(chain2):
    """Chain fixture with a dense cost so the agents genuinely interact."""
    from dagctrl import Problem

    rng = np.random.default_rng(42)
    w = rng.normal(size=(2, 2))
    r = rng.normal(size=(2, 2)) + 2.0 * np.eye(2)
    c1 = np.vstack([w, np.zeros((2, 2))])
    d12 = np.vstack([np.zeros((2, 2)), r])
    return Problem(chain2.graph, chain2.agents, c1, d12)
