import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from swlab.disorder import CouplingField, DisorderSpec, sample_couplings
from swlab.dynamics import (
    SwChain,
    edge_product_series,
    replica_seed,
    run,
    state_trajectory,
    sw_bond_step,
    sw_spin_step,
    sw_sweep,
)
from swlab.errors import ParameterError
from swlab.lattice import LatticeBox
from swlab.model import GibbsModel, edge_statuses


def _chain(J=None, side=3, beta=1.0, seed=0, dim=2, sigma=None):
    box = LatticeBox(dim, side)
    field = (sample_couplings(box, DisorderSpec("gaussian", seed=1)) if J is None
             else CouplingField(box, np.asarray(J, float)))
    return SwChain(GibbsModel(field, beta), sigma, seed=seed)


def test_occupation_probability_is_one_half_at_ln2():
    c = _chain(J=[1.0], side=2, dim=1, beta=math.log(2))
    assert c.occupation_probabilities[0] == pytest.approx(0.5)


def test_beta_zero_never_occupies():
    c = _chain(beta=0.0)
    for _ in range(20):
        sw_sweep(c)
        assert not c.eta.any()


def test_bonds_only_on_satisfied_edges():
    c = _chain(beta=3.0, seed=5)
    for _ in range(50):
        sat = edge_statuses(c.model.field, c.sigma) > 0
        eta = sw_bond_step(c)
        assert not np.any(eta & ~sat)
        sw_spin_step(c)


@given(st.integers(0, 2**32 - 1))
def test_occupied_bonds_stay_satisfied_after_spin_step(seed):
    c = _chain(beta=2.0, seed=seed, side=4)
    sw_bond_step(c)
    eta = c.eta.copy()
    sw_spin_step(c)
    status = edge_statuses(c.model.field, c.sigma)
    assert np.all(status[eta.astype(bool)] == 1)


def test_frustrated_fields_never_raise():
    field = sample_couplings(LatticeBox(2, 6), DisorderSpec("uniform", seed=2))
    c = SwChain(GibbsModel(field, 10.0), seed=3)
    for _ in range(300):
        sw_sweep(c)
    assert c.time == 300


def test_same_seed_same_trajectory():
    a = state_trajectory(_chain(seed=11), 200)
    b = state_trajectory(_chain(seed=11), 200)
    c = state_trajectory(_chain(seed=12), 200)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_fast_path_matches_generic_run():
    box_edges = np.array([0, 3, 5, 7])
    a, b = _chain(seed=4, side=4), _chain(seed=4, side=4)
    E = a.model.box.edges
    obs = {"x": lambda s: float(sum(int(s[E[e, 0]]) * int(s[E[e, 1]]) for e in box_edges))}
    slow = run(a, 500, burn_in=37, observers=obs)
    fast = edge_product_series(b, box_edges, 500, burn_in=37)
    assert np.array_equal(slow["x"], fast["edge_products"])
    assert np.array_equal(slow.t, fast.t)
    assert np.array_equal(a.sigma, b.sigma) and a.time == b.time == 537


def test_run_validation_and_observer_errors():
    c = _chain()
    with pytest.raises(ParameterError):
        run(c, -1)
    with pytest.raises(Exception, match="observer 'boom'"):
        run(c, 3, observers={"boom": lambda s: 1 / 0})


def test_replica_seeds_are_distinct_and_stable():
    seeds = [replica_seed(7, r) for r in range(50)]
    assert len(set(seeds)) == 50
    assert replica_seed(7, 3) == seeds[3]
    assert replica_seed(8, 3) != seeds[3]


def test_strong_ferro_chain_moves_as_a_block():
    # at huge beta every satisfied edge is occupied, so a ferromagnet flips as one cluster
    c = _chain(J=np.ones(LatticeBox(2, 4).n_edges), side=4, beta=50.0, seed=1)
    seen = set()
    for _ in range(40):
        sw_sweep(c)
        assert abs(int(c.sigma.sum())) == 16
        seen.add(int(c.sigma[0]))
    assert seen == {-1, 1}


def test_two_spin_empirical_transition_row():
    # exact row from all-plus at p = 1/2: [3/8, 1/8, 1/8, 3/8]
    c = _chain(J=[1.0], side=2, dim=1, beta=math.log(2), seed=0)
    counts = np.zeros(4)
    n = 40_000
    for _ in range(n):
        c.sigma[:] = 1
        sw_sweep(c)
        counts[int((c.sigma[0] > 0) + 2 * (c.sigma[1] > 0))] += 1
    expected = np.array([3, 1, 1, 3]) / 8
    se = np.sqrt(expected * (1 - expected) / n)
    assert np.all(np.abs(counts / n - expected) < 5 * se)
