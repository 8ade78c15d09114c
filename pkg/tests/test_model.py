import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import gibbs, spins_of
from swlab.disorder import CouplingField, DisorderSpec, GadgetParams, build_gadget, gadget_geometry, sample_couplings
from swlab.errors import CapacityError, ParameterError, ShapeError
from swlab.lattice import LatticeBox
from swlab.model import (
    EdgeStatus,
    GibbsModel,
    all_configurations,
    classify_edge,
    edge_statuses,
    energies,
    exact_gibbs,
    hamiltonian,
    hamiltonian_on_edges,
    pack_state,
    peierls_surface,
    phi_map,
    spin_clusters,
    sw_invariant_gibbs,
    unpack_state,
)

FRUSTRATED = np.array([1.0, 1.0, 1.0, -1.0])


def _model(J, side=2, beta=1.0):
    return GibbsModel(CouplingField(LatticeBox(2, side), np.asarray(J, float)), beta)


def test_hamiltonian_examples():
    m = _model(FRUSTRATED)
    assert hamiltonian(m, [1, 1, 1, 1]) == -2.0
    assert hamiltonian(m, [1, -1, 1, 1]) == 2.0  # two satisfied bonds lost
    chain = GibbsModel(CouplingField(LatticeBox(1, 2), np.array([0.7])), 1.0)
    assert hamiltonian(chain, [1, 1]) == pytest.approx(-0.7)
    assert hamiltonian(chain, [1, -1]) == pytest.approx(0.7)


def test_spin_validation():
    m = _model(FRUSTRATED)
    with pytest.raises(ShapeError):
        hamiltonian(m, [1, 1, 1])
    with pytest.raises(ShapeError):
        hamiltonian(m, [1, 0, 1, 1])
    with pytest.raises(ParameterError):
        _model(FRUSTRATED, beta=-1)


@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4), st.integers(0, 15))
def test_global_flip_and_edge_split(J, state):
    m = _model(J)
    s = unpack_state(state, 4)
    assert hamiltonian(m, s) == hamiltonian(m, -s)
    box = m.box
    a, b = box.edge_region([0, 1]), box.edge_region([2, 3])
    total = hamiltonian_on_edges(a, m.field, s) + hamiltonian_on_edges(b, m.field, s)
    assert total == pytest.approx(hamiltonian(m, s))


@given(st.integers(0, 2**9 - 1))
def test_pack_unpack(state):
    assert pack_state(unpack_state(state, 9)) == state
    assert np.array_equal(all_configurations(9)[state], unpack_state(state, 9))


def test_enumeration_cap():
    with pytest.raises(CapacityError):
        all_configurations(17)


def test_energies_match_pointwise():
    m = GibbsModel(sample_couplings(LatticeBox(2, 3), DisorderSpec("gaussian", seed=4)), 1.3)
    E = energies(m)
    for k in (0, 17, 255, 511):
        assert E[k] == pytest.approx(hamiltonian(m, unpack_state(k, 9)))


def test_two_spin_gibbs_closed_form():
    beta, J = 0.9, 0.6
    m = GibbsModel(CouplingField(LatticeBox(1, 2), np.array([J])), beta)
    pi = exact_gibbs(m)
    z = 2 * math.exp(beta * J) + 2 * math.exp(-beta * J)
    assert pi == pytest.approx([math.exp(beta * J) / z, math.exp(-beta * J) / z,
                                math.exp(-beta * J) / z, math.exp(beta * J) / z])
    half = sw_invariant_gibbs(m)
    assert half[0] / half[1] == pytest.approx(math.exp(beta * J))


def test_gibbs_matches_oracle_and_is_stable_at_large_beta():
    box = LatticeBox(2, 3)
    field = sample_couplings(box, DisorderSpec("uniform", seed=8))
    ref = gibbs(box.n_vertices, box.edges.tolist(), field.couplings.tolist(), 0.7)
    assert np.allclose(exact_gibbs(GibbsModel(field, 0.7)), ref, atol=1e-14)
    pi = exact_gibbs(GibbsModel(field, 1e4))
    assert np.all(np.isfinite(pi)) and pi.sum() == pytest.approx(1.0)


def test_edge_classification():
    field = CouplingField(LatticeBox(2, 2), np.array([1.0, -1.0, 0.0, 2.0]))
    s = np.array([1, 1, -1, -1])
    got = [classify_edge(e, field, s) for e in range(4)]
    # edges (0,2), (0,1), (1,3), (2,3)
    assert got == [EdgeStatus.UNSATISFIED, EdgeStatus.UNSATISFIED, EdgeStatus.NEUTRAL, EdgeStatus.SATISFIED]
    assert edge_statuses(field, s).tolist() == [-1, -1, 0, 1]


def test_spin_clusters_partition_and_order():
    box = LatticeBox(2, 3)
    s = np.array([1, 1, -1,
                  -1, 1, -1,
                  1, -1, -1])
    clusters = spin_clusters(box, s)
    assert [sorted(c.items) for c in clusters] == [[0, 1, 4], [2, 5, 7, 8], [3], [6]]
    assert len(peierls_surface(clusters[2])) == 3


@given(st.integers(0, 2**9 - 1))
def test_clusters_are_constant_and_disconnected(state):
    box = LatticeBox(2, 3)
    s = unpack_state(state, 9)
    clusters = spin_clusters(box, s)
    assert sum(len(c) for c in clusters) == 9
    for c in clusters:
        assert len({int(s[v]) for v in c}) == 1
        for e in peierls_surface(c):
            u, v = box.edges[e]
            assert s[u] != s[v]


def test_phi_is_an_involution_preserving_energy_off_the_band():
    l = 2
    box = LatticeBox(2, 10)
    params = GadgetParams(l, 0.25, 0.4995, (5, 5))
    field = build_gadget(sample_couplings(box, DisorderSpec("uniform", seed=3)), params)
    geo = gadget_geometry(box, params.center, l)
    rng = np.random.default_rng(0)
    for _ in range(20):
        s = rng.choice(np.array([-1, 1], dtype=np.int8), size=box.n_vertices)
        t = phi_map(s, box, params)
        assert np.array_equal(phi_map(t, box, params), s)
        outside = np.setdiff1d(np.arange(box.n_vertices), geo.B4.array)
        assert np.array_equal(t[outside], s[outside])
        # bulk edges are permuted by the reflection and both endpoints flip together
        prod = lambda x, idx: (x[box.edges[idx, 0]] * x[box.edges[idx, 1]]).astype(int)
        assert sorted(prod(s, geo.bulk_edges)) == sorted(prod(t, geo.bulk_edges))
        band = geo.band_edges
        assert np.array_equal(prod(t, band), -prod(s, band[geo.band_reflected]))
