"""The quenched Ising model on a box: energy, exact Gibbs weights, clusters, Φ.

Spin configurations are ``int8`` arrays of ±1 indexed by vertex.  Whole state
spaces are enumerated with the bit-packed order ``state = sum_v bit_v 2^v``
where ``bit_v = (sigma_v + 1) / 2``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .disorder import CouplingField, GadgetParams, gadget_geometry
from .errors import CapacityError, ParameterError, ShapeError
from .lattice import LatticeBox, Region, edge_boundary

ENUMERATION_CAP = 16


@dataclass(frozen=True, eq=False)
class GibbsModel:
    field: CouplingField
    beta: float

    def __post_init__(self):
        if not self.beta >= 0 or not np.isfinite(self.beta):
            raise ParameterError(f"beta must be finite and >= 0, got {self.beta}")

    @property
    def box(self) -> LatticeBox:
        return self.field.box

    @property
    def couplings(self) -> np.ndarray:
        return self.field.couplings


class EdgeStatus(enum.Enum):
    SATISFIED = "satisfied"
    UNSATISFIED = "unsatisfied"
    NEUTRAL = "neutral"


def as_spins(sigma, n: int) -> np.ndarray:
    s = np.asarray(sigma)
    if s.shape != (n,):
        raise ShapeError(f"expected {n} spins, got shape {s.shape}")
    if not np.all(np.abs(s) == 1):
        raise ShapeError("spins must be exactly +1 or -1")
    return s.astype(np.int8, copy=False)


def _bond_products(box: LatticeBox, sigma: np.ndarray) -> np.ndarray:
    e = box.edges
    return sigma[..., e[:, 0]].astype(np.int64) * sigma[..., e[:, 1]]


def hamiltonian(model: GibbsModel, sigma) -> float:
    """``-sum_e J_e s_x s_y`` over the box edges (free boundary)."""
    s = as_spins(sigma, model.box.n_vertices)
    return float(-(model.couplings @ _bond_products(model.box, s)))


def hamiltonian_on_edges(edges: Region, field: CouplingField, sigma) -> float:
    """Energy contribution of an edge subset."""
    if edges.kind != "edge":
        raise ParameterError("hamiltonian_on_edges needs an edge region")
    s = as_spins(sigma, field.box.n_vertices)
    idx = edges.array
    ends = field.box.edges[idx]
    return float(-(field.couplings[idx] @ (s[ends[:, 0]].astype(np.int64) * s[ends[:, 1]])))


def all_configurations(n: int) -> np.ndarray:
    """Every spin configuration on ``n`` sites, row ``k`` is the bit-packed state ``k``."""
    if n > ENUMERATION_CAP:
        raise CapacityError(f"{n} sites exceed the enumeration cap of {ENUMERATION_CAP}")
    bits = (np.arange(2**n, dtype=np.int64)[:, None] >> np.arange(n)) & 1
    return (2 * bits - 1).astype(np.int8)


def pack_state(sigma) -> int:
    s = np.asarray(sigma)
    return int(((s > 0).astype(np.int64) << np.arange(s.size)).sum())


def unpack_state(state: int, n: int) -> np.ndarray:
    return (2 * ((state >> np.arange(n)) & 1) - 1).astype(np.int8)


def energies(model: GibbsModel) -> np.ndarray:
    """Energy of every bit-packed state."""
    configs = all_configurations(model.box.n_vertices)
    return -(_bond_products(model.box, configs) @ model.couplings)


def log_gibbs(model: GibbsModel) -> np.ndarray:
    """Normalised log-probabilities, computed with a max shift."""
    logw = -model.beta * energies(model)
    logw -= logw.max()
    return logw - np.log(np.exp(logw).sum())


def exact_gibbs(model: GibbsModel) -> np.ndarray:
    """Gibbs probabilities of all ``2^|V|`` states in bit-packed order."""
    pi = np.exp(log_gibbs(model))
    return pi / pi.sum()


def sw_invariant_log_gibbs(model: GibbsModel) -> np.ndarray:
    """Log of the measure left invariant by the SW kernel with ``p_e = 1 - exp(-beta |J_e|)``.

    With that bond rule a satisfied edge is ``1/(1 - p_e) = exp(beta |J_e|)``
    times likelier than its unsatisfied flip, which is the Gibbs measure
    ``exp(-beta H)`` at half the inverse temperature.
    """
    return log_gibbs(GibbsModel(model.field, 0.5 * model.beta))


def sw_invariant_gibbs(model: GibbsModel) -> np.ndarray:
    pi = np.exp(sw_invariant_log_gibbs(model))
    return pi / pi.sum()


def classify_edge(edge: int, field: CouplingField, sigma) -> EdgeStatus:
    s = np.asarray(sigma)
    a, b = field.box.edges[edge]
    x = field.couplings[edge] * s[a] * s[b]
    if x > 0:
        return EdgeStatus.SATISFIED
    if x < 0:
        return EdgeStatus.UNSATISFIED
    return EdgeStatus.NEUTRAL


def edge_statuses(field: CouplingField, sigma) -> np.ndarray:
    """Vectorised :func:`classify_edge`: +1 satisfied, -1 unsatisfied, 0 neutral."""
    s = as_spins(sigma, field.box.n_vertices)
    return np.sign(field.couplings * _bond_products(field.box, s)).astype(np.int8)


def spin_clusters(box: LatticeBox, sigma) -> list[Region]:
    """Maximal connected constant-sign sets, ordered by their smallest vertex."""
    s = as_spins(sigma, box.n_vertices)
    e = box.edges
    same = s[e[:, 0]] == s[e[:, 1]]
    n = box.n_vertices
    graph = coo_matrix((np.ones(int(same.sum())), (e[same, 0], e[same, 1])), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    order = np.argsort(labels, kind="stable")
    groups = np.split(order, np.flatnonzero(np.diff(labels[order])) + 1)
    groups.sort(key=lambda g: g[0])
    return [box.vertex_region(g) for g in groups]


def peierls_surface(cluster: Region) -> Region:
    return edge_boundary(cluster)


def phi_map(sigma, box: LatticeBox, gadget: GadgetParams) -> np.ndarray:
    """Reflect through the gadget centre, flipping spins inside ``B_2l``.

    ``Phi(s)(v) = -s(Rv)`` on ``B_2l``, ``s(Rv)`` on the rest of ``B_4l`` and
    ``s(v)`` outside.
    """
    s = as_spins(sigma, box.n_vertices)
    geo = gadget_geometry(box, gadget.center, gadget.l)
    out = s.copy()
    idx4 = geo.B4.array
    out[idx4] = s[geo.reflect_vertex[idx4]]
    idx2 = geo.B2.array
    out[idx2] = -out[idx2]
    return out
