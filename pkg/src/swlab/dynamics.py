"""Swendsen-Wang dynamics with a fixed random-draw contract.

One sweep is:

1. bond step: every edge with ``J_e s_x s_y > 0`` (in canonical edge order)
   consumes one uniform draw and is occupied when the draw is below
   ``1 - exp(-beta |J_e|)``; all other edges are empty and consume nothing.
2. spin step: occupied bonds are merged by a union-find that tracks each
   vertex's sign relative to its root.  Roots are the smallest vertex of each
   cluster.  Clusters are visited in root order and each consumes one draw;
   the root becomes +1 when the draw is below 1/2.  Every other vertex takes
   the root spin times its relative sign.

Draws come from a :class:`numpy.random.Generator`; the numba kernels pull from
the same bit generator, so pure-Python and compiled code paths agree draw for
draw.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numba
import numpy as np

from .errors import ConsistencyError, ParameterError, SwlabError
from .model import GibbsModel, as_spins


def replica_seed(base_seed: int, replica: int) -> int:
    """64-bit seed of replica ``replica``: ``SeedSequence(base_seed, spawn_key=(replica,))``."""
    ss = np.random.SeedSequence(int(base_seed), spawn_key=(int(replica),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@numba.njit(cache=True)
def _find(parent, rel, x):
    # returns (root, sign of x relative to root); compresses the path
    root = x
    sign = 1
    while parent[root] != root:
        sign *= rel[root]
        root = parent[root]
    # second pass: point every node on the path straight at the root
    s = sign
    while parent[x] != root and x != root:
        nxt = parent[x]
        r = rel[x]
        parent[x] = root
        rel[x] = s
        s *= r
        x = nxt
    return root, sign


@numba.njit(cache=True)
def _bond_kernel(rng, sigma, eu, ev, J, p, eta):
    for e in range(J.size):
        eta[e] = 0
        if J[e] * sigma[eu[e]] * sigma[ev[e]] > 0:
            if rng.random() < p[e]:
                eta[e] = 1


@numba.njit(cache=True)
def _label_kernel(n, eu, ev, sgn, eta, parent, rel, cid):
    """Union-find with relative signs. Returns (n_clusters, first bad edge or -1)."""
    for v in range(n):
        parent[v] = v
        rel[v] = 1
    for e in range(eta.size):
        if eta[e] == 0:
            continue
        x = eu[e]
        y = ev[e]
        rx, ax = _find(parent, rel, x)
        ry, ay = _find(parent, rel, y)
        if rx == ry:
            if ax * ay != sgn[e]:
                return 0, e
        elif rx < ry:
            parent[ry] = rx
            rel[ry] = ax * ay * sgn[e]
        else:
            parent[rx] = ry
            rel[rx] = ax * ay * sgn[e]
    nc = 0
    for v in range(n):
        r, a = _find(parent, rel, v)
        rel[v] = a
        if r == v:
            cid[v] = nc
            nc += 1
        else:
            cid[v] = cid[r]
    return nc, -1


@numba.njit(cache=True)
def _spin_kernel(rng, n, eu, ev, sgn, eta, sigma, parent, rel, cid, draws):
    nc, bad = _label_kernel(n, eu, ev, sgn, eta, parent, rel, cid)
    if bad >= 0:
        return bad
    for c in range(nc):
        draws[c] = 1 if rng.random() < 0.5 else -1
    for v in range(n):
        sigma[v] = draws[cid[v]] * rel[v]
    return -1


@numba.njit(cache=True)
def _sweeps_kernel(rng, n_sweeps, sigma, eu, ev, J, sgn, p, eta, parent, rel, cid, draws,
                   rec_u, rec_v, out):
    # out[t] = sum over the recorded edges of s_u s_v after sweep t
    for t in range(n_sweeps):
        _bond_kernel(rng, sigma, eu, ev, J, p, eta)
        bad = _spin_kernel(rng, sigma.size, eu, ev, sgn, eta, sigma, parent, rel, cid, draws)
        if bad >= 0:
            return t, bad
        acc = 0
        for k in range(rec_u.size):
            acc += sigma[rec_u[k]] * sigma[rec_v[k]]
        out[t] = acc
    return n_sweeps, -1


class SwChain:
    """State of one Swendsen-Wang chain: spins, bonds, step counter, generator."""

    def __init__(self, model: GibbsModel, sigma=None, seed: int | None = 0,
                 rng: np.random.Generator | None = None):
        box = model.box
        self.model = model
        n = box.n_vertices
        self.sigma = np.ones(n, dtype=np.int8) if sigma is None else as_spins(sigma, n).copy()
        self.eta = np.zeros(box.n_edges, dtype=np.int8)
        self.time = 0
        self.rng = rng if rng is not None else np.random.default_rng(seed)
        J = model.couplings
        self._eu = np.ascontiguousarray(box.edges[:, 0])
        self._ev = np.ascontiguousarray(box.edges[:, 1])
        self._J = np.ascontiguousarray(J)
        self._sgn = np.sign(J).astype(np.int8)
        self._p = -np.expm1(-model.beta * np.abs(J))
        self._parent = np.empty(n, dtype=np.int64)
        self._rel = np.empty(n, dtype=np.int8)
        self._cid = np.empty(n, dtype=np.int64)
        self._draws = np.empty(n, dtype=np.int8)

    @property
    def occupation_probabilities(self) -> np.ndarray:
        return self._p


def sw_bond_step(chain: SwChain) -> np.ndarray:
    """Resample the bonds given the current spins; returns the new bond array."""
    _bond_kernel(chain.rng, chain.sigma, chain._eu, chain._ev, chain._J, chain._p, chain.eta)
    return chain.eta


def sw_spin_step(chain: SwChain) -> np.ndarray:
    """Resample spins cluster by cluster given the current bonds."""
    if np.any(chain.eta[chain._sgn == 0]):
        raise ConsistencyError("an edge with J = 0 is occupied")
    bad = _spin_kernel(chain.rng, chain.sigma.size, chain._eu, chain._ev, chain._sgn, chain.eta,
                       chain.sigma, chain._parent, chain._rel, chain._cid, chain._draws)
    if bad >= 0:
        raise ConsistencyError(
            f"occupied bonds impose contradictory signs around a cycle closed by edge {bad} "
            f"at step {chain.time}"
        )
    return chain.sigma


def sw_sweep(chain: SwChain) -> SwChain:
    sw_bond_step(chain)
    sw_spin_step(chain)
    chain.time += 1
    return chain


Observer = Callable[[np.ndarray], float]


@dataclass
class Series:
    """Scalar time series keyed by observer name, one entry per recorded sweep."""

    t: np.ndarray
    values: dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.t.size)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[name]

    @property
    def names(self) -> list[str]:
        return list(self.values)


def run(chain: SwChain, sweeps: int, burn_in: int = 0,
        observers: Mapping[str, Observer] | None = None) -> Series:
    """Advance ``burn_in + sweeps`` steps, evaluating observers after each post-burn-in step."""
    if sweeps < 0 or burn_in < 0:
        raise ParameterError("sweeps and burn_in must be non-negative")
    observers = dict(observers or {})
    for _ in range(burn_in):
        sw_sweep(chain)
    t = np.empty(sweeps, dtype=np.int64)
    out = {name: np.empty(sweeps) for name in observers}
    for k in range(sweeps):
        sw_sweep(chain)
        t[k] = chain.time
        for name, obs in observers.items():
            try:
                out[name][k] = obs(chain.sigma)
            except Exception as exc:
                raise SwlabError(f"observer {name!r} failed at step {chain.time}: {exc}") from exc
    return Series(t, out)


def edge_product_series(chain: SwChain, edges: np.ndarray, sweeps: int, burn_in: int = 0) -> Series:
    """Fast path for ``sum_{e in edges} s_x s_y`` recorded after every sweep.

    Consumes exactly the same draws as :func:`run`, so the resulting chain
    state and series match the generic path.
    """
    if sweeps < 0 or burn_in < 0:
        raise ParameterError("sweeps and burn_in must be non-negative")
    edges = np.asarray(edges, dtype=np.int64)
    ends = chain.model.box.edges[edges]
    rec_u = np.ascontiguousarray(ends[:, 0])
    rec_v = np.ascontiguousarray(ends[:, 1])
    scratch = np.empty(max(burn_in, 1), dtype=np.int64)
    out = np.empty(sweeps, dtype=np.int64)
    for n_steps, buf in ((burn_in, scratch), (sweeps, out)):
        done, bad = _sweeps_kernel(chain.rng, n_steps, chain.sigma, chain._eu, chain._ev, chain._J,
                                   chain._sgn, chain._p, chain.eta, chain._parent, chain._rel,
                                   chain._cid, chain._draws, rec_u, rec_v, buf)
        chain.time += done
        if bad >= 0:
            raise ConsistencyError(f"sign inconsistency on edge {bad} at step {chain.time + 1}")
    t = np.arange(chain.time - sweeps + 1, chain.time + 1, dtype=np.int64)
    return Series(t, {"edge_products": out.astype(np.float64)})


def state_trajectory(chain: SwChain, sweeps: int) -> np.ndarray:
    """Bit-packed states after each of ``sweeps`` steps (tiny boxes only)."""
    n = chain.sigma.size
    if n > 62:
        raise ParameterError("state packing needs at most 62 sites")
    weights = 1 << np.arange(n, dtype=np.int64)
    states = np.empty(sweeps + 1, dtype=np.int64)
    states[0] = int(((chain.sigma > 0) * weights).sum())
    for k in range(sweeps):
        sw_sweep(chain)
        states[k + 1] = int(((chain.sigma > 0) * weights).sum())
    return states
