"""Exact Swendsen-Wang kernels on tiny boxes and their spectral analysis.

The kernel row of a state is assembled by enumerating every bond subset of its
satisfied edges, weighting it by its Bernoulli probability, and spreading the
weight uniformly over the ``2^c`` spin states obtained by flipping whole
clusters.  Rows of ``s`` and ``-s`` coincide up to a global flip, so only half
of the rows are enumerated.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import (
    CapacityError,
    DegenerateInputError,
    InsufficientSignalError,
    ParameterError,
    PreconditionError,
)
from .model import ENUMERATION_CAP, GibbsModel, sw_invariant_gibbs, sw_invariant_log_gibbs

BOND_CAP = 20
DB_TOLERANCE = 1e-10
ZERO_RADIUS = 1e-12
RHO_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Dense row-stochastic kernel over bit-packed spin states."""

    matrix: np.ndarray
    n_sites: int

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


@numba.njit(cache=True)
def _uf_find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@numba.njit(cache=True)
def _kernel_rows(n, eu, ev, J, p, q, out):
    n_states = 1 << n
    half = n_states >> 1 if n > 0 else 1
    m = J.size
    spins = np.empty(n, np.int64)
    act = np.empty(m, np.int64)
    parent = np.empty(n, np.int64)
    label = np.empty(n, np.int64)
    cmask = np.empty(n, np.int64)
    for w in range(half):
        for v in range(n):
            spins[v] = 1 if (w >> v) & 1 else -1
        k = 0
        for e in range(m):
            if J[e] * spins[eu[e]] * spins[ev[e]] > 0:
                act[k] = e
                k += 1
        for mask in range(1 << k):
            wt = 1.0
            for i in range(k):
                if (mask >> i) & 1:
                    wt *= p[act[i]]
                else:
                    wt *= q[act[i]]
            if wt == 0.0:
                continue
            for v in range(n):
                parent[v] = v
            for i in range(k):
                if (mask >> i) & 1:
                    a = _uf_find(parent, eu[act[i]])
                    b = _uf_find(parent, ev[act[i]])
                    if a < b:
                        parent[b] = a
                    elif b < a:
                        parent[a] = b
            c = 0
            for v in range(n):
                r = _uf_find(parent, v)
                if r == v:
                    label[v] = c
                    cmask[c] = 0
                    c += 1
                cmask[label[r]] |= 1 << v
            share = wt / (1 << c)
            tau = 0
            out[w, w] += share
            for g in range(1, 1 << c):
                bit = 0
                while not (g >> bit) & 1:
                    bit += 1
                tau ^= cmask[bit]
                out[w, w ^ tau] += share
    full = n_states - 1
    for w in range(half):
        for x in range(n_states):
            out[w ^ full, x ^ full] = out[w, x]


def max_active_bonds(model: GibbsModel) -> int:
    """Largest number of satisfied edges over all states (the per-row bond count)."""
    from .model import all_configurations

    box = model.box
    configs = all_configurations(box.n_vertices)
    e = box.edges
    prod = configs[:, e[:, 0]].astype(np.int64) * configs[:, e[:, 1]]
    return int(((model.couplings * prod) > 0).sum(axis=1).max()) if box.n_edges else 0


def exact_transition_matrix(model: GibbsModel, site_cap: int = ENUMERATION_CAP,
                            bond_cap: int = BOND_CAP) -> TransitionMatrix:
    """The one-sweep kernel ``M(s, s')`` by exhaustive bond enumeration."""
    box = model.box
    n = box.n_vertices
    if n > site_cap:
        raise CapacityError(f"{n} sites exceed the site cap of {site_cap}")
    k = max_active_bonds(model)
    if k > bond_cap:
        raise CapacityError(f"a state has {k} satisfied edges, above the bond cap of {bond_cap}")
    J = np.ascontiguousarray(model.couplings)
    a = model.beta * np.abs(J)
    p = -np.expm1(-a)
    q = np.exp(-a)
    out = np.zeros((2**n, 2**n))
    _kernel_rows(n, np.ascontiguousarray(box.edges[:, 0]), np.ascontiguousarray(box.edges[:, 1]),
                 J, p, q, out)
    return TransitionMatrix(out, n)


def stationary_check(matrix: TransitionMatrix, model: GibbsModel,
                     pi: np.ndarray | None = None) -> tuple[float, float]:
    """``(total-variation error of pi M vs pi, max detailed-balance violation)``.

    ``pi`` defaults to the kernel's invariant measure
    (:func:`~swlab.model.sw_invariant_gibbs`).
    """
    pi = sw_invariant_gibbs(model) if pi is None else np.asarray(pi, dtype=np.float64)
    M = matrix.matrix
    tv = 0.5 * float(np.abs(pi @ M - pi).sum())
    flow = pi[:, None] * M
    residual = float(np.abs(flow - flow.T).max())
    return tv, residual


@dataclass
class SpectralReport:
    eigenvalues: np.ndarray  # descending
    lambda1: float
    R: float
    gap: float
    tau_exp: float
    detailed_balance_residual: float
    stationary_tv_error: float
    model_digest: str = ""
    eigenfunctions: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "lambda1": float(self.lambda1),
            "R": float(self.R),
            "gap": float(self.gap),
            "tau_exp": _json_float(self.tau_exp),
            "db_residual": float(self.detailed_balance_residual),
            "tv_error": float(self.stationary_tv_error),
            "model_digest": self.model_digest,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _json_float(x: float):
    return x if math.isfinite(x) else ("inf" if x > 0 else "nan")


def model_digest(model: GibbsModel) -> str:
    h = hashlib.sha256()
    box = model.box
    h.update(json.dumps([box.dim, box.side, list(box.anchor)]).encode())
    h.update(np.ascontiguousarray(model.couplings, dtype="<f8").tobytes())
    h.update(repr(float(model.beta)).encode())
    return h.hexdigest()[:16]


def tau_from_radius(R: float) -> float:
    """``-1/ln R``; 0 when the radius vanishes, infinite when it reaches 1."""
    if R <= ZERO_RADIUS:
        return 0.0
    if R >= 1.0:
        return math.inf
    return -1.0 / math.log(R)


def _symmetrized(matrix: TransitionMatrix, model: GibbsModel) -> tuple[np.ndarray, np.ndarray]:
    # D^{1/2} M D^{-1/2} in the log domain so large beta cannot overflow
    logpi = sw_invariant_log_gibbs(model)
    M = matrix.matrix
    with np.errstate(divide="ignore"):
        logM = np.log(M)
    S = np.exp(logM + 0.5 * (logpi[:, None] - logpi[None, :]))
    return 0.5 * (S + S.T), logpi


def spectrum(matrix: TransitionMatrix, model: GibbsModel,
             db_tolerance: float = DB_TOLERANCE) -> SpectralReport:
    """Real spectrum of a reversible kernel, descending, with ``lambda_1``, ``R`` and ``tau_exp``.

    ``eigenfunctions[:, k]`` is the right eigenvector of eigenvalue ``k``,
    scaled to unit norm in ``L^2(pi)``.
    """
    tv, residual = stationary_check(matrix, model)
    if residual > db_tolerance:
        raise PreconditionError(
            f"detailed-balance residual {residual:.3g} exceeds {db_tolerance:g}; "
            "the symmetric eigenproblem does not apply"
        )
    S, logpi = _symmetrized(matrix, model)
    vals, vecs = np.linalg.eigh(S)
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    funcs = vecs * np.exp(-0.5 * logpi)[:, None]
    lam1 = float(vals[1]) if vals.size > 1 else 0.0
    R = float(np.abs(vals[1:]).max()) if vals.size > 1 else 0.0
    return SpectralReport(
        eigenvalues=vals,
        lambda1=lam1,
        R=R,
        gap=1.0 - lam1,
        tau_exp=tau_from_radius(R),
        detailed_balance_residual=residual,
        stationary_tv_error=tv,
        model_digest=model_digest(model),
        eigenfunctions=funcs,
    )


def lambda1_power(matrix: TransitionMatrix, model: GibbsModel, tol: float = 1e-13,
                  max_iter: int = 100_000, seed: int = 0) -> float:
    """Largest nontrivial eigenvalue modulus by power iteration on the symmetrised kernel.

    The top eigenvector ``sqrt(pi)`` is projected out at every step.
    """
    S, logpi = _symmetrized(matrix, model)
    top = np.exp(0.5 * logpi)
    top /= np.linalg.norm(top)
    x = np.random.default_rng(seed).standard_normal(S.shape[0])
    lam = 0.0
    for _ in range(max_iter):
        x -= (top @ x) * top
        norm = np.linalg.norm(x)
        if norm == 0.0:
            return 0.0
        x /= norm
        y = S @ x
        y -= (top @ y) * top
        new = float(x @ y)
        if abs(new - lam) < tol * max(1.0, abs(new)):
            return abs(new)
        lam, x = new, y
    return abs(lam)


def _centered(f, pi: np.ndarray) -> tuple[np.ndarray, float]:
    f = np.asarray(f, dtype=np.float64)
    if f.shape != pi.shape:
        raise ParameterError(f"function has shape {f.shape}, expected {pi.shape}")
    g = f - pi @ f
    return g, float(pi @ (g * g))


def autocorr_exact(matrix: TransitionMatrix, model: GibbsModel, f, t: int) -> float:
    """Stationary autocovariance ``C_ff(t)`` by ``t`` matrix-vector products."""
    if t < 0:
        raise ParameterError(f"lag must be non-negative, got {t}")
    return float(autocorr_curve(matrix, model, f, t)[t])


def autocorr_curve(matrix: TransitionMatrix, model: GibbsModel, f, t_max: int) -> np.ndarray:
    """``C_ff(t)`` for ``t = 0 .. t_max``."""
    pi = sw_invariant_gibbs(model)
    g, _ = _centered(f, pi)
    M = matrix.matrix
    out = np.empty(t_max + 1)
    h = g.copy()
    for t in range(t_max + 1):
        out[t] = pi @ (g * h)
        h = M @ h
    return out


def rayleigh_bound(matrix: TransitionMatrix, model: GibbsModel, f) -> float:
    """``C_ff(1) / C_ff(0)``; never exceeds ``lambda_1`` for a reversible kernel."""
    f = np.asarray(f, dtype=np.float64)
    if np.ptp(f) == 0:
        raise DegenerateInputError("f is constant, its variance is zero")
    c = autocorr_curve(matrix, model, f, 1)
    if c[0] <= 0:
        raise DegenerateInputError("f has zero variance under pi")
    return float(c[1] / c[0])


def tail_slope(t: np.ndarray, log_abs_rho: np.ndarray, weights: np.ndarray | None = None) -> float:
    """Least-squares slope of ``log|rho|`` against ``t`` (weighted when ``weights`` given)."""
    t = np.asarray(t, dtype=np.float64)
    w = np.ones_like(t) if weights is None else np.asarray(weights, dtype=np.float64)
    tm = (w * t).sum() / w.sum()
    ym = (w * log_abs_rho).sum() / w.sum()
    return float((w * (t - tm) * (log_abs_rho - ym)).sum() / (w * (t - tm) ** 2).sum())


def tau_exp_from_decay(matrix: TransitionMatrix, model: GibbsModel, f, t_max: int) -> float:
    """Exponential f-autocorrelation time from the tail of the exact ``rho_ff(t)``.

    The fit uses the last half of the lags ``1 <= t <= t_max`` at which
    ``|rho_ff(t)|`` stays above ``1e-12``.
    """
    if t_max < 2:
        raise ParameterError("t_max must be at least 2")
    f = np.asarray(f, dtype=np.float64)
    if np.ptp(f) == 0:
        raise DegenerateInputError("f is constant, its variance is zero")
    c = autocorr_curve(matrix, model, f, t_max)
    if c[0] <= 0:
        raise DegenerateInputError("f has zero variance under pi")
    rho = np.abs(c / c[0])
    above = rho[1:] > RHO_FLOOR
    n_ok = int(np.argmin(above)) if not above.all() else above.size
    if n_ok < 2:
        raise InsufficientSignalError(f"|rho_ff| falls below {RHO_FLOOR:g} after {n_ok} lags")
    lags = np.arange(1, n_ok + 1)
    start = n_ok // 2
    tail = lags[start:] if n_ok - start >= 2 else lags[-2:]
    slope = tail_slope(tail, np.log(rho[tail]))
    if slope >= 0:
        return math.inf
    return -1.0 / slope
