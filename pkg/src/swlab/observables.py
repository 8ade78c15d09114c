"""Magnetization, accordance, the band events and estimators on time series.

The events are

    S^+(delta) = {K(band, s) >= 1 - delta},   S^-(delta) = {K(band, s) <= -1 + delta}

where ``band`` is the edge boundary of ``B_2l`` of a planted gadget.
"""

from __future__ import annotations

import math
from math import comb
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.stats import binomtest

from .disorder import GadgetParams, gadget_geometry
from .errors import (
    DegenerateInputError,
    InsufficientDataError,
    InsufficientSignalError,
    ParameterError,
    PreconditionError,
)
from .lattice import LatticeBox, Region
from .model import as_spins
from .spectral import tail_slope

SIGNIFICANCE = 4.0


def magnetization(A: Region, sigma) -> float:
    if A.kind != "vertex":
        raise ParameterError("magnetization needs a vertex region")
    if not len(A):
        raise DegenerateInputError("magnetization of an empty vertex set")
    s = as_spins(sigma, A.box.n_vertices)
    return float(s[A.array].astype(np.int64).sum() / len(A))


def accordance(B: Region, sigma) -> float:
    if B.kind != "edge":
        raise ParameterError("accordance needs an edge region")
    if not len(B):
        raise DegenerateInputError("accordance of an empty edge set")
    s = as_spins(sigma, B.box.n_vertices)
    ends = B.box.edges[B.array]
    return float((s[ends[:, 0]].astype(np.int64) * s[ends[:, 1]]).sum() / len(B))


@dataclass(frozen=True)
class EventSpec:
    """``S^+(delta)`` or ``S^-(delta)`` of a gadget placed in ``box``."""

    box: LatticeBox
    center: tuple[int, ...]
    l: int
    delta: float
    sign: Literal["plus", "minus"]

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(int(c) for c in self.center))
        if not 0 < self.delta < 1:
            raise ParameterError(f"delta must lie in (0, 1), got {self.delta}")
        if self.sign not in ("plus", "minus"):
            raise ParameterError(f"sign must be 'plus' or 'minus', got {self.sign!r}")
        gadget_geometry(self.box, self.center, self.l)  # placement check

    @classmethod
    def from_gadget(cls, box: LatticeBox, params: GadgetParams, sign: str,
                    delta: float | None = None) -> EventSpec:
        return cls(box, params.center, params.l, params.delta if delta is None else delta, sign)

    @property
    def band(self) -> Region:
        return self.box.edge_region(gadget_geometry(self.box, self.center, self.l).band_edges)

    @property
    def band_edges(self) -> np.ndarray:
        return gadget_geometry(self.box, self.center, self.l).band_edges

    def holds_for_sum(self, product_sum) -> np.ndarray:
        """Vectorised indicator from ``sum_{band} s_x s_y`` values."""
        K = np.asarray(product_sum, dtype=np.float64) / self.band_edges.size
        if self.sign == "plus":
            return K >= 1 - self.delta
        return K <= -1 + self.delta


def event_indicator(spec: EventSpec, sigma) -> int:
    K = accordance(spec.band, sigma)
    if spec.sign == "plus":
        return int(K >= 1 - spec.delta)
    return int(K <= -1 + spec.delta)


@dataclass
class SeriesStats:
    name: str
    n: int
    mean: float
    variance: float
    rho: np.ndarray  # rho[t], t = 0 .. t_max
    stderr: np.ndarray  # batch-means standard error of rho[t]
    n_batches: int

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "mean": self.mean,
            "variance": self.variance,
            "rho": [float(x) for x in self.rho],
            "stderr": [float(x) for x in self.stderr],
            "n_batches": self.n_batches,
        }


def estimate_autocorr(series, t_max: int, name: str = "f") -> SeriesStats:
    """Sample autocorrelation ``rho(t)``, ``t <= t_max``, with batch-means errors.

    The autocovariance uses the biased ``1/N`` normalisation.  The series is cut
    into ``ceil(sqrt(N))`` contiguous batches; each batch gives its own estimate
    of ``rho(t)`` (global mean and variance, within-batch pairs) and the standard
    error is the spread of those estimates over ``sqrt(#batches)``.
    """
    x = np.asarray(series, dtype=np.float64)
    n = x.size
    if t_max < 1:
        raise ParameterError("t_max must be at least 1")
    if n < 10 * t_max:
        raise InsufficientDataError(f"series of length {n} is shorter than 10 * t_max = {10 * t_max}")
    mean = float(x.mean())
    y = x - mean
    c0 = float(y @ y) / n
    if c0 <= 0.0 or np.ptp(x) == 0:
        raise DegenerateInputError(f"series {name!r} is constant")
    full = np.fft.irfft(np.abs(np.fft.rfft(y, 2 * n)) ** 2)[: t_max + 1] / n
    rho = full / c0
    rho[0] = 1.0

    n_batches = math.ceil(math.sqrt(n))
    length = n // n_batches
    if length <= t_max:
        raise InsufficientDataError(f"batches of length {length} cannot hold lag {t_max}")
    Y = y[: n_batches * length].reshape(n_batches, length)
    per_batch = np.empty((n_batches, t_max + 1))
    for t in range(t_max + 1):
        per_batch[:, t] = (Y[:, : length - t] * Y[:, t:]).sum(axis=1) / (length * c0)
    stderr = per_batch.std(axis=0, ddof=1) / math.sqrt(n_batches)
    stderr[0] = 0.0
    return SeriesStats(name, n, mean, c0, rho, stderr, n_batches)


def estimate_tau_exp(stats: SeriesStats, threshold: float = SIGNIFICANCE) -> float:
    """Exponential autocorrelation time from the tail of an empirical ``rho``.

    Significant lags are those from ``t = 1`` onwards, without a gap, where
    ``|rho| > threshold * stderr``.  The fit uses the last half of them (at least
    three) and weights each lag by ``(rho / stderr)^2``, the inverse variance of
    ``log|rho|``.
    """
    rho = np.abs(stats.rho[1:])
    se = stats.stderr[1:]
    ok = rho > threshold * se
    n_sig = int(np.argmin(ok)) if not ok.all() else ok.size
    if n_sig < 3:
        raise InsufficientSignalError(f"only {n_sig} significant lags, need at least 3")
    take = max(3, n_sig - n_sig // 2)
    lags = np.arange(n_sig - take + 1, n_sig + 1)
    r = rho[lags - 1]
    w = (r / np.maximum(se[lags - 1], 1e-300)) ** 2
    slope = tail_slope(lags, np.log(r), w)
    if slope >= 0:
        return math.inf
    return -1.0 / slope


@dataclass
class Rate:
    count: int
    trials: int
    value: float
    ci: tuple[float, float]

    def to_dict(self) -> dict:
        return {"count": self.count, "trials": self.trials, "value": self.value, "ci": list(self.ci)}


def wilson_interval(count: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    if trials == 0:
        return (0.0, 1.0)
    ci = binomtest(int(count), int(trials)).proportion_ci(confidence_level=level, method="wilson")
    return (float(ci.low), float(ci.high))


def _rate(count: int, trials: int) -> Rate:
    return Rate(int(count), int(trials), count / trials if trials else 0.0, wilson_interval(count, trials))


@dataclass
class TransitionStats:
    """One-step event transitions and event switches of a series.

    ``minus_to_plus`` is the fraction of sweeps in ``S^-`` followed directly by
    a sweep in ``S^+`` (and vice versa).  ``switches`` counts changes of the
    last event visited, so an excursion ``S^- -> neither -> S^+`` counts once;
    its rate is per sweep.
    """

    minus_to_plus: Rate
    plus_to_minus: Rate
    outside: Rate
    switches: Rate

    def to_dict(self) -> dict:
        return {
            "rate_minus_to_plus": self.minus_to_plus.to_dict(),
            "rate_plus_to_minus": self.plus_to_minus.to_dict(),
            "occupancy_outside": self.outside.to_dict(),
            "switch_rate": self.switches.to_dict(),
        }


def event_transition_frequency(plus, minus) -> TransitionStats:
    plus = np.asarray(plus, dtype=bool)
    minus = np.asarray(minus, dtype=bool)
    if plus.shape != minus.shape or plus.ndim != 1:
        raise ParameterError("plus and minus indicator series must be 1-D and of equal length")
    if np.any(plus & minus):
        raise ParameterError("a sweep lies in both S^+ and S^-")
    n = plus.size
    m2p = int((minus[:-1] & plus[1:]).sum())
    p2m = int((plus[:-1] & minus[1:]).sum())
    outside = int((~plus & ~minus).sum())
    state = np.where(plus, 1, np.where(minus, -1, 0))
    seen = state[state != 0]
    switches = int((seen[1:] != seen[:-1]).sum())
    return TransitionStats(
        minus_to_plus=_rate(m2p, int(minus[:-1].sum())),
        plus_to_minus=_rate(p2m, int(plus[:-1].sum())),
        outside=_rate(outside, n),
        switches=_rate(switches, max(n - 1, 0)),
    )


# -- shell-magnetization lemma ---------------------------------------------


def _shell_lemma_geometry(box: LatticeBox, gadget: GadgetParams):
    geo = gadget_geometry(box, gadget.center, gadget.l)
    n_in, n_out = len(geo.inner_shell), len(geo.outer_shell)
    if not n_in / n_out > 0.5:
        raise PreconditionError(
            f"|dB_2l| / |dB_2(l+1)| = {n_in}/{n_out} is not above 1/2; l is too small"
        )
    return geo


def shell_lemma_holds(K: float, m_inner: float, m_outer: float, delta: float) -> bool:
    """The implication for one configuration, from its three summary numbers."""
    if K >= 1 - delta or K <= -1 + delta:
        return True
    return abs(m_inner) < 1 - delta / 4 or abs(m_outer) < 1 - delta / 4


def lemma41_check(sigma, box: LatticeBox, gadget: GadgetParams, delta: float | None = None) -> bool:
    """Outside ``S^+ u S^-``, one of the two shell magnetizations is below ``1 - delta/4``."""
    delta = gadget.delta if delta is None else delta
    if not 0 < delta < 0.5:
        raise ParameterError(f"delta must lie in (0, 1/2), got {delta}")
    geo = _shell_lemma_geometry(box, gadget)
    band = box.edge_region(geo.band_edges)
    return shell_lemma_holds(accordance(band, sigma), magnetization(geo.inner_shell, sigma),
                         magnetization(geo.outer_shell, sigma), delta)


def shell_lemma_random(box: LatticeBox, gadget: GadgetParams, deltas, n_samples: int,
                   seed: int = 0) -> dict[float, int]:
    """Counterexample counts over random configurations, per delta.

    Half the samples are uniform; the other half start from all +1 and flip
    each spin independently with a probability drawn from ``[0, 1/2]``, which
    puts mass near the event boundaries where the lemma has content.
    """
    geo = _shell_lemma_geometry(box, gadget)
    rng = np.random.default_rng(seed)
    n = box.n_vertices
    flip_p = np.where(np.arange(n_samples) % 2 == 0, 0.5, rng.uniform(0, 0.5, n_samples))
    S = np.where(rng.random((n_samples, n)) < flip_p[:, None], -1, 1).astype(np.int64)
    ends = box.edges[geo.band_edges]
    K = (S[:, ends[:, 0]] * S[:, ends[:, 1]]).mean(axis=1)
    m_in = S[:, geo.inner_shell.array].mean(axis=1)
    m_out = S[:, geo.outer_shell.array].mean(axis=1)
    return {
        float(d): sum(not shell_lemma_holds(k, a, b, d) for k, a, b in zip(K, m_in, m_out))
        for d in deltas
    }


def shell_lemma_exhaustive(box: LatticeBox, gadget: GadgetParams, deltas, max_inner: int = 20) -> dict:
    """Exhaustive counterexample search over every spin assignment of the two shells.

    Only the shells enter the lemma.  Every outer-shell vertex has at most one
    band edge, so once the inner spins are fixed an outer configuration is
    summarised by three counts: agreeing partners of +1 inner ends, agreeing
    partners of -1 inner ends, and +1 spins among outer vertices without a band
    edge.  Each count class is checked once; ``weight`` totals the number of
    configurations covered.
    """
    geo = _shell_lemma_geometry(box, gadget)
    inner = geo.inner_shell.array
    outer = geo.outer_shell.array
    if inner.size > max_inner:
        raise ParameterError(f"{inner.size} inner-shell spins exceed the cap of {max_inner}")
    pos_in = {int(v): k for k, v in enumerate(inner)}
    ends = box.edges[geo.band_edges]
    inside = geo.B2.mask()
    inner_end = np.where(inside[ends[:, 0]], ends[:, 0], ends[:, 1])
    outer_end = np.where(inside[ends[:, 0]], ends[:, 1], ends[:, 0])
    if np.unique(outer_end).size != outer_end.size:
        raise PreconditionError("an outer-shell vertex carries two band edges")
    edge_inner = np.array([pos_in[int(v)] for v in inner_end])
    n_band, n_in, n_out = ends.shape[0], inner.size, outer.size
    free = n_out - n_band

    bits = (np.arange(2**n_in, dtype=np.int64)[:, None] >> np.arange(n_in)) & 1
    spins = 2 * bits - 1
    sum_in = spins.sum(axis=1)
    m_plus = (spins[:, edge_inner] > 0).sum(axis=1)

    counts = {float(d): 0 for d in deltas}
    weight = 0
    for mp in np.unique(m_plus):
        mm = n_band - mp
        rows = m_plus == mp
        s_in = sum_in[rows]
        s_vals, s_counts = np.unique(s_in, return_counts=True)
        for xp in range(mp + 1):  # +1 outer partners of +1 inner ends (agreeing)
            for xn in range(mm + 1):  # -1 outer partners of -1 inner ends (agreeing)
                k_sum = 2 * (xp + xn) - n_band
                for c in range(free + 1):
                    plus_out = xp + (mm - xn) + c
                    m_out = (2 * plus_out - n_out) / n_out
                    mult = comb(mp, xp) * comb(mm, xn) * comb(free, c)
                    weight += mult * int(rows.sum())
                    K = k_sum / n_band
                    for d in counts:
                        for a, n_a in zip(s_vals, s_counts):
                            if not shell_lemma_holds(K, a / n_in, m_out, d):
                                counts[d] += int(n_a) * mult
    return {"counterexamples": counts, "configurations": weight,
            "expected_configurations": 2 ** (n_in + n_out)}
