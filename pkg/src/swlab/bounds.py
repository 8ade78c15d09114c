"""Closed-form constants and inequalities behind the torpid-mixing argument.

Everything here is plain arithmetic on ``(d, delta, s, rho_d, beta, l)``:

* ``K~1 = d 2^(d-1) delta^2 rho_d^2`` and ``K1 = K~1 / 4`` (probability of
  leaving ``S^+ u S^-``),
* ``K2 = d 2^d (1 - s - 2 delta) delta rho_d`` (Gibbs-weight asymmetry of the
  two events),
* ``K3 = s rho_d delta d 2^(d-5)`` (one-step transition between the events),

plus the Bernoulli large-deviation rate function and the composed bound on
``C_ff(t) / C_ff(0)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

from .disorder import DEFAULT_RHO_D
from .errors import ParameterError, PreconditionError


def a_d(delta: float, rho_d: float = DEFAULT_RHO_D) -> float:
    return rho_d * delta / 2


def _check_params(d: int, delta: float, s: float | None, rho_d: float) -> None:
    if d < 1:
        raise ParameterError(f"dimension must be >= 1, got {d}")
    if not 0 < delta < 0.5:
        raise ParameterError(f"delta must lie in (0, 1/2), got {delta}")
    if not 0 < rho_d <= 1:
        raise ParameterError(f"rho_d must lie in (0, 1], got {rho_d}")
    if s is not None and not 0 < s < 1:
        raise ParameterError(f"s must lie in (0, 1), got {s}")


@dataclass(frozen=True)
class KConstants:
    K_tilde_1: float
    K_1: float
    K_2: float
    K_3: float


def k_constants(d: int, delta: float, s: float, rho_d: float = DEFAULT_RHO_D) -> KConstants:
    _check_params(d, delta, s, rho_d)
    kt1 = d * 2 ** (d - 1) * delta**2 * rho_d**2
    return KConstants(
        K_tilde_1=kt1,
        K_1=kt1 / 4,
        K_2=d * 2**d * (1 - s - 2 * delta) * delta * rho_d,
        K_3=s * rho_d * delta * d * 2.0 ** (d - 5),
    )


def s_interval(delta: float, rho_d: float = DEFAULT_RHO_D) -> tuple[float, float]:
    """Open interval of admissible ``s``.

    With ``u = 1 - 2 delta`` it is ``(max(64 u / (rho delta + 64), u - delta^2 rho / 16), u)``.
    """
    _check_params(1, delta, None, rho_d)
    upper = 1 - 2 * delta
    lower = max(64 * upper / (rho_d * delta + 64), upper - delta**2 * rho_d / 16)
    return lower, upper


def check_constraints(d: int, delta: float, s: float, rho_d: float = DEFAULT_RHO_D) -> dict:
    """The closed-form constraint system and the orderings it is meant to imply, side by side.

    The two disagree: the system's second line ``delta^2 rho^2 > 16 (1 - s - 2 delta)``
    is stronger than ``K1 > K2``, which reduces to ``delta rho > 8 (1 - s - 2 delta)``.
    """
    gap = 1 - s - 2 * delta
    literal = {
        "one_minus_s_minus_2delta_positive": gap > 0,
        "delta2_rho2_gt_16gap": delta**2 * rho_d**2 > 16 * gap,
        "s_rho_delta_gt_64gap": s * rho_d * delta > 64 * gap,
        "s_in_unit_interval": 0 < s < 1,
        "delta_in_half_interval": 0 < delta < 0.5,
    }
    direct: dict[str, bool]
    try:
        K = k_constants(d, delta, s, rho_d)
        direct = {"K2_positive": K.K_2 > 0, "K1_gt_K2": K.K_1 > K.K_2, "K3_gt_K2": K.K_3 > K.K_2}
    except ParameterError:
        direct = {"K2_positive": False, "K1_gt_K2": False, "K3_gt_K2": False}
    return {
        "literal": literal,
        "literal_all": all(literal.values()),
        "direct": direct,
        "direct_all": all(direct.values()),
    }


def rate_function(x: float, p: float) -> float:
    """Relative entropy ``I(x, p) = x ln(x/p) + (1-x) ln((1-x)/(1-p))``.

    ``0 ln 0`` is taken as 0; a positive mass on an impossible outcome gives ``inf``.
    """
    if not (0 <= x <= 1 and 0 <= p <= 1):
        raise ParameterError(f"x and p must lie in [0, 1], got x={x}, p={p}")

    def term(a: float, b: float) -> float:
        if a == 0:
            return 0.0
        if b == 0:
            return math.inf
        return a * math.log(a / b)

    return term(x, p) + term(1 - x, 1 - p)


def bernoulli_tail(N: int, p: float, x: float) -> float:
    """Chernoff bound ``exp(-I(x, p) N)`` on ``P(sum of N Bernoulli(p) < xN)`` for ``x <= p``."""
    if N < 0:
        raise ParameterError(f"N must be non-negative, got {N}")
    if x > p:
        raise ParameterError(f"the lower-tail bound needs x <= p, got x={x} > p={p}")
    return math.exp(-rate_function(x, p) * N)


def event_bound(d: int, delta: float, s: float, rho_d: float, beta: float, l: int) -> float:
    """``exp(-K1 beta l^(d-1))``: Gibbs mass outside ``S^+ u S^-``."""
    return math.exp(-k_constants(d, delta, s, rho_d).K_1 * beta * l ** (d - 1))


def transition_bound(d: int, delta: float, s: float, rho_d: float, beta: float, l: int) -> float:
    """``exp(-K3 beta l^(d-1))``: one-sweep transition between the two events."""
    return math.exp(-k_constants(d, delta, s, rho_d).K_3 * beta * l ** (d - 1))


def torpidity_ratio_bound(d: int, delta: float, s: float, rho_d: float, beta: float, l: int,
                          t: int) -> tuple[float, int]:
    """Bound on ``C_ff(t) / C_ff(0)`` for ``f`` the indicator of ``S^-``, and a time ``t_l``.

    Returns ``(2t [exp(-(K1-K2) B) + 2 exp(-(K3-K2) B)], t_l)`` with
    ``B = beta l^(d-1)`` and ``t_l = floor(exp(min(K1-K2, K3-K2) B / 2))``.
    """
    if t < 0:
        raise ParameterError(f"t must be non-negative, got {t}")
    K = k_constants(d, delta, s, rho_d)
    if not (K.K_1 > K.K_2 and K.K_3 > K.K_2):
        raise PreconditionError(
            f"need K1 > K2 and K3 > K2, got K1={K.K_1:.6g}, K2={K.K_2:.6g}, K3={K.K_3:.6g}"
        )
    B = beta * l ** (d - 1)
    bound = 2 * t * (math.exp(-(K.K_1 - K.K_2) * B) + 2 * math.exp(-(K.K_3 - K.K_2) * B))
    t_l = math.floor(math.exp(min(K.K_1 - K.K_2, K.K_3 - K.K_2) * B / 2))
    return bound, t_l


@dataclass
class BoundsReport:
    d: int
    delta: float
    s: float
    rho_d: float
    beta: float
    l: int
    a_d: float
    K_tilde_1: float
    K_1: float
    K_2: float
    K_3: float
    s_interval: tuple[float, float]
    constraints: dict
    event_bound: float
    transition_bound: float
    t_l: int | None
    ratio_bound_at_t_l: float | None

    def ratio_bound(self, t: int) -> float:
        return torpidity_ratio_bound(self.d, self.delta, self.s, self.rho_d, self.beta, self.l, t)[0]

    def to_dict(self) -> dict:
        out = asdict(self)
        out["s_interval"] = list(self.s_interval)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def table(self) -> str:
        lo, hi = self.s_interval
        rows = [
            f"d={self.d} delta={self.delta} s={self.s} rho_d={self.rho_d} beta={self.beta} l={self.l}",
            f"a_d        {self.a_d:.6g}",
            f"K~1        {self.K_tilde_1:.6g}",
            f"K1         {self.K_1:.6g}",
            f"K2         {self.K_2:.6g}",
            f"K3         {self.K_3:.6g}",
            f"s-interval ({lo:.6f}, {hi:.6f})",
            f"direct orderings hold:   {self.constraints['direct_all']}",
            f"constraint system holds: {self.constraints['literal_all']}",
            f"event bound      {self.event_bound:.6g}",
            f"transition bound {self.transition_bound:.6g}",
        ]
        if self.t_l is not None:
            rows.append(f"t_l={self.t_l} ratio bound {self.ratio_bound_at_t_l:.6g}")
        return "\n".join(rows)


def bounds_report(d: int, delta: float, s: float, rho_d: float = DEFAULT_RHO_D,
                  beta: float = 8.0, l: int = 2) -> BoundsReport:
    K = k_constants(d, delta, s, rho_d)
    cons = check_constraints(d, delta, s, rho_d)
    t_l = ratio = None
    if cons["direct"]["K1_gt_K2"] and cons["direct"]["K3_gt_K2"]:
        ratio, t_l = torpidity_ratio_bound(d, delta, s, rho_d, beta, l, 0)
        ratio = torpidity_ratio_bound(d, delta, s, rho_d, beta, l, t_l)[0]
    return BoundsReport(
        d=d, delta=delta, s=s, rho_d=rho_d, beta=beta, l=l,
        a_d=a_d(delta, rho_d),
        K_tilde_1=K.K_tilde_1, K_1=K.K_1, K_2=K.K_2, K_3=K.K_3,
        s_interval=s_interval(delta, rho_d),
        constraints=cons,
        event_bound=event_bound(d, delta, s, rho_d, beta, l),
        transition_bound=transition_bound(d, delta, s, rho_d, beta, l),
        t_l=t_l,
        ratio_bound_at_t_l=ratio,
    )
