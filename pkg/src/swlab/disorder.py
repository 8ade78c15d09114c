"""Quenched coupling fields: i.i.d. sampling, the reflection-antisymmetric gadget, checks.

The gadget lives in a cube ``B_4l`` and has three parts:

* a weak outer shell on the edge boundary of ``B_4l`` (total ``|J|`` below ``1/l^2``),
* strong ferromagnetic bulk couplings in ``(1 - 1/l^d, 1]`` on the interior edges,
* an alternating band on the edge boundary of ``B_2l``: couplings near ``a_d`` or
  near ``-s*a_d``, arranged so that the point reflection of ``B_4l`` swaps the
  two bands.

Band intervals are intersected with the half-line of their intended sign (see
:func:`band_intervals`); for large ``l`` this is a no-op.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Literal

import numpy as np

from .errors import ParameterError, PlacementError, SwlabError
from .lattice import CubeSpec, LatticeBox, Region, edge_boundary, edges_within, vertex_boundary

DEFAULT_RHO_D = 0.5


@dataclass(frozen=True)
class DisorderSpec:
    """Distribution of i.i.d. couplings.

    ``distribution`` is ``"uniform"`` (on ``[-1, 1]``), ``"gaussian"`` (mean 0,
    standard deviation ``scale``) or ``"constant"`` (every coupling ``value``).
    """

    distribution: Literal["uniform", "gaussian", "constant"] = "uniform"
    seed: int = 0
    scale: float = 1.0
    value: float = 1.0

    def __post_init__(self):
        if self.distribution not in ("uniform", "gaussian", "constant"):
            raise ParameterError(f"unknown distribution {self.distribution!r}")
        if self.distribution == "gaussian" and not self.scale > 0:
            raise ParameterError(f"gaussian stddev must be positive, got {self.scale}")
        if self.distribution == "constant" and not math.isfinite(self.value):
            raise ParameterError("constant coupling must be finite")

    def to_dict(self) -> dict:
        d = {"distribution": self.distribution, "seed": int(self.seed)}
        if self.distribution == "gaussian":
            d["scale"] = float(self.scale)
        if self.distribution == "constant":
            d["value"] = float(self.value)
        return d


@dataclass(frozen=True, eq=False)
class CouplingField:
    """One real coupling per edge of ``box``, in canonical edge order."""

    box: LatticeBox
    couplings: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        J = np.array(self.couplings, dtype=np.float64)
        if J.shape != (self.box.n_edges,):
            raise ParameterError(f"expected {self.box.n_edges} couplings, got shape {J.shape}")
        if not np.all(np.isfinite(J)):
            raise ParameterError("couplings must be finite")
        J.setflags(write=False)
        object.__setattr__(self, "couplings", J)
        # normalise through JSON so that serialisation round-trips exactly
        object.__setattr__(self, "meta", json.loads(json.dumps(self.meta, sort_keys=True)))

    def __getitem__(self, edge: int) -> float:
        return float(self.couplings[edge])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CouplingField)
            and self.box == other.box
            and np.array_equal(self.couplings, other.couplings)
            and self.meta == other.meta
        )

    def with_couplings(self, couplings: np.ndarray, meta: dict | None = None) -> CouplingField:
        return CouplingField(self.box, couplings, self.meta if meta is None else meta)

    def to_json(self) -> str:
        head = {
            "dim": self.box.dim,
            "side": self.box.side,
            "anchor": list(self.box.anchor),
            "meta": self.meta,
        }
        lines = [
            f"[{int(a)}, {int(b)}, {float(j)!r}]"
            for (a, b), j in zip(self.box.edges, self.couplings)
        ]
        body = json.dumps(head, sort_keys=True)[:-1]
        return body + ', "edges": [\n' + ",\n".join(lines) + "\n]}\n"

    @classmethod
    def from_json(cls, text: str) -> CouplingField:
        try:
            doc = json.loads(text)
            box = LatticeBox(int(doc["dim"]), int(doc["side"]), tuple(doc["anchor"]))
            rows = doc["edges"]
        except (KeyError, TypeError, ValueError) as exc:
            raise SwlabError(f"malformed coupling-field document: {exc}") from exc
        if len(rows) != box.n_edges:
            raise SwlabError(f"expected {box.n_edges} edges, found {len(rows)}")
        ends = np.array([[r[0], r[1]] for r in rows], dtype=np.int64).reshape(-1, 2)
        if not np.array_equal(ends, box.edges):
            bad = int(np.flatnonzero(np.any(ends != box.edges, axis=1))[0])
            raise SwlabError(f"edge {bad} is not in canonical order: {rows[bad][:2]}")
        return cls(box, np.array([float(r[2]) for r in rows]), doc.get("meta", {}))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> CouplingField:
        return cls.from_json(Path(path).read_text())


def sample_couplings(box: LatticeBox, spec: DisorderSpec) -> CouplingField:
    """Draw one coupling per edge, in canonical edge order, from ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    n = box.n_edges
    if spec.distribution == "uniform":
        J = rng.uniform(-1.0, 1.0, size=n)
    elif spec.distribution == "gaussian":
        J = rng.normal(0.0, spec.scale, size=n)
    else:
        J = np.full(n, float(spec.value))
    return CouplingField(box, J, {"disorder": spec.to_dict(), "gadgets": []})


@dataclass(frozen=True)
class GadgetParams:
    """Placement and parameters of one gadget ``B_4l(center)``."""

    l: int
    delta: float
    s: float
    center: tuple[int, ...]
    rho_d: float = DEFAULT_RHO_D
    pinning: Literal["midpoint", "sampled"] = "midpoint"
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(int(c) for c in self.center))
        if self.l < 2:
            raise ParameterError(f"gadget needs l >= 2, got {self.l}")
        if not 0 < self.delta < 0.5:
            raise ParameterError(f"delta must lie in (0, 1/2), got {self.delta}")
        if not 0 < self.s < 1 - 2 * self.delta:
            raise ParameterError(f"s must lie in (0, 1 - 2*delta) = (0, {1 - 2 * self.delta}), got {self.s}")
        if not 0 < self.rho_d <= 1:
            raise ParameterError(f"rho_d must lie in (0, 1], got {self.rho_d}")
        if self.pinning not in ("midpoint", "sampled"):
            raise ParameterError(f"unknown pinning {self.pinning!r}")
        if self.pinning == "sampled" and self.seed is None:
            raise ParameterError("sampled pinning needs a seed")

    @property
    def a_d(self) -> float:
        return self.rho_d * self.delta / 2

    def at(self, center) -> GadgetParams:
        return replace(self, center=tuple(center))

    def to_dict(self) -> dict:
        return {
            "l": self.l,
            "delta": self.delta,
            "s": self.s,
            "rho_d": self.rho_d,
            "a_d": self.a_d,
            "center": list(self.center),
            "pinning": self.pinning,
            "seed": self.seed,
            "parity_frame": "absolute",
        }


@dataclass(frozen=True, eq=False)
class GadgetGeometry:
    """Vertex and edge sets of a gadget placement, plus the reflection maps."""

    box: LatticeBox
    center: tuple[int, ...]
    l: int
    cube4: CubeSpec
    B4: Region
    B2: Region
    B2p: Region
    inner_shell: Region  # vertex boundary of B_2l
    outer_shell: Region  # vertex boundary of B_2(l+1)
    shell_edges: np.ndarray  # edge boundary of B_4l
    bulk_edges: np.ndarray  # E(B_4l) minus the band
    band_edges: np.ndarray  # edge boundary of B_2l
    band_inner: np.ndarray  # endpoint of each band edge inside B_2l
    band_reflected: np.ndarray  # position (in band_edges) of the reflected edge
    band_rule2: np.ndarray  # True when the edge leaves B_2l through a positive face
    band_even: np.ndarray  # parity of the inner endpoint (absolute coordinates)
    reflect_vertex: np.ndarray  # vertex -> reflected vertex inside B_4l, -1 elsewhere


@lru_cache(maxsize=256)
def gadget_geometry(box: LatticeBox, center: tuple[int, ...], l: int) -> GadgetGeometry:
    center = tuple(int(c) for c in center)
    if len(center) != box.dim:
        raise PlacementError(f"center {center} has wrong dimension for {box}")
    cube4 = CubeSpec(center, 4 * l)
    if not cube4.fits_in(box):
        raise PlacementError(f"B_4l with l={l} around {center} does not fit inside {box}")
    B4 = cube4.region(box)
    B2 = CubeSpec(center, 2 * l).region(box)
    B2p = CubeSpec(center, 2 * (l + 1)).region(box)

    inside4 = B4.mask()
    inside2 = B2.mask()
    shell_edges = edge_boundary(B4).array
    band_edges = edge_boundary(B2).array
    interior = edges_within(B4).array
    bulk_edges = np.setdiff1d(interior, band_edges)

    refl = np.full(box.n_vertices, -1, dtype=np.int64)
    idx4 = B4.array
    refl[idx4] = box.indices_of(cube4.reflect(box.coords[idx4]))

    ends = box.edges[band_edges]
    first_in = inside2[ends[:, 0]]
    inner = np.where(first_in, ends[:, 0], ends[:, 1])
    # edges are stored lower endpoint first, so the inner endpoint is the lower
    # one exactly when the edge leaves B_2l in the +axis direction
    rule2 = first_in

    position = {int(e): k for k, e in enumerate(band_edges)}
    reflected = np.empty(band_edges.size, dtype=np.int64)
    for k, (a, b) in enumerate(ends):
        reflected[k] = position[box.edge_index(int(refl[a]), int(refl[b]))]
    even = box.coords[inner].sum(axis=1) % 2 == 0

    for arr in (shell_edges, bulk_edges, band_edges, inner, reflected, rule2, even, refl):
        arr.setflags(write=False)
    assert np.all(inside4[box.edges[interior]])
    return GadgetGeometry(
        box=box,
        center=center,
        l=l,
        cube4=cube4,
        B4=B4,
        B2=B2,
        B2p=B2p,
        inner_shell=vertex_boundary(B2),
        outer_shell=vertex_boundary(B2p),
        shell_edges=shell_edges,
        bulk_edges=bulk_edges,
        band_edges=band_edges,
        band_inner=inner,
        band_reflected=reflected,
        band_rule2=rule2,
        band_even=even,
        reflect_vertex=refl,
    )


def band_intervals(params: GadgetParams) -> dict[str, tuple[float, float]]:
    """Open intervals for the two band values, the bulk and the shell budget.

    ``positive`` is ``(a_d - 1/l^d, a_d)`` cut at 0 from below and ``negative``
    is ``(-s*a_d, -s*a_d + 1/l^d)`` cut at 0 from above, so the two bands keep
    opposite signs even when ``1/l^d`` exceeds ``a_d``.  ``bulk`` is half-open
    on the left: ``(1 - 1/l^d, 1]``.
    """
    d = len(params.center)
    width = 1.0 / params.l**d
    a = params.a_d
    sa = params.s * a
    return {
        "positive": (max(0.0, a - width), a),
        "negative": (-sa, min(0.0, -sa + width)),
        "bulk": (1.0 - width, 1.0),
        "shell_budget": (0.0, 1.0 / params.l**2),
    }


def _in_open(x: np.ndarray, iv: tuple[float, float]) -> np.ndarray:
    return (x > iv[0]) & (x < iv[1])


def _draw_open(rng: np.random.Generator, iv: tuple[float, float], size: int) -> np.ndarray:
    lo, hi = iv
    out = rng.uniform(lo, hi, size=size)
    bad = out <= lo
    while np.any(bad):
        out[bad] = rng.uniform(lo, hi, size=int(bad.sum()))
        bad = out <= lo
    return out


def build_gadget(field: CouplingField, params: GadgetParams) -> CouplingField:
    """Overwrite the couplings on ``E(B_4l)`` and its edge boundary with the gadget.

    Midpoint pinning puts every coupling at the midpoint of its interval and
    gives each shell edge ``1/(2 l^2 |shell|)``.  Sampled pinning draws
    uniformly inside the same intervals from ``params.seed``.
    """
    box = field.box
    geo = gadget_geometry(box, params.center, params.l)
    iv = band_intervals(params)
    J = field.couplings.copy()
    n_shell = geo.shell_edges.size
    n_band = geo.band_edges.size

    # band assignment: True = positive band
    positive = np.zeros(n_band, dtype=bool)
    primary = np.flatnonzero(geo.band_rule2)
    positive[primary] = geo.band_even[primary]
    secondary = geo.band_reflected[primary]
    positive[secondary] = ~positive[primary]

    if params.pinning == "midpoint":
        mid = {k: 0.5 * (lo + hi) for k, (lo, hi) in iv.items()}
        if n_shell:
            J[geo.shell_edges] = 1.0 / (2 * params.l**2 * n_shell)
        J[geo.bulk_edges] = mid["bulk"]
        J[geo.band_edges] = np.where(positive, mid["positive"], mid["negative"])
    else:
        rng = np.random.default_rng(params.seed)
        if n_shell:
            J[geo.shell_edges] = _draw_open(rng, (0.0, 1.0 / (params.l**2 * n_shell)), n_shell)
        lo, hi = iv["bulk"]
        # (lo, 1]: reflect a draw from [lo, 1) to (lo, 1]
        J[geo.bulk_edges] = hi - rng.uniform(0.0, hi - lo, size=geo.bulk_edges.size)
        n_pos = int(positive.sum())
        vals = np.empty(n_band)
        vals[positive] = _draw_open(rng, iv["positive"], n_pos)
        vals[~positive] = _draw_open(rng, iv["negative"], n_band - n_pos)
        J[geo.band_edges] = vals

    meta = json.loads(json.dumps(field.meta))
    meta.setdefault("gadgets", []).append(params.to_dict())
    return field.with_couplings(J, meta)


@dataclass
class CheckResult:
    passed: bool
    offending: list[int]
    detail: str = ""


@dataclass
class GadgetReport:
    center: tuple[int, ...]
    l: int
    checks: dict[str, CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def to_dict(self) -> dict:
        return {
            "center": list(self.center),
            "l": self.l,
            "passed": self.passed,
            "checks": {
                k: {"passed": c.passed, "offending": c.offending, "detail": c.detail}
                for k, c in self.checks.items()
            },
        }

    def summary(self) -> str:
        lines = [f"gadget l={self.l} at {self.center}: {'PASS' if self.passed else 'FAIL'}"]
        for name, c in self.checks.items():
            tail = f" offending edges {c.offending[:10]}" if c.offending else ""
            lines.append(f"  {name:14s} {'ok' if c.passed else 'FAILED'} {c.detail}{tail}")
        return "\n".join(lines)


def verify_gadget(field: CouplingField, params: GadgetParams) -> GadgetReport:
    """Check the gadget rules at ``params.center`` and list offending edges."""
    try:
        geo = gadget_geometry(field.box, params.center, params.l)
    except PlacementError as exc:
        fail = CheckResult(False, [], str(exc))
        return GadgetReport(params.center, params.l, {"placement": fail})
    J = field.couplings
    iv = band_intervals(params)
    checks: dict[str, CheckResult] = {}

    shell_sum = float(np.abs(J[geo.shell_edges]).sum())
    budget = iv["shell_budget"][1]
    checks["shell"] = CheckResult(
        shell_sum < budget,
        [] if shell_sum < budget else [int(e) for e in geo.shell_edges],
        f"sum|J|={shell_sum:.6g} budget={budget:.6g}",
    )

    lo, hi = iv["bulk"]
    jb = J[geo.bulk_edges]
    bad = geo.bulk_edges[~((jb > lo) & (jb <= hi))]
    checks["bulk"] = CheckResult(bad.size == 0, [int(e) for e in bad], f"interval ({lo:.6g}, {hi:.6g}]")

    jband = J[geo.band_edges]
    in_pos = _in_open(jband, iv["positive"])
    in_neg = _in_open(jband, iv["negative"])
    r2 = geo.band_rule2
    want_pos = geo.band_even
    ok_band = np.where(want_pos, in_pos, in_neg) | ~r2
    bad = geo.band_edges[~ok_band]
    checks["bands"] = CheckResult(bad.size == 0, [int(e) for e in bad], "parity rule on positive faces")

    ok_anti = (in_pos & in_neg[geo.band_reflected]) | (in_neg & in_pos[geo.band_reflected])
    bad = geo.band_edges[~ok_anti]
    checks["antisymmetry"] = CheckResult(bad.size == 0, [int(e) for e in bad], "J_e and J_Re in opposite bands")
    return GadgetReport(params.center, params.l, checks)


def scan_for_gadget(field: CouplingField, params: GadgetParams) -> list[tuple[int, ...]]:
    """All centers where a gadget with ``params`` (apart from its center) verifies.

    For i.i.d. fields at any interesting ``l`` the chance of a natural hit is
    astronomically small; experiments plant gadgets with :func:`build_gadget`.
    """
    box = field.box
    half = 2 * params.l
    ranges = [range(a + half, a + box.side - half + 1) for a in box.anchor]
    hits = []
    lo_bulk = band_intervals(params)["bulk"][0]
    J = field.couplings
    for center in np.array(np.meshgrid(*ranges, indexing="ij")).reshape(box.dim, -1).T:
        center = tuple(int(c) for c in center)
        geo = gadget_geometry(box, center, params.l)
        if J[geo.bulk_edges].min() <= lo_bulk:
            continue
        if verify_gadget(field, params.at(center)).passed:
            hits.append(center)
    return hits
