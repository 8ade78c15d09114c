"""Experiment configuration (JSON) and run manifests."""

from __future__ import annotations

import hashlib
import json
import os
import platform
from dataclasses import asdict, dataclass, field, fields
from importlib import metadata
from pathlib import Path
from typing import Literal

import numba
import numpy as np
import scipy

from . import __version__
from .errors import ParameterError, ParseError

SEED_ENV = "SEED"
DEFAULT_SEED = 20240917


@dataclass
class ExperimentConfig:
    """Everything an experiment needs to run and to be rerun.

    ``base_field`` is either ``{"path": <coupling-field file>}`` or a disorder spec
    (``{"distribution": "constant", "value": 1.0}`` and so on) used as the base
    field into which the gadgets are planted.  With a file the gadgets must
    already be present at ``centers`` (one per ``l``; default: the box centre).
    """

    kind: Literal["torpid", "ferro-contrast"] = "torpid"
    dim: int = 2
    l_values: list[int] = field(default_factory=lambda: [2, 3, 4])
    betas: list[float] = field(default_factory=lambda: [8.0])
    replicas: int = 8
    sweeps: int = 100_000
    burn_in: int = 1_000
    base_seed: int = DEFAULT_SEED
    delta: float = 0.25
    s: float = 0.4995
    rho_d: float = 0.5
    pinning: Literal["midpoint", "sampled"] = "midpoint"
    margin: int = 1
    base_field: dict = field(default_factory=lambda: {"distribution": "constant", "value": 1.0})
    centers: dict[str, list[int]] = field(default_factory=dict)
    t_max: int = 200
    observables: list[str] = field(default_factory=lambda: ["band_accordance", "in_plus", "in_minus"])
    write_series: bool = True
    output_dir: str = "runs"
    workers: int = 1
    seed_source: str = "config"

    def validate(self) -> None:
        if self.kind not in ("torpid", "ferro-contrast"):
            raise ParameterError(f"unknown experiment kind {self.kind!r}")
        if self.dim < 1:
            raise ParameterError("dim must be >= 1")
        if not 0 < self.delta < 0.5:
            raise ParameterError(f"delta must lie in (0, 1/2), got {self.delta}")
        if not 0 < self.s < 1 - 2 * self.delta:
            raise ParameterError(f"s must lie in (0, 1 - 2*delta), got {self.s}")
        if not 0 < self.rho_d <= 1:
            raise ParameterError(f"rho_d must lie in (0, 1], got {self.rho_d}")
        if any(l < 2 for l in self.l_values):
            raise ParameterError("every l must be at least 2")
        if any(not b >= 0 for b in self.betas) or not self.betas:
            raise ParameterError("betas must be a non-empty list of non-negative numbers")
        if self.replicas < 1 or self.sweeps < 0 or self.burn_in < 0 or self.workers < 1:
            raise ParameterError("replicas and workers must be >= 1, sweeps and burn_in >= 0")
        if self.margin < 0:
            raise ParameterError("margin must be non-negative")
        if self.t_max < 1:
            raise ParameterError("t_max must be >= 1")
        unknown = set(self.observables) - {"band_accordance", "in_plus", "in_minus"}
        if unknown:
            raise ParameterError(f"unknown observables {sorted(unknown)}")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, doc: dict, env: dict | None = None) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        extra = set(doc) - known
        if extra:
            raise ParameterError(f"unknown config keys {sorted(extra)}")
        cfg = cls(**doc)
        env = os.environ if env is None else env
        if env.get(SEED_ENV):
            try:
                cfg.base_seed = int(env[SEED_ENV])
            except ValueError as exc:
                raise ParameterError(f"{SEED_ENV}={env[SEED_ENV]!r} is not an integer") from exc
            cfg.seed_source = f"env:{SEED_ENV}"
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path, env: dict | None = None) -> ExperimentConfig:
        text = Path(path).read_text()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, line=exc.lineno) from exc
        if not isinstance(doc, dict):
            raise ParseError("config must be a JSON object", line=1)
        return cls.from_dict(doc, env)


def software_digest() -> dict:
    """Package version plus a hash of its source files and the numeric stack versions."""
    h = hashlib.sha256()
    root = Path(__file__).parent
    for p in sorted(root.glob("*.py")):
        h.update(p.name.encode())
        h.update(p.read_bytes())
    try:
        dist = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        dist = None
    return {
        "swlab": __version__,
        "distribution": dist,
        "source_sha256": h.hexdigest(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
    }


@dataclass
class RunManifest:
    config: dict
    seeds: dict
    software: dict
    outputs: list[str]
    wall_clock_s: float
    summary: dict
    complete: bool = True

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_jsonable) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())


def _jsonable(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"{type(x).__name__} is not JSON serialisable")
