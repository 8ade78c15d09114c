"""Canned experiments: the torpidity trend on planted gadgets and the ferromagnet contrast.

Torpid runs reuse the same replica seeds for every ``l`` so the trend can be
judged by paired sign tests across replicas.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import binomtest

from .bounds import bounds_report
from .config import ExperimentConfig, RunManifest, software_digest
from .disorder import CouplingField, DisorderSpec, GadgetParams, build_gadget, sample_couplings, verify_gadget
from .dynamics import Series, SwChain, edge_product_series, replica_seed
from .errors import PreconditionError, SwlabError
from .io import write_series
from .lattice import LatticeBox
from .model import GibbsModel
from .observables import EventSpec, estimate_autocorr, estimate_tau_exp, event_transition_frequency
from .spectral import exact_transition_matrix, spectrum

FERRO_BETAS = (0.5, 1.0, 2.0, 4.0, 8.0)
FOUR_CYCLE_FERRO = (1.0, 1.0, 1.0, 1.0)
# edge order of the 2x2 box is (0,2), (0,1), (1,3), (2,3); one antiferromagnetic bond
FOUR_CYCLE_FRUSTRATED = (1.0, 1.0, 1.0, -1.0)
BETA_WARN = 4.0


def _finite(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else ("inf" if x > 0 else "nan")


def gadget_setup(cfg: ExperimentConfig, l: int) -> tuple[CouplingField, GadgetParams]:
    """Coupling field with a verified gadget of size ``l``."""
    if "path" in cfg.base_field:
        base = CouplingField.load(cfg.base_field["path"])
        box = base.box
        center = cfg.centers.get(str(l)) or [a + box.side // 2 for a in box.anchor]
        params = GadgetParams(l, cfg.delta, cfg.s, tuple(center), cfg.rho_d, cfg.pinning)
        field = base
    else:
        side = 4 * l + 2 * cfg.margin
        box = LatticeBox(cfg.dim, side)
        center = cfg.centers.get(str(l)) or [cfg.margin + 2 * l] * cfg.dim
        spec = DisorderSpec(**cfg.base_field)
        seed = replica_seed(cfg.base_seed, 10_000 + l) if cfg.pinning == "sampled" else None
        params = GadgetParams(l, cfg.delta, cfg.s, tuple(center), cfg.rho_d, cfg.pinning, seed)
        field = build_gadget(sample_couplings(box, spec), params)
    report = verify_gadget(field, params)
    if not report.passed:
        raise PreconditionError("gadget does not verify:\n" + report.summary())
    return field, params


@dataclass(frozen=True)
class ReplicaJob:
    field_json: str
    params: GadgetParams
    beta: float
    replica: int
    seed: int
    sweeps: int
    burn_in: int
    t_max: int
    observables: tuple[str, ...]
    csv_path: str | None


def run_replica(job: ReplicaJob) -> dict:
    field = CouplingField.from_json(job.field_json)
    box = field.box
    model = GibbsModel(field, job.beta)
    plus = EventSpec.from_gadget(box, job.params, "plus")
    minus = EventSpec.from_gadget(box, job.params, "minus")
    chain = SwChain(model, seed=job.seed)
    out: dict = {"l": job.params.l, "beta": job.beta, "replica": job.replica, "seed": job.seed}
    try:
        series = edge_product_series(chain, plus.band_edges, job.sweeps, job.burn_in)
    except SwlabError as exc:
        out["error"] = str(exc)
        return out
    prod = series["edge_products"]
    in_plus = plus.holds_for_sum(prod)
    in_minus = minus.holds_for_sum(prod)
    cols = {
        "band_accordance": prod / plus.band_edges.size,
        "in_plus": in_plus.astype(np.float64),
        "in_minus": in_minus.astype(np.float64),
    }
    if job.csv_path:
        write_series(job.csv_path, Series(series.t, {k: cols[k] for k in job.observables}))
        out["csv"] = job.csv_path
    trans = event_transition_frequency(in_plus, in_minus)
    out["transitions"] = trans.to_dict()
    out["switch_rate"] = trans.switches.value
    out["occupancy_minus"] = float(in_minus.mean()) if in_minus.size else 0.0
    out["rho1"] = out["tau_hat"] = None
    f = cols["in_minus"]
    if f.size and np.ptp(f) > 0:
        t_max = min(job.t_max, f.size // 10)
        try:
            stats = estimate_autocorr(f, t_max, name="in_minus")
            out["rho1"] = float(stats.rho[1])
            out["tau_hat"] = _finite(estimate_tau_exp(stats))
        except SwlabError as exc:
            out["tau_note"] = str(exc)
    else:
        out["tau_note"] = "indicator of S^- is constant over the run"
    return out


def _tau_value(r: dict) -> float:
    t = r.get("tau_hat")
    if t is None:
        return math.nan
    return math.inf if t == "inf" else float(t)


def sign_test(before, after, alternative: str) -> dict:
    """Paired sign test of ``after`` vs ``before`` with ties dropped."""
    diff = np.asarray(after, dtype=float) - np.asarray(before, dtype=float)
    ok = ~np.isnan(diff)
    diff = diff[ok]
    pos = int((diff > 0).sum())
    neg = int((diff < 0).sum())
    n = pos + neg
    if n == 0:
        return {"n": 0, "positive": 0, "negative": 0, "p_value": 1.0}
    k = pos if alternative == "greater" else neg
    p = binomtest(k, n, 0.5, alternative="greater").pvalue
    return {"n": n, "positive": pos, "negative": neg, "p_value": float(p)}


def experiment_torpid(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> RunManifest:
    cfg.validate()
    start = time.perf_counter()
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    warnings = [f"beta={b} is below {BETA_WARN}; S^+ and S^- may not be metastable"
                for b in cfg.betas if b < BETA_WARN]

    setups = {l: gadget_setup(cfg, l) for l in cfg.l_values}  # all verified before any chain runs
    seeds = {str(r): replica_seed(cfg.base_seed, r) for r in range(cfg.replicas)}
    jobs = []
    for l, (field, params) in setups.items():
        text = field.to_json()
        for beta in cfg.betas:
            for r in range(cfg.replicas):
                csv = str(out / f"series_l{l}_beta{beta:g}_r{r}.csv") if cfg.write_series else None
                jobs.append(ReplicaJob(text, params, beta, r, seeds[str(r)], cfg.sweeps,
                                       cfg.burn_in, cfg.t_max, tuple(cfg.observables), csv))
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(run_replica, jobs))
    else:
        results = [run_replica(j) for j in jobs]

    complete = not any("error" in r for r in results)
    per_beta = {}
    for beta in cfg.betas:
        rows = {l: [r for r in results if r["l"] == l and r["beta"] == beta] for l in cfg.l_values}
        table = []
        for l in cfg.l_values:
            taus = np.array([_tau_value(r) for r in rows[l]])
            sw = np.array([r.get("switch_rate", math.nan) for r in rows[l]])
            table.append({
                "l": l,
                "median_tau_hat": _finite(np.nanmedian(taus)) if np.any(~np.isnan(taus)) else None,
                "median_switch_rate": _finite(np.nanmedian(sw)) if np.any(~np.isnan(sw)) else None,
                "bounds": bounds_report(cfg.dim, cfg.delta, cfg.s, cfg.rho_d, beta, l).to_dict(),
            })
        tests = []
        for a, b in zip(cfg.l_values, cfg.l_values[1:]):
            ta = [_tau_value(r) for r in rows[a]]
            tb = [_tau_value(r) for r in rows[b]]
            sa = [r.get("switch_rate", math.nan) for r in rows[a]]
            sb = [r.get("switch_rate", math.nan) for r in rows[b]]
            tests.append({"from_l": a, "to_l": b,
                          "tau_increase": sign_test(ta, tb, "greater"),
                          "switch_decrease": sign_test(sa, sb, "less")})
        med_tau = [_tau_value({"tau_hat": row["median_tau_hat"]}) for row in table]
        med_sw = [math.nan if row["median_switch_rate"] is None else float(row["median_switch_rate"])
                  for row in table]
        per_beta[f"{beta:g}"] = {
            "table": table,
            "sign_tests": tests,
            "tau_nondecreasing": bool(all(x <= y for x, y in zip(med_tau, med_tau[1:]))),
            "switch_nonincreasing": bool(all(x >= y for x, y in zip(med_sw, med_sw[1:]))),
            "sign_tests_significant": bool(all(
                t["tau_increase"]["p_value"] < 0.05 and t["switch_decrease"]["p_value"] < 0.05
                for t in tests)),
        }
    summary = {"kind": "torpid", "per_beta": per_beta, "replicas": results, "warnings": warnings}
    manifest = RunManifest(
        config=cfg.to_dict(),
        seeds={"base_seed": cfg.base_seed, "replica_seeds": seeds},
        software=software_digest(),
        outputs=[r["csv"] for r in results if "csv" in r],
        wall_clock_s=time.perf_counter() - start,
        summary=summary,
        complete=complete,
    )
    manifest.save(out / "manifest.json")
    return manifest


def four_cycle(couplings) -> CouplingField:
    return CouplingField(LatticeBox(2, 2), np.asarray(couplings, dtype=np.float64),
                         {"disorder": {"distribution": "fixed"}, "gadgets": []})


def ferro_contrast_curves(betas=FERRO_BETAS) -> list[dict]:
    """Exact ``lambda_1`` on the ferromagnetic and the frustrated 4-cycle at each beta."""
    rows = []
    for beta in betas:
        for name, J in (("ferromagnetic", FOUR_CYCLE_FERRO), ("frustrated", FOUR_CYCLE_FRUSTRATED)):
            model = GibbsModel(four_cycle(J), float(beta))
            rep = spectrum(exact_transition_matrix(model), model)
            rows.append({"beta": float(beta), "field": name, "lambda1": rep.lambda1, "R": rep.R,
                         "tau_exp": _finite(rep.tau_exp)})
    return rows


def experiment_ferro_contrast(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> RunManifest:
    """Exact 4-cycle curves, plus simulated ``rho(1)`` of the band accordance when ``sweeps > 0``.

    The simulated part compares the gadget field of the first ``l`` with a
    uniform ferromagnet on the same box, one replica per beta.
    """
    cfg.validate()
    start = time.perf_counter()
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    curves = ferro_contrast_curves(cfg.betas)
    simulated = []
    if cfg.sweeps > 0:
        l = cfg.l_values[0]
        gadget_field, params = gadget_setup(cfg, l)
        ferro = sample_couplings(gadget_field.box, DisorderSpec("constant", value=1.0))
        band = EventSpec.from_gadget(gadget_field.box, params, "plus").band_edges
        seed = replica_seed(cfg.base_seed, 0)
        for beta in cfg.betas:
            for name, field in (("ferromagnetic", ferro), ("gadget", gadget_field)):
                chain = SwChain(GibbsModel(field, beta), seed=seed)
                K = edge_product_series(chain, band, cfg.sweeps, cfg.burn_in)["edge_products"]
                row = {"beta": float(beta), "field": name, "l": l, "rho1": None}
                if np.ptp(K) > 0 and K.size >= 10:
                    row["rho1"] = float(estimate_autocorr(K, 1).rho[1])
                simulated.append(row)
    by = {(r["beta"], r["field"]): r["lambda1"] for r in curves}
    top = max(cfg.betas)
    summary = {
        "kind": "ferro-contrast",
        "exact": curves,
        "simulated": simulated,
        "frustrated_exceeds_ferro_at_max_beta": bool(by[(top, "frustrated")] > by[(top, "ferromagnetic")]),
    }
    manifest = RunManifest(
        config=cfg.to_dict(),
        seeds={"base_seed": cfg.base_seed, "replica_seeds": {"0": replica_seed(cfg.base_seed, 0)}},
        software=software_digest(),
        outputs=[],
        wall_clock_s=time.perf_counter() - start,
        summary=summary,
    )
    manifest.save(out / "manifest.json")
    return manifest
