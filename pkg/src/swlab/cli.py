"""Command-line interface: ``swlab <subcommand> ...``.

Exit status is 0 on success, 2 on usage errors and 1 when a library error
(capacity, precondition, parse, failed gadget check, ...) stops the command.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import bounds_report, s_interval
from .config import ExperimentConfig, RunManifest, software_digest
from .disorder import CouplingField, DisorderSpec, GadgetParams, build_gadget, sample_couplings, scan_for_gadget, verify_gadget
from .dynamics import SwChain, replica_seed, run
from .errors import SwlabError
from .experiments import experiment_ferro_contrast, experiment_torpid
from .io import read_series, write_series
from .lattice import LatticeBox
from .model import GibbsModel, hamiltonian
from .observables import EventSpec, accordance, estimate_autocorr, estimate_tau_exp, magnetization
from .spectral import exact_transition_matrix, spectrum


class GadgetCheckFailed(SwlabError):
    pass


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _gadget_args(p: argparse.ArgumentParser, need_center: bool = True) -> None:
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--rho-d", type=float, default=0.5)
    if need_center:
        p.add_argument("--center", type=_ints, required=True, help="comma-separated coordinates")


def _params(args, center=None, **extra) -> GadgetParams:
    c = center if center is not None else args.center
    return GadgetParams(args.l, args.delta, args.s, c, args.rho_d, **extra)


def cmd_gen_disorder(args) -> int:
    box = LatticeBox(args.dim, args.side, args.anchor or ())
    spec = DisorderSpec(args.distribution, args.seed, args.scale, args.value)
    sample_couplings(box, spec).save(args.out)
    print(f"wrote {box.n_edges} couplings to {args.out}")
    return 0


def cmd_plant_gadget(args) -> int:
    field = CouplingField.load(args.field)
    params = _params(args, pinning=args.pinning, seed=args.seed)
    out = build_gadget(field, params)
    out.save(args.out)
    print(verify_gadget(out, params).summary())
    return 0


def cmd_verify_gadget(args) -> int:
    field = CouplingField.load(args.field)
    report = verify_gadget(field, _params(args))
    print(json.dumps(report.to_dict(), indent=2) if args.json else report.summary())
    if not report.passed:
        raise GadgetCheckFailed("gadget verification failed")
    return 0


def cmd_scan_gadget(args) -> int:
    field = CouplingField.load(args.field)
    params = _params(args, center=field.box.anchor)
    hits = scan_for_gadget(field, params)
    print(json.dumps({"centers": [list(c) for c in hits]}))
    return 0


def _start_state(kind: str, n: int, seed: int) -> np.ndarray:
    if kind == "plus":
        return np.ones(n, dtype=np.int8)
    if kind == "minus":
        return -np.ones(n, dtype=np.int8)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2**31,)))
    return rng.choice(np.array([-1, 1], dtype=np.int8), size=n)


def cmd_simulate(args) -> int:
    field = CouplingField.load(args.field)
    model = GibbsModel(field, args.beta)
    box = field.box
    seed = replica_seed(args.seed, args.replica)
    chain = SwChain(model, _start_state(args.start, box.n_vertices, seed), seed=seed)
    observers = {}
    for name in args.observables:
        if name == "magnetization":
            everything = box.all_vertices()
            observers[name] = lambda s, A=everything: magnetization(A, s)
        elif name == "energy":
            observers[name] = lambda s: hamiltonian(model, s)
        elif name == "band_accordance":
            if args.gadget is None:
                raise SwlabError("band_accordance needs --gadget l,x,y,...")
            l, *center = args.gadget
            band = EventSpec(box, tuple(center), l, 0.5, "plus").band
            observers[name] = lambda s, B=band: accordance(B, s)
        else:
            raise SwlabError(f"unknown observable {name!r}")
    start = time.perf_counter()
    series = run(chain, args.sweeps, args.burn_in, observers)
    write_series(args.out, series)
    manifest = RunManifest(
        config={"command": "simulate", **{k: v for k, v in vars(args).items() if k != "func"}},
        seeds={"base_seed": args.seed, "replica": args.replica, "replica_seed": seed},
        software=software_digest(),
        outputs=[args.out],
        wall_clock_s=time.perf_counter() - start,
        summary={"sweeps": len(series), "columns": series.names},
    )
    manifest.save(str(args.out) + ".manifest.json")
    print(f"wrote {len(series)} rows to {args.out}")
    return 0


def cmd_exact(args) -> int:
    field = CouplingField.load(args.field)
    model = GibbsModel(field, args.beta)
    report = spectrum(exact_transition_matrix(model), model)
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text)
    print(f"lambda1={report.lambda1!r} R={report.R!r} tau_exp={report.tau_exp!r}")
    return 0


def cmd_autocorr(args) -> int:
    series = read_series(args.series)
    if args.column not in series.values:
        raise SwlabError(f"column {args.column!r} not in {series.names}")
    stats = estimate_autocorr(series[args.column], args.t_max, name=args.column)
    out = stats.to_dict()
    try:
        tau = estimate_tau_exp(stats)
        out["tau_exp"] = tau if math.isfinite(tau) else "inf"
    except SwlabError as exc:
        out["tau_exp"] = None
        out["tau_note"] = str(exc)
    print(json.dumps(out, indent=2))
    return 0


def cmd_bounds(args) -> int:
    lo, hi = s_interval(args.delta, args.rho_d)
    s = args.s if args.s is not None else 0.5 * (lo + hi)
    rep = bounds_report(args.dim, args.delta, s, args.rho_d, args.beta, args.l)
    print(rep.to_json() if args.json else rep.table())
    return 0


def cmd_experiment(args) -> int:
    if args.config:
        cfg = ExperimentConfig.load(args.config)
    else:
        cfg = ExperimentConfig.from_dict({"kind": args.kind})
    cfg.kind = args.kind
    if args.workers:
        cfg.workers = args.workers
    out = args.out or cfg.output_dir
    runner = experiment_torpid if args.kind == "torpid" else experiment_ferro_contrast
    manifest = runner(cfg, out)
    print(json.dumps(_brief(manifest), indent=2))
    print(f"manifest: {Path(out) / 'manifest.json'}")
    return 0 if manifest.complete else 1


def _brief(manifest: RunManifest) -> dict:
    s = manifest.summary
    if s["kind"] == "ferro-contrast":
        return {k: s[k] for k in ("exact", "frustrated_exceeds_ferro_at_max_beta")}
    out = {}
    for beta, block in s["per_beta"].items():
        out[beta] = {
            "table": [{k: row[k] for k in ("l", "median_tau_hat", "median_switch_rate")}
                      for row in block["table"]],
            "tau_nondecreasing": block["tau_nondecreasing"],
            "switch_nonincreasing": block["switch_nonincreasing"],
            "sign_tests_significant": block["sign_tests_significant"],
        }
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swlab", description="Swendsen-Wang dynamics on disordered Ising boxes")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-disorder", help="sample an i.i.d. coupling field")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--side", type=int, required=True)
    p.add_argument("--anchor", type=_ints)
    p.add_argument("--distribution", choices=["uniform", "gaussian", "constant"], default="uniform")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--value", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_disorder)

    p = sub.add_parser("plant-gadget", help="write a gadget into a coupling field")
    p.add_argument("--field", required=True)
    _gadget_args(p)
    p.add_argument("--pinning", choices=["midpoint", "sampled"], default="midpoint")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plant_gadget)

    p = sub.add_parser("verify-gadget", help="check the gadget rules at one placement")
    p.add_argument("--field", required=True)
    _gadget_args(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify_gadget)

    p = sub.add_parser("scan-gadget", help="list every placement where the gadget rules hold")
    p.add_argument("--field", required=True)
    _gadget_args(p, need_center=False)
    p.set_defaults(func=cmd_scan_gadget)

    p = sub.add_parser("simulate", help="run one chain and write a series CSV")
    p.add_argument("--field", required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--sweeps", type=int, required=True)
    p.add_argument("--burn-in", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replica", type=int, default=0)
    p.add_argument("--start", choices=["plus", "minus", "random"], default="plus")
    p.add_argument("--observables", type=lambda t: t.split(","), default=["magnetization", "energy"])
    p.add_argument("--gadget", type=_ints, help="l,x,y,... locating the band for band_accordance")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("exact", help="exact kernel spectrum of a tiny box")
    p.add_argument("--field", required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("autocorr", help="autocorrelation and tau_exp of a series column")
    p.add_argument("--series", required=True)
    p.add_argument("--column", required=True)
    p.add_argument("--t-max", type=int, default=50)
    p.set_defaults(func=cmd_autocorr)

    p = sub.add_parser("bounds", help="constants, s-interval and composed bounds")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--rho-d", type=float, default=0.5)
    p.add_argument("--s", type=float, help="default: midpoint of the s-interval")
    p.add_argument("--beta", type=float, default=8.0)
    p.add_argument("--l", type=int, default=2)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("experiment", help="canned experiments")
    p.add_argument("kind", choices=["torpid", "ferro-contrast"])
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SwlabError, OSError) as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
