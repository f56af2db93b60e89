"""Command-line entry point.

Subcommands: generate | solve | sweep | convergence | diagnose.  Every
output lands under --out with fixed names (data.csv, truth.json,
trace[_gamma].csv, sweep.csv, manifest.json, diagnostics.json).  Exit
codes: 0 success, 2 config error, 3 numeric divergence, 4 accuracy band
not met.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .. import datagen, solver, theory
from ..errors import (BandNotMetError, ConfigError, DataFormatError,
                      DivergenceError, NetlassoError, RegimeError)
from . import experiments, io
from .spec import ExperimentSpec

EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_BAND = 4


def _add_common(p):
    p.add_argument("--config", help="JSON experiment spec")
    p.add_argument("--name")
    p.add_argument("--N", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--phi", type=float)
    p.add_argument("--csv", help="real-data CSV (column 0 = y)")
    p.add_argument("--n-test", dest="n_test", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--radius", type=float)
    p.add_argument("--iters", type=int)
    p.add_argument("--rel-tol", dest="rel_tol", type=float)
    p.add_argument("--stride", type=int)
    p.add_argument("--timing", action="store_const", const=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--topology",
                   choices=["complete", "star", "path", "grid2d",
                            "erdos_renyi"])
    p.add_argument("--p", type=float)
    p.add_argument("--weights",
                   choices=["metropolis", "lazy_metropolis", "uniform"])
    p.add_argument("--reps", type=int)
    p.add_argument("--band", type=float)
    p.add_argument("--ratio", type=float)
    p.add_argument("--out")


def _spec_from(args) -> ExperimentSpec:
    overrides = {k: v for k, v in vars(args).items()
                 if k not in ("config", "command", "axis_grid", "gammas",
                              "kind", "axis", "fn")}
    if getattr(args, "axis", None) is not None:
        overrides["axis"] = args.axis
    if getattr(args, "axis_grid", None):
        overrides["grid"] = [float(x) for x in args.axis_grid.split(",")]
    if getattr(args, "gammas", None):
        overrides["gammas"] = [float(x) for x in args.gammas.split(",")]
    return ExperimentSpec.from_sources(args.config, overrides)


def _outdir(spec) -> Path:
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_or_generate(spec):
    if spec.csv is not None:
        ds = datagen.load_csv(spec.csv)
        truth = None
        test = None
        if spec.n_test:
            ds, test = datagen.train_test_split(ds, spec.n_test,
                                                seed=spec.seed)
        if ds.N % spec.m != 0:
            raise ConfigError(f"m={spec.m} must divide N_train={ds.N}")
        return truth, ds, test
    seed_seq = experiments.sub_seed(spec.seed, 2)
    truth, ds = experiments.make_synthetic(spec, seed_seq)
    return truth, ds, None


def cmd_generate(args) -> int:
    spec = _spec_from(args)
    out = _outdir(spec)
    truth, ds, _ = _load_or_generate(spec)
    datagen.write_csv(ds, out / "data.csv")
    if truth is not None:
        io.write_truth_json(truth, spec.seed, out / "truth.json")
    io.write_manifest(out / "manifest.json", spec.to_dict(),
                      provenance={"data": "generated"},
                      data_paths=[out / "data.csv"])
    print(f"wrote {out / 'data.csv'} (N={ds.N}, d={ds.d})")
    return 0


def cmd_solve(args) -> int:
    spec = _spec_from(args)
    out = _outdir(spec)
    truth, ds, test = _load_or_generate(spec)
    shards = datagen.partition(ds, spec.m)
    _, w = experiments.build_network(spec)
    rr = experiments.resolve_config(spec, shards, w, truth=truth)
    trace = solver.run(shards, w, rr.cfg, truth=truth, test=test)
    io.write_trace_csv(trace, out / "trace.csv")
    io.write_manifest(
        out / "manifest.json", spec.to_dict(), rr.provenance,
        extra={"resolved": {"lam": rr.cfg.lam, "gamma": rr.cfg.gamma,
                            "beta": rr.cfg.beta, "radius": rr.cfg.radius,
                            "rho": w.rho},
               "final_iteration": trace.final_state.iteration},
        data_paths=[spec.csv] if spec.csv else [])
    print(f"wrote {out / 'trace.csv'} ({len(trace.metrics)} rows)")
    return 0


def cmd_sweep(args) -> int:
    spec = _spec_from(args)
    if spec.axis == "none":
        raise ConfigError("sweep requires --axis")
    out = _outdir(spec)
    columns, rows, meta = experiments.run_sweep(spec)
    io.write_sweep_csv(columns, rows, out / "sweep.csv")
    io.write_manifest(out / "manifest.json", spec.to_dict(),
                      provenance={"sweep": spec.axis}, extra={"meta": meta})
    print(f"wrote {out / 'sweep.csv'} ({len(rows)} grid points)")
    experiments.ensure_band_met(meta)
    return 0


def cmd_convergence(args) -> int:
    spec = _spec_from(args)
    out = _outdir(spec)
    traces, refs = experiments.convergence_bundle(spec)
    files = []
    for gam, trace in traces.items():
        path = out / f"trace_{gam:g}.csv"
        io.write_trace_csv(trace, path)
        files.append(path.name)
    io.write_manifest(out / "manifest.json", spec.to_dict(),
                      provenance={"bundle": "convergence"},
                      extra={"references": refs, "traces": files})
    print(f"wrote {len(files)} traces + references to {out}")
    return 0


def cmd_diagnose(args) -> int:
    spec = _spec_from(args)
    out = _outdir(spec)
    truth, ds, _ = _load_or_generate(spec)
    shards = datagen.partition(ds, spec.m)
    _, w = experiments.build_network(spec)
    inp = experiments.theory_inputs(spec, shards, w)
    report = theory.diagnostics_report(inp, lam=spec.lam, gamma=spec.gamma)
    (out / "diagnostics.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {out / 'diagnostics.json'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netlasso",
        description="Penalized-consensus sparse regression over mesh networks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write dataset CSV + truth JSON")
    _add_common(p)
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("solve", help="single run: trace CSV + manifest")
    _add_common(p)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("sweep", help="grid sweep over lambda|gamma|d|m")
    _add_common(p)
    p.add_argument("--axis", choices=["lambda", "gamma", "d", "m"])
    p.add_argument("--grid", dest="axis_grid",
                   help="comma-separated grid values")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("convergence", help="multi-gamma trace bundle")
    _add_common(p)
    p.add_argument("--gammas", help="comma-separated gamma values")
    p.set_defaults(fn=cmd_convergence)

    p = sub.add_parser("diagnose", help="theory diagnostics JSON")
    _add_common(p)
    p.set_defaults(fn=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except BandNotMetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAND
    except (ConfigError, DataFormatError, RegimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NetlassoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
