"""Command-line entry point.

Exit status: 0 on success, 1 when a verified bound fails, 2 on usage or
input errors (one-line diagnostic on stderr).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .asymptotics import schur_fixed_point, second_order_term
from .bloch import ShellMargin, default_threads, grid_band_table
from .errors import BSGapsError
from .lattice import lattice_check
from .model import (cos_potential, derive_spectral_window, identity_metric, load_potential,
                    region_parameters)
from .perturbation import run_harness
from .regions import classify, partition_diagnostics, volume_estimates
from .spectral import ids_curve, spectral_report


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclasses.dataclass
class RunConfig:
    command: str
    options: dict
    seed: int | None
    threads: int
    timestamp: bool = False

    def provenance(self) -> dict:
        head = {"tool": "bsgaps", "version": __version__, "command": self.command,
                "config": self.options, "seed": self.seed}
        if self.timestamp:
            head["timestamp"] = datetime.now(timezone.utc).isoformat()
        return head


def _camel(key) -> str:
    head, *rest = str(key).split("_")
    return head + "".join(p[:1].upper() + p[1:] for p in rest)


def _jsonable(x):
    if isinstance(x, dict):
        return {_camel(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(cfg: RunConfig, result: dict, out: str | None):
    doc = {"provenance": cfg.provenance(), "result": result}
    _emit(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n", out)


def _emit_csv(cfg: RunConfig, header: list[str], rows, out: str | None):
    buf = io.StringIO()
    for key, val in cfg.provenance().items():
        buf.write(f"# {key}: {json.dumps(_jsonable(val), sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) for x in row])
    _emit(buf.getvalue(), out)


def _vector(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse vector {text!r}") from None


def _window(text: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise UsageError(f"window must look like LO:HI, got {text!r}")
    try:
        lo, hi = (float(p) for p in parts)
    except ValueError:
        raise UsageError(f"cannot parse window {text!r}") from None
    if not hi > lo:
        raise UsageError(f"empty window {text!r}")
    return lo, hi


def _model(args):
    if args.potential:
        return load_potential(args.potential)
    return cos_potential(args.dim), identity_metric(args.dim)


def _cutoff(args):
    return ShellMargin(args.cutoff) if args.cutoff_mode == "margin" else args.cutoff


# ---------------------------------------------------------------- commands

def cmd_bands(args, cfg):
    pot, metric = _model(args)
    table = grid_band_table(args.kgrid, _cutoff(args), pot, metric, args.lambda_max, threads=cfg.threads)
    d = metric.dim
    header = [f"k{i + 1}" for i in range(d)] + [f"lambda_{j + 1}" for j in range(table.n_bands)]
    _emit_csv(cfg, header, np.hstack([table.k_grid, table.values]), args.out)
    return 0


def cmd_gaps(args, cfg):
    pot, metric = _model(args)
    report = spectral_report(pot, metric, _window(args.window), _cutoff(args), args.kgrid,
                             sample_lambdas=_vector(args.zeta) if args.zeta else (),
                             refine=not args.no_refine, threads=cfg.threads)
    _emit_json(cfg, report.to_dict(), args.out)
    return 0


def cmd_ids(args, cfg):
    pot, metric = _model(args)
    lams = _vector(args.lam)
    res = ids_curve(pot, metric, lams, args.kgrid, _cutoff(args), threads=cfg.threads)
    _emit_csv(cfg, ["lambda", "N", "error"], zip(res.lambdas, res.values, res.errors), args.out)
    return 0


def cmd_asym(args, cfg):
    pot, metric = _model(args)
    xi = _vector(args.xi)
    if args.mode == "full":
        tr = schur_fixed_point(xi, pot, metric, args.M, warn=False)
        result = {"value": tr.value, "shift": tr.shift, "iterations": tr.iterations,
                  "residual": tr.residual, "condition": tr.condition}
    else:
        term = float(second_order_term(xi, pot, metric, args.M))
        result = {"value": float(metric.norm2(np.asarray(xi))) + term, "shift": term,
                  "iterations": 0, "residual": 0.0}
    result["mode"] = args.mode
    _emit_json(cfg, result, args.out)
    return 0


def cmd_classify(args, cfg):
    pot, metric = _model(args)
    window = derive_spectral_window(args.rho, pot, metric)
    params = region_parameters(metric.dim, args.rho, pot, M=args.M)
    label = classify(_vector(args.xi), window, params, metric)
    _emit_json(cfg, label.to_dict(), args.out)
    return 0


def cmd_regions(args, cfg):
    pot, metric = _model(args)
    window = derive_spectral_window(args.rho, pot, metric)
    params = region_parameters(metric.dim, args.rho, pot, M=args.M)
    rep = partition_diagnostics(window, params, metric, args.samples, cfg.seed, cfg.threads)
    _emit_json(cfg, rep.to_dict(), args.out)
    return 0 if rep.total and rep.xi0_violations == 0 else 1


def cmd_volume(args, cfg):
    pot, metric = _model(args)
    window = derive_spectral_window(args.rho, pot, metric)
    params = region_parameters(metric.dim, args.rho, pot, M=args.M)
    g = None
    if args.g == "full":
        g = lambda x: schur_fixed_point(x, pot, metric, args.M, warn=False).value  # noqa: E731
    rep = volume_estimates(window, params, metric, args.delta, args.samples, cfg.seed, g_function=g,
                           shift=_vector(args.shift) if args.shift else None, split=args.split)
    _emit_json(cfg, rep.to_dict(), args.out)
    return 0


def cmd_latcheck(args, cfg):
    rep = lattice_check(args.dim, args.radius, args.trials, cfg.seed, args.angle_radius)
    _emit_json(cfg, rep.to_dict(), args.out)
    return 0 if rep.passed else 1


def cmd_perturb(args, cfg):
    rep = run_harness(args.trials, cfg.seed, args.max_dim, chain_trials=args.chain_trials)
    _emit_json(cfg, rep.to_dict(), args.out)
    return 0 if rep.violations == 0 and rep.chain_violations == 0 else 1


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    def global_args(parser, default):
        # accepted before or after the subcommand; the subcommand copy only overrides when given
        parser.add_argument("--threads", type=int, default=default(None),
                            help="worker threads (default: BSGAPS_THREADS or 1)")
        parser.add_argument("--seed", type=int, default=default(0))
        parser.add_argument("--timestamp", action="store_true", default=default(False),
                            help="add a wall-clock timestamp to the provenance")

    p = _Parser(prog="bsgaps", description="Band gaps and high-energy asymptotics of periodic operators.")
    global_args(p, lambda x: x)
    common = _Parser(add_help=False)
    global_args(common, lambda x: argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add = sub.add_parser
    sub.add_parser = lambda *a, **kw: _add(*a, parents=[common], **kw)

    def model_args(sp):
        sp.add_argument("--potential", help="potential JSON file (default: cos potential)")
        sp.add_argument("--dim", type=int, default=2, help="dimension of the default potential")
        sp.add_argument("--out", help="output file (default: stdout)")

    def cutoff_args(sp, default):
        sp.add_argument("--cutoff", type=float, default=default)
        sp.add_argument("--cutoff-mode", choices=["margin", "radius"], default="margin",
                        help="margin: radius = sqrt(top energy) + cutoff; radius: plain radius")
        sp.add_argument("--kgrid", type=int, default=16)

    sp = sub.add_parser("bands", help="band values on a k-grid (CSV)")
    model_args(sp)
    cutoff_args(sp, 6.0)
    sp.add_argument("--lambda-max", type=float, required=True)
    sp.set_defaults(func=cmd_bands)

    sp = sub.add_parser("gaps", help="band intervals and gaps in a window (JSON)")
    model_args(sp)
    cutoff_args(sp, 6.0)
    sp.add_argument("--window", required=True, help="LO:HI")
    sp.add_argument("--zeta", help="comma-separated energies for overlap samples")
    sp.add_argument("--no-refine", action="store_true")
    sp.set_defaults(func=cmd_gaps)

    sp = sub.add_parser("ids", help="integrated density of states (CSV)")
    model_args(sp)
    cutoff_args(sp, 6.0)
    sp.add_argument("--lambda", dest="lam", required=True, help="comma-separated energies")
    sp.set_defaults(func=cmd_ids)

    sp = sub.add_parser("asym", help="eigenvalue branch through |F xi|^2 (JSON)")
    model_args(sp)
    sp.add_argument("--xi", required=True)
    sp.add_argument("--mode", choices=["full", "order2"], default="full")
    sp.add_argument("--M", type=int, default=3)
    sp.set_defaults(func=cmd_asym)

    sp = sub.add_parser("classify", help="resonance label of one point (JSON)")
    model_args(sp)
    sp.add_argument("--rho", type=float, required=True)
    sp.add_argument("--xi", required=True)
    sp.add_argument("--M", type=int, default=3)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("regions", help="partition diagnostics on random shell samples (JSON)")
    model_args(sp)
    sp.add_argument("--rho", type=float, default=1e6)
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--M", type=int, default=3)
    sp.set_defaults(func=cmd_regions)

    sp = sub.add_parser("volume", help="Monte-Carlo level-set volumes (JSON)")
    model_args(sp)
    sp.add_argument("--rho", type=float, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--samples", type=int, default=100000)
    sp.add_argument("--M", type=int, default=3)
    sp.add_argument("--shift", help="comma-separated shift vector for the intersection volume")
    sp.add_argument("--split", action="store_true", help="split hits into resonant and non-resonant")
    sp.add_argument("--g", choices=["free", "full"], default="free",
                    help="level function on non-resonant points")
    sp.set_defaults(func=cmd_volume)

    sp = sub.add_parser("latcheck", help="lattice bound verification (JSON)")
    sp.add_argument("--dim", type=int, default=4)
    sp.add_argument("--radius", type=float, default=5.0)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--angle-radius", type=float, default=None)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_latcheck)

    sp = sub.add_parser("perturb-check", help="perturbation bound verification (JSON)")
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--max-dim", type=int, default=40)
    sp.add_argument("--chain-trials", type=int, default=None)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_perturb)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        threads = args.threads or default_threads()
        options = {k: v for k, v in sorted(vars(args).items())
                   if k not in ("func", "command", "out", "threads", "seed", "timestamp")}
        cfg = RunConfig(args.command, options, args.seed, threads, args.timestamp)
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"bsgaps: usage error: {exc}", file=sys.stderr)
        return 2
    except BSGapsError as exc:
        print(f"bsgaps: {type(exc).__name__}: {' '.join(str(exc).split())}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"bsgaps: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
