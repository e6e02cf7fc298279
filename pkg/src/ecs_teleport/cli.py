"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 protocol exhausted its
attempts, 64 usage error, 70 internal error / model violation.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import io
import json
import logging
import math
import sys
from pathlib import Path

from statsmodels.stats.proportion import proportion_confint

from . import __version__
from . import analytics as an
from . import verification
from .protocol import AttemptCircuit, MessageState, ModelViolation, ProtocolConfig, run_protocol

EXIT_OK, EXIT_VERIFY, EXIT_EXHAUSTED, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 64, 70

TRIAL_COLUMNS = ["trial", "success", "attempts", "d7", "d8", "d9", "d10", "atomic", "kind",
                 "correction", "probability", "fidelity"]
SWEEP_COLUMNS = ["alpha_sq", "n", "p_analytic"]
SWEEP_EMPIRICAL_COLUMNS = ["p_empirical", "trials"]

log = logging.getLogger("ecs_teleport")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _float_list(text):
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _int_list(text):
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("need one or more attempt counts >= 1")
    return vals


def _add_protocol_flags(p):
    p.add_argument("--alpha-sq", type=float, default=1.0, help="mean photon number |alpha|^2 (default 1)")
    p.add_argument("--theta", type=float, default=0.0, help="message polar angle on the Bloch sphere")
    p.add_argument("--phi", type=float, default=0.0, help="message azimuth on the Bloch sphere")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--backend", choices=("exact", "fock"), default="exact")
    p.add_argument("--max-attempts", type=_positive_int, default=1)
    p.add_argument("--cutoff", type=_positive_int, default=None, help="Fock cutoff (fock backend only)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="ecs-teleport",
        description="Simulate cavity-assisted atomic teleportation over entangled coherent states.",
        epilog="exit codes: 0 ok, 1 verification failed, 2 attempts exhausted, 64 usage, 70 internal",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    cfg_help = "flat key=value file mirroring the flags; flags win on conflict"

    p = sub.add_parser("teleport", help="one traced protocol run")
    _add_protocol_flags(p)
    p.add_argument("--config", help=cfg_help)

    p = sub.add_parser("montecarlo", help="independent seeded trials with summary statistics")
    _add_protocol_flags(p)
    p.add_argument("--trials", type=_positive_int, default=1000)
    p.add_argument("--out-dir", default="montecarlo-out")
    p.add_argument("--config", help=cfg_help)

    p = sub.add_parser("sweep", help="success probability versus alpha_sq and attempt count")
    p.add_argument("--alpha-sq-min", type=float, default=0.0)
    p.add_argument("--alpha-sq-max", type=float, default=4.0)
    p.add_argument("--alpha-sq-step", type=float, default=0.05)
    p.add_argument("--n-list", type=_int_list, default="1,2,3,5")
    p.add_argument("--trials", type=_positive_int, default=None, help="add an empirical overlay")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--phi", type=float, default=0.0)
    p.add_argument("--out", default=None, help="CSV path (default: standard output)")
    p.add_argument("--config", help=cfg_help)

    p = sub.add_parser("verify", help="run every cross-check")
    p.add_argument("--alpha-sq-list", type=_float_list, default="0.5,1,2")
    p.add_argument("--cutoff", type=_positive_int, default=None)
    p.add_argument("--seed", type=_seed, default=0, help="seed for the random message sample")
    p.add_argument("--json", default=None, help="write the JSON report here")
    p.add_argument("--config", help=cfg_help)
    return parser


def read_config(path) -> dict:
    """Parse ``key=value`` lines; ``#`` starts a comment. Keys may use - or _."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            cfg = read_config(args.config)
        except (OSError, UsageError) as exc:
            parser.exit(EXIT_USAGE, f"ecs-teleport: error: {exc}\n")
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(cfg) - known - {"config"})
        if unknown:
            sub.error(f"unknown config keys: {', '.join(unknown)}")
        # string defaults go through each flag's type conversion
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def _config(args, max_attempts=None) -> ProtocolConfig:
    try:
        return ProtocolConfig(
            alpha_sq=args.alpha_sq,
            max_attempts=max_attempts or args.max_attempts,
            backend=getattr(args, "backend", "exact"),
            cutoff=getattr(args, "cutoff", None),
            seed=args.seed,
            message=MessageState.from_bloch(args.theta, args.phi),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _manifest(args, outputs) -> dict:
    echo = {k: v for k, v in sorted(vars(args).items()) if k != "verbose"}
    return {
        "command": args.command,
        "config": echo,
        "code_version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        "output_paths": [str(p) for p in outputs],
    }


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def cmd_teleport(args) -> int:
    cfg = _config(args)
    report = run_protocol(cfg, trace=print)
    print(f"summary success={report.success} attempts={report.n_attempts}")
    for k, r in enumerate(report.attempts, start=1):
        print(f"  attempt {k}: {r.kind.value} {r.record} p={r.probability:.12f} "
              f"fidelity={r.post_fidelity:.12f}" + (f" correction={r.correction}" if r.correction else ""))
    return EXIT_OK if report.success else EXIT_EXHAUSTED


def summarize(successes: int, trials: int, analytic: float) -> dict:
    lo, hi = proportion_confint(successes, trials, alpha=0.05, method="wilson")
    rate = successes / trials
    sigma = math.sqrt(analytic * (1 - analytic) / trials)
    dev = abs(rate - analytic) / sigma if sigma > 0 else (0.0 if rate == analytic else math.inf)
    return {
        "trials": trials,
        "successes": successes,
        "empirical_rate": rate,
        "wilson95_low": float(lo),
        "wilson95_high": float(hi),
        "analytic_p": analytic,
        "sigma": sigma,
        "deviation_sigma": dev,
    }


def _fmt_float(v) -> str:
    return repr(float(v))


def cmd_montecarlo(args) -> int:
    cfg = _config(args)
    circuit = AttemptCircuit.from_config(cfg)
    rows = []
    successes = 0
    for t in range(args.trials):
        rep = run_protocol(cfg, trial=t, circuit=circuit)
        last = rep.attempts[-1]
        successes += rep.success
        rows.append([t, int(rep.success), rep.n_attempts, *last.record.pattern, last.record.atomic or "",
                     last.kind.value, last.correction or "", _fmt_float(last.probability),
                     _fmt_float(last.post_fidelity)])
    summary = {"alpha_sq": cfg.alpha_sq, "max_attempts": cfg.max_attempts, "backend": cfg.backend,
               "seed": cfg.seed, "theta": args.theta, "phi": args.phi,
               **summarize(successes, args.trials, an.p_success_n(cfg.alpha_sq, cfg.max_attempts))}
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trials_path, summary_path = out / "trials.csv", out / "summary.json"
    trials_path.write_text(_csv_text(TRIAL_COLUMNS, rows), encoding="utf-8")
    _write_json(summary_path, summary)
    _write_json(out / "manifest.json", _manifest(args, [trials_path, summary_path]))
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def sweep_rows(grid, n_list, trials=None, seed=0, message=None) -> tuple:
    """Rows of the sweep CSV; with ``trials`` each grid point also gets an empirical rate.

    Empirical rates come from one set of repeat-until-success trials with
    max(n_list) attempts, counting trials that succeeded within n attempts.
    """
    n_list = sorted(set(n_list))
    columns = SWEEP_COLUMNS + (SWEEP_EMPIRICAL_COLUMNS if trials else [])
    rows = []
    for a in grid:
        empirical = {}
        if trials:
            cfg = ProtocolConfig(alpha_sq=float(a), max_attempts=max(n_list), seed=seed,
                                 message=message or MessageState(1.0, 0.0))
            circuit = AttemptCircuit.from_config(cfg)
            used = [run_protocol(cfg, trial=t, circuit=circuit) for t in range(trials)]
            for n in n_list:
                empirical[n] = sum(r.success and r.n_attempts <= n for r in used) / trials
        for n in n_list:
            row = [f"{a:.10g}", n, _fmt_float(an.p_success_n(float(a), n))]
            if trials:
                row += [_fmt_float(empirical[n]), trials]
            rows.append(row)
    return columns, rows


def cmd_sweep(args) -> int:
    try:
        grid = an.default_grid(args.alpha_sq_min, args.alpha_sq_max, args.alpha_sq_step)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if len(grid) == 0 or grid[0] < 0 or grid[-1] > 16:
        raise UsageError("grid must be non-empty and inside [0, 16]")
    columns, rows = sweep_rows(grid, args.n_list, args.trials, args.seed,
                               MessageState.from_bloch(args.theta, args.phi))
    text = _csv_text(columns, rows)
    if args.out:
        path = Path(args.out)
        path.write_text(text, encoding="utf-8")
        _write_json(path.with_name(path.name + ".manifest.json"), _manifest(args, [path]))
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    if any(a < 0 or a > 16 for a in args.alpha_sq_list):
        raise UsageError("alpha_sq values must lie in [0, 16]")
    report = verification.run_all(args.alpha_sq_list, args.cutoff, args.seed)
    for c in report["checks"]:
        print(c.line())
    for d in report["table_discrepancies"]:
        print(f"NOTE printed correction table row {d['row']}: derived {d['derived']}, printed {d['printed']} "
              f"(pattern {d['pattern']}, atomic {d['atomic']})")
    failed = [c.name for c in report["checks"] if not c.passed]
    print("verify: all checks passed" if not failed else f"verify: FAILED {', '.join(sorted(set(failed)))}")
    if args.json:
        payload = {
            "passed": report["passed"],
            "checks": [{"name": c.name, "passed": c.passed, **c.detail} for c in report["checks"]],
            "table_discrepancies": report["table_discrepancies"],
        }
        _write_json(Path(args.json), payload)
    return EXIT_OK if report["passed"] else EXIT_VERIFY


COMMANDS = {"teleport": cmd_teleport, "montecarlo": cmd_montecarlo, "sweep": cmd_sweep, "verify": cmd_verify}


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"ecs-teleport {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ModelViolation as exc:
        print(f"ecs-teleport: model violation: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"ecs-teleport: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
