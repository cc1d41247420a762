"""Command-line driver: ``mixheat {solve,net,uniqueness,consistency,check}``.

Exit codes: 0 success, 1 usage or file-system problem, 2 invalid
configuration, 3 solver failure, 4 a property check failed.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .checks import run_property_suite
from .config import COMMANDS, config_dict, default_config, parse_config, run_id
from .errors import ConfigError, IoError, MixHeatError
from .evolve import TRACE_COLUMNS, solve_ivp, verify_apriori, verify_energy_monotonicity
from .nets import consistency_experiment, run_net, uniqueness_experiment
from .reports import Report, emit_reports

__all__ = ["main", "execute", "run_command"]

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_SOLVER, EXIT_PROPERTY = 0, 1, 2, 3, 4


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mixheat", description="Mixed local-nonlocal heat flow experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="TOML experiment file (check falls back to a built-in default)")
        p.add_argument("--output", help="directory for reports (overrides output_dir)")
        p.add_argument("--threads", type=_positive_int, default=1, help="worker threads for epsilon nets")
        p.add_argument("--seed", type=int, help="override the configured seed")
    return parser


def _base_payload(cfg):
    doc = config_dict(cfg, with_output=False)
    return {"command": cfg.command, "run_id": run_id(cfg), "config": doc}


def _solve(cfg, threads):
    P, u0 = cfg.problem()
    result = solve_ivp(P, u0, cfg.run)
    mono = verify_energy_monotonicity(result.trace)
    apriori = verify_apriori(P, result, u0)
    payload = _base_payload(cfg)
    payload.update(
        steps=len(result.trace) - 1,
        final_energy=result.trace.breakdowns[-1].total,
        monotonicity=mono._asdict(),
        apriori=apriori._asdict(),
        snapshot_times=list(result.snapshot_times),
    )
    grid = cfg.grid
    header = ["time"] + [f"u{i}" for i in range(grid.size)]
    snap_rows = [[t, *u.flat] for t, u in zip(result.snapshot_times, result.snapshots)]
    tables = {"main": (TRACE_COLUMNS, list(result.trace.rows())), "snapshots": (header, snap_rows)}
    return payload, tables, True


def _net(cfg, threads):
    rep = run_net(cfg.net_config(), threads=threads, clamped=cfg.clamped_epsilons)
    payload = _base_payload(cfg)
    payload["report"] = rep.to_dict()
    header = ("eps", "sup_t_h1_sq", "sup_t_hs_sq", "apriori_satisfied", "C_eps", "apriori_lhs", "apriori_rhs")
    rows = [[getattr(r, k) for k in header] for r in rep.per_eps]
    return payload, {"main": (header, rows)}, True


def _uniqueness(cfg, threads):
    rep = uniqueness_experiment(cfg.net_config(), cfg.perturbation, threads=threads)
    payload = _base_payload(cfg)
    payload["report"] = rep.to_dict()
    tables = {
        "main": (("eps", "difference"), list(zip(rep.epsilons, rep.differences))),
        "per_q": (("q", "passes"), list(rep.per_q)),
    }
    return payload, tables, True


def _consistency(cfg, threads):
    rep = consistency_experiment(cfg.net_config(), threads=threads)
    payload = _base_payload(cfg)
    payload["report"] = rep.to_dict()
    rows = list(zip(rep.epsilons, rep.errors_CL2, rep.errors_L2H1))
    return payload, {"main": (("eps", "error_CL2", "error_L2H1"), rows)}, True


def _check(cfg, threads):
    results = run_property_suite(cfg)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name}: defect {r.defect:.3e} (tolerance {r.tolerance:.0e})")
    payload = _base_payload(cfg)
    payload["checks"] = [r._asdict() for r in results]
    payload["all_passed"] = all(r.passed for r in results)
    return payload, {"main": (("name", "passed", "defect", "tolerance"), results)}, payload["all_passed"]


_DRIVERS = {"solve": _solve, "net": _net, "uniqueness": _uniqueness, "consistency": _consistency, "check": _check}


def execute(cfg, threads: int = 1) -> tuple[Report, bool]:
    """Run the configured command; returns the report and whether all checks passed."""
    payload, tables, ok = _DRIVERS[cfg.command](cfg, threads)
    return Report(cfg.command, run_id(cfg), payload, tables), ok


def run_command(cfg, threads: int = 1) -> int:
    """Execute, write reports to ``cfg.output_dir`` and return the exit status."""
    try:
        report, ok = execute(cfg, threads)
    except MixHeatError as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    try:
        paths = emit_reports(report, cfg.output_dir)
    except IoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK if ok else EXIT_PROPERTY


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.config is None:
            if args.command != "check":
                print(f"mixheat {args.command}: --config is required", file=sys.stderr)
                return EXIT_USAGE
            cfg = default_config()
        else:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
            cfg = parse_config(text, command=args.command)
    except OSError as exc:
        print(f"error: cannot read {args.config}: {exc.strerror}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        for err in exc.errors:
            print(f"invalid config: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.output is not None:
        changes["output_dir"] = args.output
    cfg = dataclasses.replace(cfg, **changes)
    return run_command(cfg, threads=args.threads)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
