"""``hamreach`` command line.

    hamreach <command> --scenario FILE [--section.key=value ...]

Exit status: 0 on success, 2 when a hypothesis check fails (rank
deficiency found, critical-point assumption violated), 1 on errors.
"""
from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

from . import larc
from .config import ConfigError, ScenarioConfig
from .expr import DomainError, ExprError, PhasePoint, to_text
from .flow import FlowError, SwitchSchedule, run_schedule
from .output import write_pgm, write_report, write_rows
from .poisson import chain, extended_brackets
from .probe import AssumptionError, ProbeWarning, genericity_probe
from .reach import ScheduleSampler, estimate_coverage, oriented_vs_unoriented

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_HYPOTHESIS = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hamreach", allow_abbrev=False, description="Brackets, Lie-rank checks and reachable sets of Hamiltonian pairs.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, help_):
        c = sub.add_parser(name, help=help_)
        c.add_argument("--scenario", type=Path, help="scenario file (dotted key = value lines)")
        c.add_argument("--out", help="output directory (overrides output.dir)")
        return c

    c = command("bracket", "print the chain H2, {H1,H2}, {H1,{H1,H2}}, ...")
    c.add_argument("--h1")
    c.add_argument("--h2")
    c.add_argument("--depth", type=int, help="chain length m (default k-2)")

    c = command("rank", "Lie-rank condition at a point or over a grid")
    g = c.add_mutually_exclusive_group()
    g.add_argument("--point", help="comma-separated coordinates x..., p...[, t]")
    g.add_argument("--grid", type=int, metavar="R", help="grid resolution per axis")

    c = command("flow", "integrate a switching schedule")
    c.add_argument("--start", help="comma-separated x..., p...")
    c.add_argument("--schedule", required=True, help='legs "i:duration,..." e.g. "1:0.3,2:0.5"')
    c.add_argument("--h", type=float, help="step size")
    c.add_argument("--every", type=int, default=10, help="sample every n steps")

    c = command("reach", "Monte Carlo coverage of the reachable set")
    c.add_argument("--mode", choices=["oriented", "unoriented", "both"])
    c.add_argument("--budget", type=float)
    c.add_argument("--resolution", type=int)
    c.add_argument("--seed", type=int)

    command("probe", "genericity probe over a random H2 family")
    command("check-h1", "critical points of H1 and the escape test")
    return p


def _overrides(extra: list[str]) -> dict[str, str]:
    out = {}
    for item in extra:
        if not item.startswith("--") or "=" not in item:
            raise UsageError(f"unrecognized argument {item!r} (overrides take the form --section.key=value)")
        key, value = item[2:].split("=", 1)
        out[key] = value
    return out


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def main(argv: list[str] | None = None) -> int:
    try:
        args, extra = build_parser().parse_known_args(argv)
        overrides = _overrides(extra)
        for flag, key in (("h1", "hamiltonian.h1"), ("h2", "hamiltonian.h2"), ("out", "output.dir"),
                          ("mode", "sampler.mode"), ("budget", "reach.budget"), ("resolution", "grid.resolution"),
                          ("seed", "run.seed"), ("grid", "grid.resolution"), ("start", "reach.start"),
                          ("h", "integrator.h")):
            v = getattr(args, flag, None)
            if v is not None:
                overrides[key] = str(v)
        cfg = ScenarioConfig.load(args.scenario, overrides)
        out_dir = Path(cfg.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args, out_dir)
    except UsageError as exc:
        print(f"hamreach: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except ConfigError as exc:
        print(f"hamreach: config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ExprError, DomainError, FlowError, ValueError, OSError) as exc:
        print(f"hamreach: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def _cmd_bracket(cfg: ScenarioConfig, args, out: Path) -> int:
    H1, H2 = cfg.hamiltonians()
    m = cfg.manifold()
    depth = args.depth if args.depth is not None else cfg.k - 2
    if m.has_time:
        entries = [H2] + (extended_brackets(H1, H2, depth, m) if depth >= 1 else [])
        label = "K"
    else:
        entries = list(chain(H1, H2, depth, m).entries)
        label = "B"
    texts = [to_text(e) for e in entries]
    for j, t in enumerate(texts):
        print(f"{label}{j} = {t}")
    write_report(out / "report.json", "bracket", {"h1": to_text(H1), "h2": to_text(H2), "depth": depth, "entries": texts})
    return EXIT_OK


def _cmd_rank(cfg: ScenarioConfig, args, out: Path) -> int:
    H1, H2 = cfg.hamiltonians()
    m = cfg.manifold()
    builder = larc.FrameBuilder(H1, H2, cfg.k, m)
    if args.point is not None:
        frame = builder.frame(_floats(args.point), cfg.rank_tol)
        body = {
            "k": cfg.k,
            "d": m.d,
            "rank_tol": cfg.rank_tol,
            **frame.as_dict(),
            "full_rank": frame.full_rank,
            "singular_values": frame.singular_values,
        }
        write_report(out / "report.json", "rank", body)
        print(f"rank {frame.rank} of {frame.target_rank}, sigma_min {frame.sigma_min:.6g}")
        return EXIT_OK if frame.full_rank else EXIT_HYPOTHESIS
    report = larc.grid_scan(
        H1, H2, cfg.k, m, cfg.resolution, cfg.rank_tol, cfg.crit_tol,
        box=cfg.bounding_box(), t_window=cfg.window(), workers=cfg.threads, builder=builder,
    )
    write_report(out / "report.json", "rank", report.as_dict())
    print(
        f"{report.nodes_total} nodes, {len(report.critical)} near the critical set, "
        f"{len(report.failures)} rank deficient, sigma_min {report.sigma_min:.6g}"
    )
    return EXIT_HYPOTHESIS if report.failures else EXIT_OK


def _cmd_flow(cfg: ScenarioConfig, args, out: Path) -> int:
    H1, H2 = cfg.hamiltonians()
    m = cfg.manifold()
    schedule = SwitchSchedule.parse(args.schedule)
    z0 = PhasePoint.on(m, cfg.start_point(), cfg.t0 if m.has_time else None)
    traj = run_schedule(H1, H2, z0, schedule, cfg.h, m, args.every, cfg.bounding_box(), cfg.tol, cfg.max_iter)
    header = ["t_cumulative", *m.coordinate_names] + (["t"] if m.has_time else [])
    rows = []
    for j, (s, z) in enumerate(zip(traj.times, traj.points)):
        rows.append([float(s), *map(float, z)] + ([float(traj.t[j])] if m.has_time else []))
    write_rows(out / "trajectory.csv", header, rows)
    body = {
        "start": list(z0.coords),
        "schedule": [list(leg) for leg in schedule.legs],
        "h": cfg.h,
        "end": [float(v) for v in traj.end],
        "rows": len(rows),
    }
    if m.has_time:
        body["t_end"] = float(traj.t[-1])
    write_report(out / "report.json", "flow", body)
    print("end", ", ".join(f"{v:.17g}" for v in traj.end))
    return EXIT_OK


def _cmd_reach(cfg: ScenarioConfig, args, out: Path) -> int:
    H1, H2 = cfg.hamiltonians()
    m = cfg.manifold()
    z0 = cfg.start_point()
    kw = dict(h=cfg.reach_h, sample_every=cfg.sample_every, workers=cfg.threads, tol=cfg.tol, max_iter=cfg.max_iter)
    if m.has_time:
        kw.update(t0=cfg.t0, t_window=cfg.window())
    base = ScheduleSampler("unoriented" if cfg.mode == "both" else cfg.mode, cfg.q, cfg.tau_max, cfg.seed)
    if cfg.mode == "both":
        cmp = oriented_vs_unoriented(H1, H2, z0, base, cfg.budget, cfg.resolution, m, **kw)
        grids = {"oriented": cmp.oriented, "unoriented": cmp.unoriented}
        extra = {"gap": cmp.gap}
    else:
        grids = {cfg.mode: estimate_coverage(H1, H2, z0, base, cfg.budget, cfg.resolution, m, **kw)}
        extra = {}
    rows = [[mode, t, f] for mode, g in grids.items() for t, f in g.curve()]
    write_rows(out / "coverage.csv", ["mode", "time", "fraction"], rows)
    write_pgm(out / "grid.pgm", next(iter(grids.values())).counts if len(grids) == 1 else grids["unoriented"].counts)
    body = {
        "resolution": cfg.resolution,
        "budget": cfg.budget,
        "runs": {
            mode: {"fraction": g.fraction, "cells_visited": g.cells_visited, "cells_total": g.cells_total,
                   "provenance": g.provenance}
            for mode, g in grids.items()
        },
        **extra,
    }
    write_report(out / "report.json", "reach", body)
    for mode, g in grids.items():
        print(f"{mode}: coverage {g.fraction:.6f} ({g.cells_visited}/{g.cells_total} cells)")
    return EXIT_OK


def _cmd_probe(cfg: ScenarioConfig, args, out: Path) -> int:
    H1, _ = cfg.hamiltonians(need_h2=False)
    m = cfg.manifold()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ProbeWarning)
        try:
            report = genericity_probe(
                H1, m, cfg.k, cfg.family, cfg.F, cfg.coef_range, cfg.samples, cfg.resolution,
                cfg.rank_tol, cfg.crit_tol, cfg.seed, cfg.cross_checks, workers=cfg.threads,
            )
        except AssumptionError as exc:
            write_report(out / "report.json", "probe", {"h1_check": exc.report.as_dict(), "error": str(exc)})
            print(f"hamreach: {exc}", file=sys.stderr)
            return EXIT_HYPOTHESIS
    write_report(out / "report.json", "probe", report.as_dict())
    lo, hi = report.interval
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"{report.failures}/{report.n} failures, 95% interval [{lo:.4f}, {hi:.4f}]")
    return EXIT_OK


def _cmd_check_h1(cfg: ScenarioConfig, args, out: Path) -> int:
    H1, _ = cfg.hamiltonians(need_h2=False)
    m = cfg.manifold()
    report = larc.check_assumption_h1(H1, m, cfg.resolution, cfg.crit_tol, box=cfg.bounding_box())
    body = report.as_dict()
    if cfg.escape and cfg.h2 is not None and not m.has_time:
        _, H2 = cfg.hamiltonians()
        body["escape"] = [
            larc.escape_check(H1, H2, c.point, m, cfg.horizon, cfg.crit_tol).as_dict()
            for c in report.critical_points
        ]
    write_report(out / "report.json", "check-h1", body)
    print(f"{len(report.critical_points)} critical point(s): {report.status}")
    for c in report.critical_points[:8]:
        print("  " + ", ".join(f"{v:.12g}" for v in c.point) + f"  det Hess = {c.hessian_det:.6g}")
    if len(report.critical_points) > 8:
        print(f"  ... {len(report.critical_points) - 8} more in report.json")
    return EXIT_HYPOTHESIS if report.status == "violated" else EXIT_OK


COMMANDS = {
    "bracket": _cmd_bracket,
    "rank": _cmd_rank,
    "flow": _cmd_flow,
    "reach": _cmd_reach,
    "probe": _cmd_probe,
    "check-h1": _cmd_check_h1,
}


if __name__ == "__main__":
    sys.exit(main())
