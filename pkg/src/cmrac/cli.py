"""Command-line front end.

    cmrac simulate paper_sec4 --controller constrained --out-dir runs
    cmrac compare paper_sec4
    cmrac check-matching paper_sec4
    cmrac recheck runs/paper_sec4_constrained_summary.toml

Exit codes: 0 success, 1 recheck disagreement, 2 invalid configuration,
3 barrier breach, 4 numerical failure, 5 matching conditions infeasible.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import telemetry
from .exceptions import ConfigError, MatchingInfeasible
from .models import solve_matching_gains
from .scenario import Scenario, load_scenario
from .simulation import CONTROLLER_KINDS, SimResult, simulate
from .svg import write_line_chart

EXIT_OK, EXIT_RECHECK, EXIT_CONFIG, EXIT_BREACH, EXIT_NUMERIC, EXIT_MATCHING = 0, 1, 2, 3, 4, 5

log = logging.getLogger("cmrac")


def _float_arg(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _add_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("config", help="bundled scenario name (paper_sec4) or path to a TOML scenario")
    p.add_argument("--dt", type=_float_arg, help="integration step [s]")
    p.add_argument("--t-final", type=_float_arg, help="horizon [s]")
    p.add_argument("--u-max", type=_float_arg, help="input-norm bound; 'inf' disables saturation")
    p.add_argument("--q-scale", type=_float_arg, help="use Q = q_scale * I in the Lyapunov equation")
    p.add_argument("--out-dir", default="runs", help="directory for CSV / SVG / summary files")
    p.add_argument("--seed", type=int, help="reserved; the core is deterministic")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cmrac", description="Classical vs state/input-constrained MRAC simulation")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one controller and write CSV, summary and charts")
    _add_overrides(p)
    p.add_argument("--controller", choices=CONTROLLER_KINDS, help="defaults to the scenario's controller")

    p = sub.add_parser("compare", help="run classical and constrained MRAC on identical conditions")
    _add_overrides(p)
    p.add_argument("--no-sweep", action="store_true", help="skip the initial-condition sweep")

    p = sub.add_parser("check-matching", help="solve and verify the ideal matching gains")
    p.add_argument("config")

    p = sub.add_parser("recheck", help="recompute a run summary from its CSV")
    p.add_argument("summary")
    return parser


def _load(args) -> Scenario:
    sc = load_scenario(args.config)
    return sc.with_overrides(dt=args.dt, t_final=args.t_final, u_max=args.u_max, q_scale=args.q_scale)


def _exit_code(result: SimResult) -> int:
    if result.termination == "barrier_breach":
        return EXIT_BREACH
    if result.termination == "numerical_failure":
        return EXIT_NUMERIC
    return EXIT_OK


def _delta_u_zero(result: SimResult) -> bool:
    return bool(np.array_equal(result.log.array("u"), result.log.array("v")))


def _state_series(result: SimResult, idx: int, tag: str = ""):
    t = result.log.t
    X, XR = result.log.array("x"), result.log.array("xr")
    suffix = f" ({tag})" if tag else ""
    return [(f"x{idx}{suffix}", t, X[:, idx - 1]), (f"xr{idx}{suffix}", t, XR[:, idx - 1])]


def write_charts(scenario: Scenario, results: list[SimResult], out_dir: Path, stem: str) -> dict[str, str]:
    """Error norm, input norm and state-tracking charts for one or more runs."""
    spec = scenario.constraints
    err = [(f"|e| {r.controller}", r.log.t, r.log.e_norm) for r in results]
    inp = [(f"|u| {r.controller}", r.log.t, r.log.u_norm) for r in results]
    states = []
    for idx in scenario.plot_states:
        for r in results:
            x_lbl, t, xs = _state_series(r, idx, r.controller)[0]
            states.append((x_lbl, t, xs))
        states.append(_state_series(results[0], idx)[1])
    paths = {
        "svg_error": write_line_chart(
            out_dir / f"{stem}_error.svg", f"{scenario.name}: tracking error norm", "t [s]", "|e(t)|",
            err, [(f"k_b = {spec.k_b:g}", spec.k_b)],
        ),
        "svg_input": write_line_chart(
            out_dir / f"{stem}_input.svg", f"{scenario.name}: control input norm", "t [s]", "|u(t)|",
            inp, [(f"u_max = {spec.u_max:g}", spec.u_max)],
        ),
        "svg_states": write_line_chart(
            out_dir / f"{stem}_states.svg", f"{scenario.name}: plant vs reference states", "t [s]", "state",
            states,
        ),
    }
    return {k: p.name for k, p in paths.items()}


def _write_run(scenario: Scenario, result: SimResult, out_dir: Path, seed) -> tuple[dict, Path]:
    stem = f"{scenario.name}_{result.controller}"
    csv_path = telemetry.write_csv(result, out_dir / f"{stem}.csv")
    artifacts = {"csv": csv_path.name}
    artifacts.update(write_charts(scenario, [result], out_dir, stem))
    doc = telemetry.summary_dict(result, scenario, artifacts, seed)
    doc["delta_u_identically_zero"] = _delta_u_zero(result)
    path = telemetry.write_summary(doc, out_dir / f"{stem}_summary.toml")
    return doc, path


def _print_run(doc: dict) -> None:
    rep = doc["report"]
    print(f"[{doc['scenario']}/{doc['controller']}] verdict={doc['verdict']} termination={doc['termination']}")
    print(
        f"  max|e|={rep['max_e_norm']:.6g} max|x|={rep['max_x_norm']:.6g} max|u|={rep['max_u_norm']:.6g} "
        f"max ratio={rep['max_barrier_ratio']:.6g} |e_final|={rep['e_final_norm']:.6g} max|xr|={rep['xr_norm_max']:.6g}"
    )
    for kind, verdict in doc["verdicts"].items():
        print(f"  {kind:<12} {verdict}")


def cmd_simulate(args) -> int:
    scenario = _load(args)
    kind = args.controller or scenario.controller
    if kind not in scenario.gains:
        raise ConfigError(f"scenario has no gains.{kind} section")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = simulate(scenario, kind)
    doc, path = _write_run(scenario, result, out_dir, args.seed)
    _print_run(doc)
    print(f"  summary: {path}")
    return _exit_code(result)


def _row(label: str, r: SimResult) -> dict:
    rep = r.report
    return {
        "label": label,
        "controller": r.controller,
        "termination": r.termination,
        "t_end": r.log.t[-1],
        "max_e_norm": rep.max_e_norm,
        "max_u_norm": rep.max_u_norm,
        "e_final_norm": rep.e_final_norm,
        "state_breaches": rep.count("state"),
        "input_breaches": rep.count("input"),
        "barrier_breaches": rep.count("barrier"),
        "assumption1_breaches": rep.count("assumption1"),
    }


def comparison_rows(scenario: Scenario, include_sweep: bool = True) -> tuple[list[SimResult], list[dict], dict]:
    """Run both controllers on the scenario ICs and on every sweep point.

    Returns the two default-IC results, one table row per (point, controller)
    and the sweep outcome: which points show a classical violation
    (|e| > k_b or |u| > u_max) while the constrained run completes with no
    breach at all.
    """
    spec = scenario.constraints
    pair = [simulate(scenario, kind) for kind in ("classical", "constrained")]
    rows = [_row("scenario", r) for r in pair]
    qualifying = []
    points = scenario.sweep if include_sweep else ()
    for label, x0, xr0 in points:
        sc = scenario.with_overrides(x0=x0, xr0=xr0)
        cl, co = simulate(sc, "classical"), simulate(sc, "constrained")
        rows += [_row(label, cl), _row(label, co)]
        classical_violates = cl.report.max_e_norm > spec.k_b or cl.report.max_u_norm > spec.u_max
        if classical_violates and co.completed and not co.report.breach_events:
            qualifying.append(label)
    outcome = {"points": len(points), "qualifying": qualifying, "reproduced": bool(qualifying)}
    return pair, rows, outcome


def format_table(rows: list[dict]) -> str:
    cols = list(rows[0])
    cells = [[str(c) for c in cols]] + [
        [f"{v:.6g}" if isinstance(v, float) else str(v) for v in row.values()] for row in rows
    ]
    widths = [max(len(r[j]) for r in cells) for j in range(len(cols))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in cells)


def cmd_compare(args) -> int:
    scenario = _load(args)
    for kind in CONTROLLER_KINDS:
        if kind not in scenario.gains:
            raise ConfigError(f"compare needs a gains.{kind} section")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pair, rows, outcome = comparison_rows(scenario, include_sweep=not args.no_sweep)

    for r in pair:
        doc, _ = _write_run(scenario, r, out_dir, args.seed)
        _print_run(doc)
    write_charts(scenario, pair, out_dir, f"{scenario.name}_compare")

    constrained = pair[1]
    lines = [format_table(rows), ""]
    lines.append(f"constrained delta_u identically zero: {'yes' if _delta_u_zero(constrained) else 'no'}")
    if outcome["points"]:
        if outcome["reproduced"]:
            lines.append(
                "classical violation with zero constrained breaches: reproduced at " + ", ".join(outcome["qualifying"])
            )
        else:
            lines.append(
                f"classical violation with zero constrained breaches: NOT reproduced at any of {outcome['points']} sweep points"
            )
    text = "\n".join(lines) + "\n"
    (out_dir / f"{scenario.name}_compare.txt").write_text(text)
    with (out_dir / f"{scenario.name}_compare_table.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")  # sweep labels may contain commas
        writer.writerow(rows[0])
        writer.writerows([telemetry.fmt(v) if isinstance(v, float) else str(v) for v in row.values()] for row in rows)
    print(text, end="")

    codes = [_exit_code(r) for r in pair]
    if EXIT_NUMERIC in codes:
        return EXIT_NUMERIC
    return _exit_code(constrained)


def cmd_check_matching(args) -> int:
    scenario = load_scenario(args.config)
    np.set_printoptions(precision=12, suppress=True, linewidth=140)
    try:
        gains = solve_matching_gains(scenario.plant, scenario.reference)
    except MatchingInfeasible as exc:
        print(f"matching infeasible: residual_x={exc.residual_x:.3e} residual_r={exc.residual_r:.3e}")
        return EXIT_MATCHING
    print("K_x =")
    print(gains.K_x)
    print("K_r =")
    print(gains.K_r)
    print(f"residual |A + B K_x - A_r|_F = {gains.residual_x:.3e}")
    print(f"residual |B K_r - B_r|_F     = {gains.residual_r:.3e}")
    return EXIT_OK


def cmd_recheck(args) -> int:
    problems = telemetry.recheck(args.summary)
    if problems:
        for p in problems:
            print(f"mismatch: {p}")
        return EXIT_RECHECK
    print(f"{args.summary}: summary reproduced from CSV")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "check-matching": cmd_check_matching,
    "recheck": cmd_recheck,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
