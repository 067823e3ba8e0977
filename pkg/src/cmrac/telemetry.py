"""CSV trajectory files, key/value run summaries and the CSV re-checker."""

from __future__ import annotations

import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .analysis import ConstraintReport, update_report
from .models import ConstraintSpec
from .simulation import SimResult


def fmt(value: float) -> str:
    """17 significant digits: every float64 round-trips exactly."""
    return f"{float(value):.17g}"


def csv_header(n: int, m: int) -> list[str]:
    return (
        ["t"]
        + [f"x{i}" for i in range(1, n + 1)]
        + [f"xr{i}" for i in range(1, n + 1)]
        + ["e_norm"]
        + [f"u{i}" for i in range(1, m + 1)]
        + ["u_norm"]
        + [f"v{i}" for i in range(1, m + 1)]
        + ["V", "Vdot", "barrier_ratio"]
        + [f"sat{i}" for i in range(1, m + 1)]
    )


def write_csv(result: SimResult, path: str | Path) -> Path:
    path = Path(path)
    L = result.log
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(csv_header(L.n, L.m))
        for k in range(len(L)):
            w.writerow(
                [fmt(L.t[k])]
                + [fmt(v) for v in L.x[k]]
                + [fmt(v) for v in L.xr[k]]
                + [fmt(L.e_norm[k])]
                + [fmt(v) for v in L.u[k]]
                + [fmt(L.u_norm[k])]
                + [fmt(v) for v in L.v[k]]
                + [fmt(L.V[k]), fmt(L.Vdot[k]), fmt(L.barrier_ratio[k])]
                + [str(int(s)) for s in L.sat[k]]
            )
    return path


def read_csv(path: str | Path) -> dict[str, np.ndarray]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in row] for row in body]) if body else np.empty((0, len(header)))
    return {name: data[:, j] for j, name in enumerate(header)}


# --- summary ---------------------------------------------------------------

def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, str):
        return json.dumps(v)
    if v is None:
        return '""'
    return "[" + ", ".join(_toml_value(x) for x in v) + "]"


def monitor_verdicts(result: SimResult) -> dict[str, str]:
    rep = result.report
    out = {kind: ("fail" if rep.count(kind) else "pass") for kind in ("state", "input", "barrier", "assumption1")}
    out["completed"] = "pass" if result.completed else "fail"
    return out


def summary_dict(result: SimResult, scenario, artifacts: dict[str, str] | None = None, seed=None) -> dict:
    cfg, spec, cert = result.config, scenario.constraints, scenario.cert
    rep = result.report
    n = scenario.plant.n
    x0, xr0 = cfg.initial_states(n)
    return {
        "scenario": result.scenario,
        "controller": result.controller,
        "verdict": result.verdict,
        "completed": result.completed,
        "termination": result.termination,
        "termination_time": math.nan if result.termination_time is None else result.termination_time,
        "artifacts": artifacts or {},
        "config": {
            "dt": cfg.dt,
            "t_final": cfg.t_final,
            "log_stride": int(cfg.log_stride),
            "guard_epsilon": cfg.guard_epsilon,
            "x0": list(x0),
            "xr0": list(xr0),
            "beta": spec.beta,
            "alpha1": spec.alpha1,
            "alpha2": spec.alpha2,
            "u_max": spec.u_max,
            "k_b": spec.k_b,
            "Q_diag": list(np.diag(scenario.Q)),
            "Q_is_diagonal": bool(np.count_nonzero(scenario.Q - np.diag(np.diag(scenario.Q))) == 0),
            "lambda_min_P": cert.lambda_min,
            "kb_prime": cert.kb_prime,
            "K1_init": scenario.K1_init,
            "seed": "" if seed is None else str(seed),
        },
        "report": {
            "max_e_norm": rep.max_e_norm,
            "max_x_norm": rep.max_x_norm,
            "max_u_norm": rep.max_u_norm,
            "max_barrier_ratio": rep.max_barrier_ratio,
            "e_final_norm": rep.e_final_norm,
            "xr_norm_max": rep.xr_norm_max,
            "breach_times": [t for t, _ in rep.breach_events],
            "breach_kinds": [k for _, k in rep.breach_events],
        },
        "verdicts": monitor_verdicts(result),
    }


def dump_summary(doc: dict) -> str:
    lines, tables = [], []
    for key, val in doc.items():
        if isinstance(val, dict):
            tables.append((key, val))
        else:
            lines.append(f"{key} = {_toml_value(val)}")
    for name, table in tables:
        lines.append("")
        lines.append(f"[{name}]")
        lines.extend(f"{k} = {_toml_value(v)}" for k, v in table.items())
    return "\n".join(lines) + "\n"


def write_summary(doc: dict, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(dump_summary(doc))
    return path


def read_summary(path: str | Path) -> dict:
    return tomllib.loads(Path(path).read_text())


# --- re-checker -------------------------------------------------------------

def report_from_csv(path: str | Path, spec: ConstraintSpec) -> ConstraintReport:
    """Recompute the constraint report from a trajectory CSV alone."""
    cols = read_csv(path)
    n = sum(1 for k in cols if k.startswith("x") and not k.startswith("xr"))
    X = np.column_stack([cols[f"x{i}"] for i in range(1, n + 1)])
    XR = np.column_stack([cols[f"xr{i}"] for i in range(1, n + 1)])
    report = ConstraintReport()
    for k in range(len(cols["t"])):
        update_report(
            report,
            float(cols["t"][k]),
            float(cols["e_norm"][k]),
            float(np.linalg.norm(X[k])),
            float(cols["u_norm"][k]),
            float(np.linalg.norm(XR[k])),
            float(cols["barrier_ratio"][k]),
            spec,
        )
    return report


def _same(a: float, b: float) -> bool:
    return a == b or (math.isnan(a) and math.isnan(b))


def recheck(summary_path: str | Path) -> list[str]:
    """Re-derive the report and verdict from the CSV named in a summary.

    Returns a list of disagreements; empty means the summary is reproducible.
    """
    summary_path = Path(summary_path)
    doc = read_summary(summary_path)
    cfg = doc["config"]
    spec = ConstraintSpec(beta=cfg["beta"], alpha1=cfg["alpha1"], u_max=cfg["u_max"], alpha2=cfg["alpha2"])
    csv_path = Path(doc["artifacts"]["csv"])
    if not csv_path.is_absolute():
        csv_path = summary_path.parent / csv_path
    rep = report_from_csv(csv_path, spec)
    t = read_csv(csv_path)["t"]
    completed = bool(len(t)) and t[-1] >= cfg["t_final"] - 0.5 * cfg["dt"]

    problems = []
    stored = doc["report"]
    for key in ("max_e_norm", "max_x_norm", "max_u_norm", "max_barrier_ratio", "e_final_norm", "xr_norm_max"):
        if not _same(getattr(rep, key), stored[key]):
            problems.append(f"{key}: summary {stored[key]!r} vs csv {getattr(rep, key)!r}")
    events = [(float(a), b) for a, b in zip(stored["breach_times"], stored["breach_kinds"])]
    if events != rep.breach_events:
        problems.append(f"breach events differ: summary {events} vs csv {rep.breach_events}")
    if completed != doc["completed"]:
        problems.append(f"completed: summary {doc['completed']} vs csv {completed}")
    verdict = "pass" if completed and not rep.breach_events else "fail"
    if verdict != doc["verdict"]:
        problems.append(f"verdict: summary {doc['verdict']} vs csv {verdict}")
    return problems
