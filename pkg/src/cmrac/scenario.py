"""Scenario configuration: TOML files with matrices as nested arrays of rows."""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import linalg
from .analysis import LyapunovCert, make_cert
from .controllers import check_gain
from .exceptions import CMRACError, ConfigError
from .models import ConstraintSpec, PlantModel, ReferenceModel, ReferenceSignal
from .simulation import CONTROLLER_KINDS, SimConfig

BUNDLED = ("paper_sec4",)


@dataclass(frozen=True)
class Scenario:
    name: str
    plant: PlantModel
    reference: ReferenceModel
    constraints: ConstraintSpec
    Q: np.ndarray
    gains: dict
    controller: str = "constrained"
    K1_init: str = "B"
    sim: SimConfig = SimConfig()
    sweep: tuple = ()
    plot_states: tuple[int, ...] = ()

    @cached_property
    def cert(self) -> LyapunovCert:
        return make_cert(self.reference.A_r, self.constraints.k_b, self.Q)

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    def with_overrides(
        self, dt=None, t_final=None, u_max=None, q_scale=None, x0=None, xr0=None, log_stride=None
    ) -> "Scenario":
        sim_changes = {
            k: v
            for k, v in (("dt", dt), ("t_final", t_final), ("x0", x0), ("xr0", xr0), ("log_stride", log_stride))
            if v is not None
        }
        out = self
        if sim_changes:
            out = out.replace(sim=dataclasses.replace(out.sim, **sim_changes))
        if u_max is not None:
            out = out.replace(constraints=dataclasses.replace(out.constraints, u_max=float(u_max)))
        if q_scale is not None:
            if not q_scale > 0:
                raise ConfigError(f"q_scale must be positive, got {q_scale}")
            out = out.replace(Q=float(q_scale) * np.eye(out.plant.n))
        return out


def _matrix(tree: dict, key: str, where: str, rows=None, cols=None) -> np.ndarray:
    if key not in tree:
        raise ConfigError(f"missing field {where}.{key}")
    try:
        return linalg.as_matrix(tree[key], rows, cols, name=f"{where}.{key}")
    except (ValueError, CMRACError) as exc:
        raise ConfigError(str(exc)) from None


def _gain(tree: dict, key: str, where: str, size: int) -> np.ndarray:
    """A gain given as a scalar means scalar * identity."""
    if key not in tree:
        raise ConfigError(f"missing field {where}.{key}")
    val = tree[key]
    G = float(val) * np.eye(size) if isinstance(val, (int, float)) else _matrix(tree, key, where, size, size)
    try:
        return check_gain(G, size, f"{where}.{key}")
    except CMRACError as exc:
        raise ConfigError(str(exc)) from None


def _float(tree: dict, key: str, where: str, default=None) -> float:
    if key not in tree:
        if default is None:
            raise ConfigError(f"missing field {where}.{key}")
        return default
    try:
        return float(tree[key])
    except (TypeError, ValueError):
        raise ConfigError(f"{where}.{key} must be a number") from None


def _signal(tree: dict, m: int) -> ReferenceSignal:
    kind = tree.get("kind", "zero")
    return ReferenceSignal(
        kind,
        amplitudes=tuple(tree.get("amplitudes", ())),
        time_constants=tuple(tree.get("time_constants", ())),
        frequencies=tuple(tree.get("frequencies", ())),
        phases=tuple(tree.get("phases", ())),
        m=m,
    )


def scenario_from_dict(doc: dict, name: str = "scenario") -> Scenario:
    try:
        return _scenario_from_dict(doc, name)
    except ConfigError:
        raise
    except (CMRACError, TypeError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from None


def _scenario_from_dict(doc: dict, name: str) -> Scenario:
    name = doc.get("name", name)
    plant_t = doc.get("plant", {})
    A = _matrix(plant_t, "A", "plant")
    n = A.shape[0]
    B = _matrix(plant_t, "B", "plant", rows=n)
    m = B.shape[1]
    plant = PlantModel(A, B)

    ref_t = doc.get("reference", {})
    signal = _signal(ref_t.get("signal", {}), m)
    reference = ReferenceModel(_matrix(ref_t, "A_r", "reference", n, n), _matrix(ref_t, "B_r", "reference", n, m), signal)

    c_t = doc.get("constraints", {})
    constraints = ConstraintSpec(
        beta=_float(c_t, "beta", "constraints"),
        alpha1=_float(c_t, "alpha1", "constraints"),
        u_max=_float(c_t, "u_max", "constraints"),
        alpha2=_float(c_t, "alpha2", "constraints", math.inf),
    )
    if "k_b" in c_t and abs(float(c_t["k_b"]) - constraints.k_b) > 1e-12:
        raise ConfigError(f"constraints.k_b = {c_t['k_b']} disagrees with beta - alpha1 = {constraints.k_b}")

    ly_t = doc.get("lyapunov", {})
    if "Q" in ly_t:
        Q = _matrix(ly_t, "Q", "lyapunov", n, n)
    else:
        Q = _float(ly_t, "q_scale", "lyapunov", 1.0) * np.eye(n)

    g_t = doc.get("gains", {})
    gains = {}
    if "classical" in g_t:
        gt = g_t["classical"]
        gains["classical"] = {k: _gain(gt, k, "gains.classical", m) for k in ("Gamma_x", "Gamma_r")}
    if "constrained" in g_t:
        gt = g_t["constrained"]
        gains["constrained"] = {k: _gain(gt, k, "gains.constrained", m) for k in ("Gamma_x", "Gamma_r")}
        gains["constrained"].update({k: _gain(gt, k, "gains.constrained", n) for k in ("Gamma_d", "Gamma_1")})
    if not gains:
        raise ConfigError("gains: at least one of gains.classical / gains.constrained is required")

    controller = doc.get("controller", "constrained")
    if controller not in CONTROLLER_KINDS:
        raise ConfigError(f"controller must be one of {CONTROLLER_KINDS}, got {controller!r}")
    K1_init = doc.get("init", {}).get("K1", "B")
    if K1_init not in ("B", "zero"):
        raise ConfigError(f"init.K1 must be 'B' or 'zero', got {K1_init!r}")

    s_t = doc.get("simulation", {})
    sim = SimConfig(
        dt=_float(s_t, "dt", "simulation", 1e-3),
        t_final=_float(s_t, "t_final", "simulation", 40.0),
        x0=s_t.get("x0"),
        xr0=s_t.get("xr0"),
        guard_epsilon=_float(s_t, "guard_epsilon", "simulation", 1e-6),
        log_stride=s_t.get("log_stride", 10),
    )
    sim.initial_states(n)

    sweep = []
    for i, point in enumerate(doc.get("sweep", {}).get("points", [])):
        x0 = np.array(point.get("x0", [0.0] * n), dtype=float)
        xr0 = np.array(point.get("xr0", [0.0] * n), dtype=float)
        if x0.shape != (n,) or xr0.shape != (n,):
            raise ConfigError(f"sweep.points[{i}]: x0 / xr0 must have length {n}")
        if not np.linalg.norm(x0 - xr0) < constraints.k_b:
            raise ConfigError(f"sweep.points[{i}]: |x0 - xr0| must be below k_b")
        sweep.append((point.get("label", f"point{i}"), tuple(x0), tuple(xr0)))

    plot_states = tuple(int(i) for i in doc.get("plot", {}).get("states", range(1, min(n, 2) + 1)))
    if any(not 1 <= i <= n for i in plot_states):
        raise ConfigError(f"plot.states entries must lie in 1..{n}")

    scenario = Scenario(name, plant, reference, constraints, Q, gains, controller, K1_init, sim, tuple(sweep), plot_states)
    try:
        scenario.cert
    except (CMRACError, ArithmeticError) as exc:
        raise ConfigError(f"lyapunov: {exc}") from None
    return scenario


def load_scenario(ref: str | Path) -> Scenario:
    """Load a bundled scenario by name (e.g. ``paper_sec4``) or a TOML file by path."""
    ref = str(ref)
    if ref in BUNDLED:
        text = resources.files("cmrac.scenarios").joinpath(f"{ref}.toml").read_text()
        name = ref
    else:
        path = Path(ref)
        if not path.is_file():
            raise ConfigError(f"scenario {ref!r} is neither a bundled name {BUNDLED} nor an existing file")
        text = path.read_text()
        name = path.stem
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{ref}: {exc}") from None
    return scenario_from_dict(doc, name)
