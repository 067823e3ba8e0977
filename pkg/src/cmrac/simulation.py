"""Fixed-step RK4 integration of the augmented closed loop."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import analysis
from .analysis import ConstraintReport, LyapunovCert
from .controllers import (
    ClassicalState,
    ConstrainedState,
    auxiliary_control,
    classical_control,
    classical_update,
    compute_ed,
    constrained_update,
    saturate,
)
from .exceptions import BarrierBreach, ConfigError, MatchingInfeasible
from .models import ConstraintSpec, PlantModel, ReferenceModel, TrueGains, solve_matching_gains

log = logging.getLogger(__name__)

CONTROLLER_KINDS = ("classical", "constrained")


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    t_final: float = 40.0
    x0: tuple[float, ...] | None = None
    xr0: tuple[float, ...] | None = None
    guard_epsilon: float = 1e-6
    log_stride: int = 10

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigError(f"simulation.dt must be positive, got {self.dt}")
        if not (math.isfinite(self.t_final) and self.t_final > 0):
            raise ConfigError(f"simulation.t_final must be positive, got {self.t_final}")
        if int(self.log_stride) != self.log_stride or self.log_stride < 1:
            raise ConfigError(f"simulation.log_stride must be an integer >= 1, got {self.log_stride}")
        if not 0 <= self.guard_epsilon < 1:
            raise ConfigError(f"simulation.guard_epsilon must lie in [0, 1), got {self.guard_epsilon}")
        for name in ("x0", "xr0"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, tuple(float(v) for v in val))

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_final / self.dt)))

    def initial_states(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        x0 = np.zeros(n) if self.x0 is None else np.array(self.x0)
        xr0 = np.zeros(n) if self.xr0 is None else np.array(self.xr0)
        if x0.shape != (n,) or xr0.shape != (n,):
            raise ConfigError(f"simulation.x0 / xr0 must have length {n}")
        return x0, xr0


def barrier_guard(e: np.ndarray, cert: LyapunovCert, guard_epsilon: float) -> str:
    """'breach' iff e'Pe >= (1 - guard_epsilon) kb'^2, else 'interior'."""
    return "breach" if float(e @ cert.P @ e) >= (1.0 - guard_epsilon) * cert.kb_prime_sq else "interior"


@dataclass(frozen=True)
class StateLayout:
    """Index map of the flat augmented state.

    Order: x | x_r | Kx_hat | Kr_hat, then Kd | K1 | e1 for the constrained
    controller. Matrix blocks are stored row-major.
    """

    n: int
    m: int
    constrained: bool

    def __post_init__(self):
        n, m = self.n, self.m
        sizes = [("x", n), ("xr", n), ("Kx_hat", m * n), ("Kr_hat", m * m)]
        if self.constrained:
            sizes += [("Kd", n * m), ("K1", n * m), ("e1", n)]
        slices, start = {}, 0
        for name, size in sizes:
            slices[name] = slice(start, start + size)
            start += size
        object.__setattr__(self, "slices", slices)
        object.__setattr__(self, "size", start)

    def block(self, y: np.ndarray, name: str) -> np.ndarray:
        s = self.slices[name]
        if name == "Kx_hat":
            return y[s].reshape(self.m, self.n)
        if name == "Kr_hat":
            return y[s].reshape(self.m, self.m)
        if name in ("Kd", "K1"):
            return y[s].reshape(self.n, self.m)
        return y[s]


def flatten_state(x: np.ndarray, x_r: np.ndarray, ctrl: ClassicalState | ConstrainedState) -> np.ndarray:
    parts = [x, x_r, ctrl.Kx_hat.ravel(), ctrl.Kr_hat.ravel()]
    if isinstance(ctrl, ConstrainedState):
        parts += [ctrl.Kd.ravel(), ctrl.K1.ravel(), ctrl.e1]
    return np.concatenate([np.asarray(p, dtype=float).ravel() for p in parts])


def unflatten_state(y: np.ndarray, template: ClassicalState | ConstrainedState):
    """Inverse of :func:`flatten_state`; Gamma blocks are taken from ``template``."""
    m, n = template.Kx_hat.shape
    constrained = isinstance(template, ConstrainedState)
    lay = StateLayout(n, m, constrained)
    x, xr = lay.block(y, "x").copy(), lay.block(y, "xr").copy()
    if constrained:
        ctrl = ConstrainedState(
            lay.block(y, "Kx_hat").copy(), lay.block(y, "Kr_hat").copy(),
            lay.block(y, "K1").copy(), lay.block(y, "Kd").copy(), lay.block(y, "e1").copy(),
            template.Gamma_x, template.Gamma_r, template.Gamma_d, template.Gamma_1,
        )
    else:
        ctrl = ClassicalState(lay.block(y, "Kx_hat").copy(), lay.block(y, "Kr_hat").copy(), template.Gamma_x, template.Gamma_r)
    return x, xr, ctrl


class ClosedLoop:
    """Plant + reference model + one adaptive controller as a single ODE."""

    def __init__(
        self,
        plant: PlantModel,
        ref: ReferenceModel,
        cert: LyapunovCert,
        spec: ConstraintSpec,
        initial: ClassicalState | ConstrainedState,
        guard_epsilon: float = 0.0,
    ):
        if plant.n != ref.n or plant.m != ref.B_r.shape[1]:
            raise ConfigError("plant and reference model dimensions differ")
        self.plant, self.ref, self.cert, self.spec = plant, ref, cert, spec
        self.initial = initial
        self.constrained = isinstance(initial, ConstrainedState)
        self.layout = StateLayout(plant.n, plant.m, self.constrained)
        self.guard_epsilon = guard_epsilon

    def controller_state(self, y: np.ndarray) -> ClassicalState | ConstrainedState:
        """Controller view onto the flat state (no copies)."""
        lay, g = self.layout, self.initial
        if self.constrained:
            return ConstrainedState(
                lay.block(y, "Kx_hat"), lay.block(y, "Kr_hat"), lay.block(y, "K1"), lay.block(y, "Kd"),
                lay.block(y, "e1"), g.Gamma_x, g.Gamma_r, g.Gamma_d, g.Gamma_1,
            )
        return ClassicalState(lay.block(y, "Kx_hat"), lay.block(y, "Kr_hat"), g.Gamma_x, g.Gamma_r)

    def decide(self, y: np.ndarray, t: float):
        """Evaluate r(t) and the controller output at state y."""
        ctrl = self.controller_state(y)
        x = self.layout.block(y, "x")
        r = self.ref.signal(t)
        if self.constrained:
            decision = saturate(auxiliary_control(ctrl, x, r), self.spec.u_max)
        else:
            u = classical_control(ctrl, x, r)
            decision = analysis.ControlDecision(u, u, np.zeros_like(u), np.zeros(u.shape, dtype=bool))
        return ctrl, r, decision

    def derivative(self, t: float, y: np.ndarray) -> np.ndarray:
        lay = self.layout
        x, xr = lay.block(y, "x"), lay.block(y, "xr")
        e = x - xr
        ctrl, r, dec = self.decide(y, t)
        B, P = self.plant.B, self.cert.P
        if self.constrained:
            if barrier_guard(e, self.cert, self.guard_epsilon) == "breach":
                raise BarrierBreach(analysis.barrier_ratio(e, self.cert), t)
            e_d = compute_ed(e, ctrl.e1)
            rates = constrained_update(
                ctrl, e, e_d, x, r, dec.delta_u, B, P, self.cert.kb_prime, self.ref.A_r, self.guard_epsilon
            )
            tail = (rates.Kx_hat.ravel(), rates.Kr_hat.ravel(), rates.Kd.ravel(), rates.K1.ravel(), rates.e1)
        else:
            rates = classical_update(ctrl, e, x, r, B, P)
            tail = (rates.Kx_hat.ravel(), rates.Kr_hat.ravel())
        # the plant matrix A is used here, on the simulator side only
        xdot = self.plant.A @ x + B @ dec.u
        xrdot = self.ref.A_r @ xr + self.ref.B_r @ r
        return np.concatenate((xdot, xrdot) + tail)


def closed_loop_derivative(y: np.ndarray, t: float, loop: ClosedLoop) -> np.ndarray:
    return loop.derivative(t, y)


def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], y: np.ndarray, t: float, dt: float) -> np.ndarray:
    """One classical Runge-Kutta step; f is evaluated fresh at all four stages."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass
class TrajectoryLog:
    n: int
    m: int
    t: list = field(default_factory=list)
    x: list = field(default_factory=list)
    xr: list = field(default_factory=list)
    e_norm: list = field(default_factory=list)
    u: list = field(default_factory=list)
    u_norm: list = field(default_factory=list)
    v: list = field(default_factory=list)
    V: list = field(default_factory=list)
    Vdot: list = field(default_factory=list)
    Vdot_traj: list = field(default_factory=list)
    barrier_ratio: list = field(default_factory=list)
    sat: list = field(default_factory=list)
    states: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.t)

    def array(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self, name))


@dataclass
class SimResult:
    scenario: str
    controller: str
    config: SimConfig
    log: TrajectoryLog
    report: ConstraintReport
    layout: StateLayout
    completed: bool = True
    termination: str = "completed"
    termination_time: float | None = None
    u_max: float = math.inf

    @property
    def verdict(self) -> str:
        return "pass" if self.completed and not self.report.breach_events else "fail"

    def block_history(self, name: str) -> np.ndarray:
        S = np.asarray(self.log.states)
        return np.stack([self.layout.block(row, name) for row in S])


class _Recorder:
    def __init__(self, loop: ClosedLoop, true_gains: TrueGains | None, report: ConstraintReport):
        self.loop, self.true_gains, self.report = loop, true_gains, report
        self.log = TrajectoryLog(loop.plant.n, loop.plant.m)

    def record(self, t: float, y: np.ndarray) -> None:
        # the last state of a failed run can hold overflowing gains; log it as is
        with np.errstate(over="ignore", invalid="ignore"):
            self._record(t, y)

    def _record(self, t: float, y: np.ndarray) -> None:
        loop, lay, cert = self.loop, self.loop.layout, self.loop.cert
        ctrl, r, dec = loop.decide(y, t)
        x, xr = lay.block(y, "x"), lay.block(y, "xr")
        e = x - xr
        e_norm = float(np.linalg.norm(e))
        u_norm = float(np.linalg.norm(dec.u))
        ratio = analysis.barrier_ratio(e, cert)
        V = Vdot = Vdot_traj = math.nan
        tg = self.true_gains
        if loop.constrained:
            e_d = compute_ed(e, ctrl.e1)
            if ratio < 1.0:
                Vdot = analysis.vdot_simplified(e, e_d, cert)
                Vdot_traj = analysis.vdot_along_trajectory(e, e_d, dec.delta_u, ctrl.Kd, ctrl.K1, loop.plant.B, cert)
                if tg is not None:
                    V = analysis.lyapunov_value(
                        e, e_d, ctrl.Kx_hat - tg.K_x, ctrl.Kr_hat - tg.K_r, ctrl.Kd, ctrl.K1, cert,
                        ctrl.Gamma_x, ctrl.Gamma_r, ctrl.Gamma_d, ctrl.Gamma_1,
                    )
        else:
            Vdot = Vdot_traj = analysis.classical_vdot(e, cert)
            if tg is not None:
                V = analysis.classical_lyapunov_value(
                    e, ctrl.Kx_hat - tg.K_x, ctrl.Kr_hat - tg.K_r, cert, ctrl.Gamma_x, ctrl.Gamma_r
                )
        L = self.log
        L.t.append(t)
        L.x.append(x.copy())
        L.xr.append(xr.copy())
        L.e_norm.append(e_norm)
        L.u.append(dec.u.copy())
        L.u_norm.append(u_norm)
        L.v.append(dec.v.copy())
        L.V.append(V)
        L.Vdot.append(Vdot)
        L.Vdot_traj.append(Vdot_traj)
        L.barrier_ratio.append(ratio)
        L.sat.append(dec.saturated.copy())
        L.states.append(y.copy())
        analysis.update_report(
            self.report, t, e_norm, float(np.linalg.norm(x)), u_norm, float(np.linalg.norm(xr)), ratio, loop.spec
        )


def build_initial_controller(kind: str, B: np.ndarray, gains: dict, K1_init: str = "B"):
    n, m = B.shape
    if kind == "classical":
        return ClassicalState.initial(n, m, gains["Gamma_x"], gains["Gamma_r"])
    if kind == "constrained":
        return ConstrainedState.initial(B, gains["Gamma_x"], gains["Gamma_r"], gains["Gamma_d"], gains["Gamma_1"], K1_init)
    raise ConfigError(f"controller must be one of {CONTROLLER_KINDS}, got {kind!r}")


def simulate(scenario, controller_kind: str, sim: SimConfig | None = None) -> SimResult:
    """Integrate one controller on a scenario over [0, t_final].

    A barrier-guard trip (constrained controller) or a non-finite state ends
    the run early; the result is then marked not completed.
    """
    sim = scenario.sim if sim is None else sim
    plant, ref, spec = scenario.plant, scenario.reference, scenario.constraints
    cert = scenario.cert
    gains = scenario.gains[controller_kind] if controller_kind in CONTROLLER_KINDS else None
    initial = build_initial_controller(controller_kind, plant.B, gains, scenario.K1_init)
    x0, xr0 = sim.initial_states(plant.n)
    e0_norm = float(np.linalg.norm(x0 - xr0))
    if not e0_norm < spec.k_b:
        raise ConfigError(f"initial tracking error |x0 - xr0| = {e0_norm:.6g} must be below k_b = {spec.k_b:.6g}")
    if controller_kind == "constrained" and barrier_guard(x0 - xr0, cert, sim.guard_epsilon) == "breach":
        raise ConfigError("initial tracking error lies outside the barrier region e'Pe < kb'^2")

    try:
        true_gains = solve_matching_gains(plant, ref)
    except MatchingInfeasible:
        true_gains = None

    loop = ClosedLoop(plant, ref, cert, spec, initial, sim.guard_epsilon)
    report = ConstraintReport()
    rec = _Recorder(loop, true_gains, report)
    result = SimResult(scenario.name, controller_kind, sim, rec.log, report, loop.layout, u_max=spec.u_max)

    y = flatten_state(x0, xr0, initial)
    n_steps, dt, stride = sim.n_steps, sim.dt, int(sim.log_stride)
    rec.record(0.0, y)
    last_logged = 0
    for k in range(n_steps):
        t = k * dt
        try:
            # overflow inside a failing step is caught by the finiteness check below
            with np.errstate(over="ignore", invalid="ignore"):
                y_next = rk4_step(loop.derivative, y, t, dt)
        except BarrierBreach as exc:
            result.completed, result.termination, result.termination_time = False, "barrier_breach", t
            log.warning("%s/%s: barrier guard tripped during step starting at t=%.6g (ratio %.9g)",
                        scenario.name, controller_kind, t, exc.ratio)
            break
        if not np.all(np.isfinite(y_next)):
            result.completed, result.termination, result.termination_time = False, "numerical_failure", t
            log.warning("%s/%s: non-finite state after step starting at t=%.6g", scenario.name, controller_kind, t)
            break
        y = y_next
        if (k + 1) % stride == 0 or k + 1 == n_steps:
            rec.record((k + 1) * dt, y)
            last_logged = k + 1
    if not result.completed and last_logged != round(result.termination_time / dt):
        rec.record(result.termination_time, y)
    return result
