"""Lyapunov certificates, barrier/Lyapunov evaluators and constraint monitors.

Everything that needs the ideal gains (Ktilde = Khat - K) is an oracle-side
quantity: it is only computable inside a simulation, where A is known.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .controllers import ConstrainedState, ControlDecision, constrained_update
from .exceptions import BarrierBreach
from .models import ConstraintSpec

LYAPUNOV_REL_TOL = 1e-9
INPUT_SLACK = 1e-12


@dataclass(frozen=True)
class LyapunovCert:
    Q: np.ndarray
    P: np.ndarray
    lambda_min: float
    kb_prime: float

    @property
    def kb_prime_sq(self) -> float:
        return self.kb_prime * self.kb_prime


def make_cert(A_r: np.ndarray, k_b: float, Q: np.ndarray | None = None) -> LyapunovCert:
    """Solve for P, check the residual and derive kb' = k_b sqrt(lambda_min(P))."""
    n = A_r.shape[0]
    Q = np.eye(n) if Q is None else linalg.as_matrix(Q, n, n, name="Q")
    P = linalg.solve_lyapunov(A_r, Q)
    residual = linalg.lyapunov_residual(A_r, P, Q)
    if residual > LYAPUNOV_REL_TOL * linalg.frobenius_norm(Q):
        raise ArithmeticError(f"Lyapunov residual {residual:.3e} exceeds tolerance")
    lam = linalg.min_eig_sym(P)
    if lam <= 0:
        raise ArithmeticError(f"Lyapunov solution not positive definite (lambda_min = {lam:.3e})")
    return LyapunovCert(Q, P, lam, k_b * math.sqrt(lam))


def barrier_ratio(e: np.ndarray, cert: LyapunovCert) -> float:
    """e'Pe / kb'^2; the barrier interior is ratio < 1."""
    return float(e @ cert.P @ e) / cert.kb_prime_sq


def _denominator(e: np.ndarray, cert: LyapunovCert) -> float:
    D = cert.kb_prime_sq - float(e @ cert.P @ e)
    if D <= 0:
        raise BarrierBreach(1.0 - D / cert.kb_prime_sq)
    return D


def blf_value(e: np.ndarray, cert: LyapunovCert) -> float:
    """V1 = 1/2 log(kb'^2 / (kb'^2 - e'Pe)); infinite at the barrier."""
    D = _denominator(e, cert)
    return 0.5 * math.log(cert.kb_prime_sq / D)


def _weighted_trace(K: np.ndarray, Gamma: np.ndarray) -> float:
    """tr(K' Gamma^-1 K)."""
    return float(np.sum(K * np.linalg.solve(Gamma, K)))


def lyapunov_value(e, e_d, Ktilde_x, Ktilde_r, K_d, K_1, cert: LyapunovCert, Gamma_x, Gamma_r, Gamma_d, Gamma_1) -> float:
    """Composite barrier Lyapunov function of the constrained closed loop."""
    return blf_value(e, cert) + 0.5 * (
        float(e_d @ cert.P @ e_d)
        + _weighted_trace(Ktilde_x, Gamma_x)
        + _weighted_trace(Ktilde_r, Gamma_r)
        + _weighted_trace(K_d, Gamma_d)
        + _weighted_trace(K_1, Gamma_1)
    )


def vdot_simplified(e, e_d, cert: LyapunovCert) -> float:
    """-1/2 (e'Qe / (kb'^2 - e'Pe) + e_d'Q e_d), never positive."""
    D = _denominator(e, cert)
    return -0.5 * (float(e @ cert.Q @ e) / D + float(e_d @ cert.Q @ e_d))


def vdot_expanded(
    e: np.ndarray,
    e_d: np.ndarray,
    x: np.ndarray,
    r: np.ndarray,
    decision: ControlDecision,
    state: ConstrainedState,
    cert: LyapunovCert,
    K_x: np.ndarray,
    K_r: np.ndarray,
    B: np.ndarray,
    A_r: np.ndarray,
) -> float:
    """Term-by-term derivative of the composite Lyapunov function.

    B in the deficit channel is written as Kd + K1, every cross term is kept
    separately, and the parameter rates come from :func:`constrained_update`.
    Agreement with :func:`vdot_simplified` therefore checks that the
    adaptive laws cancel every cross term.
    """
    P = cert.P
    D = _denominator(e, cert)
    du = decision.delta_u
    Ktx = state.Kx_hat - K_x
    Ktr = state.Kr_hat - K_r
    Kd, K1 = state.Kd, state.K1
    sym = A_r.T @ P + P @ A_r

    barrier = (
        e @ sym @ e
        + e @ P @ B @ Ktx @ x
        + e @ P @ B @ Ktr @ r
        + e @ P @ (Kd + K1) @ du
        + x @ Ktx.T @ B.T @ P @ e
        + r @ Ktr.T @ B.T @ P @ e
        + du @ (Kd + K1).T @ P @ e
    ) / (2.0 * D)
    auxiliary = 0.5 * (
        e_d @ sym @ e_d
        + e_d @ P @ B @ Ktx @ x
        + e_d @ P @ B @ Ktr @ r
        + e_d @ P @ Kd @ du
        + x @ Ktx.T @ B.T @ P @ e_d
        + r @ Ktr.T @ B.T @ P @ e_d
        + du @ Kd.T @ P @ e_d
    )
    rates = constrained_update(state, e, e_d, x, r, du, B, P, cert.kb_prime, A_r)
    adaptation = (
        float(np.trace(Ktx.T @ np.linalg.solve(state.Gamma_x, rates.Kx_hat)))
        + float(np.trace(Ktr.T @ np.linalg.solve(state.Gamma_r, rates.Kr_hat)))
        + float(np.trace(Kd.T @ np.linalg.solve(state.Gamma_d, rates.Kd)))
        + float(np.trace(K1.T @ np.linalg.solve(state.Gamma_1, rates.K1)))
    )
    return float(barrier + auxiliary + adaptation)


def vdot_along_trajectory(e, e_d, delta_u, K_d, K_1, B, cert: LyapunovCert) -> float:
    """Rate of the composite Lyapunov function along the actual closed loop.

    The real error channels carry B delta_u (tracking error) and
    (B - K1) delta_u (auxiliary difference), while the adaptive laws cancel
    (Kd + K1) delta_u. Whatever Kd + K1 has drifted away from B leaves the
    residual (Pe/D + Pe_d)' (B - Kd - K1) delta_u on top of the simplified rate.
    """
    D = _denominator(e, cert)
    w = cert.P @ e / D + cert.P @ e_d
    return vdot_simplified(e, e_d, cert) + float(w @ (B - K_d - K_1) @ delta_u)


def classical_lyapunov_value(e, Ktilde_x, Ktilde_r, cert: LyapunovCert, Gamma_x, Gamma_r) -> float:
    """1/2 [e'Pe + tr(Ktx' Gx^-1 Ktx) + tr(Ktr' Gr^-1 Ktr)] for the classical laws."""
    return 0.5 * (
        float(e @ cert.P @ e) + _weighted_trace(Ktilde_x, Gamma_x) + _weighted_trace(Ktilde_r, Gamma_r)
    )


def classical_vdot(e, cert: LyapunovCert) -> float:
    return -0.5 * float(e @ cert.Q @ e)


BREACH_KINDS = ("state", "input", "barrier", "assumption1")


@dataclass
class ConstraintReport:
    max_e_norm: float = 0.0
    max_x_norm: float = 0.0
    max_u_norm: float = 0.0
    max_barrier_ratio: float = 0.0
    e_final_norm: float = 0.0
    xr_norm_max: float = 0.0
    breach_events: list[tuple[float, str]] = field(default_factory=list)
    _active: set = field(default_factory=set, repr=False, compare=False)

    def count(self, kind: str) -> int:
        return sum(1 for _, k in self.breach_events if k == kind)

    @property
    def assumption1_violated(self) -> bool:
        return self.count("assumption1") > 0

    @property
    def theorem_breaches(self) -> list[tuple[float, str]]:
        return [ev for ev in self.breach_events if ev[1] != "assumption1"]


def monitor_step(
    t: float,
    x: np.ndarray,
    x_r: np.ndarray,
    e: np.ndarray,
    u: np.ndarray,
    cert: LyapunovCert,
    spec: ConstraintSpec,
    report: ConstraintReport,
) -> ConstraintReport:
    """Fold one sample into the running report.

    Boundaries are inclusive (|u| = u_max is allowed). A breach event is
    recorded when a monitor enters violation, not on every violating sample.
    """
    e_norm = float(np.linalg.norm(e))
    x_norm = float(np.linalg.norm(x))
    u_norm = float(np.linalg.norm(u))
    xr_norm = float(np.linalg.norm(x_r))
    ratio = barrier_ratio(e, cert)
    update_report(report, t, e_norm, x_norm, u_norm, xr_norm, ratio, spec)
    return report


def update_report(report: ConstraintReport, t, e_norm, x_norm, u_norm, xr_norm, ratio, spec: ConstraintSpec) -> None:
    """Scalar form of :func:`monitor_step`, shared with the CSV re-checker."""
    report.max_e_norm = max(report.max_e_norm, e_norm)
    report.max_x_norm = max(report.max_x_norm, x_norm)
    report.max_u_norm = max(report.max_u_norm, u_norm)
    report.max_barrier_ratio = max(report.max_barrier_ratio, ratio)
    report.xr_norm_max = max(report.xr_norm_max, xr_norm)
    report.e_final_norm = e_norm
    violated = {
        "state": x_norm > spec.beta,
        "input": u_norm > spec.u_max * (1.0 + INPUT_SLACK),
        "barrier": ratio >= 1.0,
        "assumption1": xr_norm > spec.alpha1,
    }
    for kind in BREACH_KINDS:
        if violated[kind] and kind not in report._active:
            report.breach_events.append((float(t), kind))
            report._active.add(kind)
        elif not violated[kind]:
            report._active.discard(kind)
