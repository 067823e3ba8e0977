"""Classical MRAC and the saturated, barrier-Lyapunov constrained MRAC.

Controllers see only the input matrix B, reference-model data, the
Lyapunov matrix P and measurements. The plant matrix A never enters here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import linalg
from .exceptions import BarrierBreach, ConfigError, DimensionMismatch


def check_gain(G: np.ndarray, size: int, name: str) -> np.ndarray:
    G = linalg.as_matrix(G, size, size, name=name)
    linalg.check_symmetric(G, name=name)
    if linalg.min_eig_sym(G) <= 0:
        raise ConfigError(f"{name} must be positive definite")
    return G


@dataclass
class ClassicalState:
    Kx_hat: np.ndarray
    Kr_hat: np.ndarray
    Gamma_x: np.ndarray
    Gamma_r: np.ndarray

    @classmethod
    def initial(cls, n: int, m: int, Gamma_x, Gamma_r) -> "ClassicalState":
        """Zero estimates; adaptation gains are checked for positive definiteness."""
        return cls(np.zeros((m, n)), np.zeros((m, m)), check_gain(Gamma_x, m, "Gamma_x"), check_gain(Gamma_r, m, "Gamma_r"))


@dataclass
class ConstrainedState:
    Kx_hat: np.ndarray
    Kr_hat: np.ndarray
    K1: np.ndarray
    Kd: np.ndarray
    e1: np.ndarray
    Gamma_x: np.ndarray
    Gamma_r: np.ndarray
    Gamma_d: np.ndarray
    Gamma_1: np.ndarray

    @classmethod
    def initial(cls, B: np.ndarray, Gamma_x, Gamma_r, Gamma_d, Gamma_1, K1_init: str = "B") -> "ConstrainedState":
        """Zero gain estimates, e1(0) = 0 and K1(0) = B (so Kd(0) = 0) or K1(0) = 0 (so Kd(0) = B)."""
        n, m = B.shape
        if K1_init == "B":
            K1, Kd = B.copy(), np.zeros((n, m))
        elif K1_init == "zero":
            K1, Kd = np.zeros((n, m)), B.copy()
        else:
            raise ConfigError(f"init.K1 must be 'B' or 'zero', got {K1_init!r}")
        return cls(
            np.zeros((m, n)), np.zeros((m, m)), K1, Kd, np.zeros(n),
            check_gain(Gamma_x, m, "Gamma_x"), check_gain(Gamma_r, m, "Gamma_r"),
            check_gain(Gamma_d, n, "Gamma_d"), check_gain(Gamma_1, n, "Gamma_1"),
        )


class ControlDecision(NamedTuple):
    u: np.ndarray
    v: np.ndarray
    delta_u: np.ndarray
    saturated: np.ndarray


class ClassicalDerivatives(NamedTuple):
    Kx_hat: np.ndarray
    Kr_hat: np.ndarray


class ConstrainedDerivatives(NamedTuple):
    Kx_hat: np.ndarray
    Kr_hat: np.ndarray
    Kd: np.ndarray
    K1: np.ndarray
    e1: np.ndarray


_outer = np.multiply.outer


def _feedback(Kx_hat: np.ndarray, Kr_hat: np.ndarray, x: np.ndarray, r: np.ndarray) -> np.ndarray:
    if x.shape != (Kx_hat.shape[1],) or r.shape != (Kr_hat.shape[1],):
        raise DimensionMismatch(f"control law: x {x.shape}, r {r.shape} vs gains {Kx_hat.shape}, {Kr_hat.shape}")
    return Kx_hat @ x + Kr_hat @ r


def classical_control(s: ClassicalState, x: np.ndarray, r: np.ndarray) -> np.ndarray:
    """u = Kx_hat x + Kr_hat r, unbounded."""
    return _feedback(s.Kx_hat, s.Kr_hat, x, r)


def auxiliary_control(s: ConstrainedState, x: np.ndarray, r: np.ndarray) -> np.ndarray:
    """v = Kx_hat x + Kr_hat r, the input before saturation."""
    return _feedback(s.Kx_hat, s.Kr_hat, x, r)


def classical_update(s: ClassicalState, e, x, r, B, P) -> ClassicalDerivatives:
    """Gradient laws -Gamma_x B'Pe x' and -Gamma_r B'Pe r'."""
    if e.shape != x.shape or P.shape != (e.shape[0], e.shape[0]) or B.shape != (e.shape[0], r.shape[0]):
        raise DimensionMismatch("classical_update: inconsistent dimensions")
    BtPe = B.T @ (P @ e)
    return ClassicalDerivatives(-_outer(s.Gamma_x @ BtPe, x), -_outer(s.Gamma_r @ BtPe, r))


def saturate(v: np.ndarray, u_max: float) -> ControlDecision:
    """Clip each channel to u_max / sqrt(m), which keeps |u| <= u_max."""
    if not u_max > 0:
        raise ValueError(f"u_max must be positive, got {u_max}")
    v = np.asarray(v, dtype=float)
    limit = u_max / math.sqrt(v.shape[0])
    saturated = np.abs(v) > limit
    u = np.clip(v, -limit, limit)
    return ControlDecision(u, v, u - v, saturated)


def compute_ed(e: np.ndarray, e1: np.ndarray) -> np.ndarray:
    if e.shape != e1.shape:
        raise DimensionMismatch(f"compute_ed: e {e.shape} vs e1 {e1.shape}")
    return e - e1


def constrained_update(
    s: ConstrainedState,
    e: np.ndarray,
    e_d: np.ndarray,
    x: np.ndarray,
    r: np.ndarray,
    delta_u: np.ndarray,
    B: np.ndarray,
    P: np.ndarray,
    kb_prime: float,
    A_r: np.ndarray,
    guard_epsilon: float = 0.0,
) -> ConstrainedDerivatives:
    """Barrier-weighted adaptive laws plus the auxiliary-error dynamics.

    With D = kb'^2 - e'Pe the gain estimates follow
    -Gamma (B'Pe/D + B'Pe_d) times the regressor, Kd and K1 absorb the
    saturation deficit, and e1' = A_r e1 + K1 delta_u.
    """
    n = e.shape[0]
    if e_d.shape != (n,) or x.shape != (n,) or P.shape != (n, n) or B.shape != (n, r.shape[0]):
        raise DimensionMismatch("constrained_update: inconsistent dimensions")
    kb2 = kb_prime * kb_prime
    Pe = P @ e
    D = kb2 - float(e @ Pe)
    if D <= guard_epsilon * kb2:
        raise BarrierBreach(1.0 - D / kb2)
    Pe_d = P @ e_d
    w = Pe / D + Pe_d  # common barrier + auxiliary weighting
    Btw = B.T @ w
    return ConstrainedDerivatives(
        Kx_hat=-_outer(s.Gamma_x @ Btw, x),
        Kr_hat=-_outer(s.Gamma_r @ Btw, r),
        Kd=-_outer(s.Gamma_d @ w, delta_u),
        K1=-_outer(s.Gamma_1 @ Pe, delta_u) / D,
        e1=A_r @ s.e1 + s.K1 @ delta_u,
    )
