"""Plant, reference model, reference signals, constraint sets and ideal gains."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .exceptions import ConfigError, DimensionMismatch, MatchingInfeasible, SingularSystem

MATCHING_TOL = 1e-8


@dataclass(frozen=True)
class PlantModel:
    """x' = A x + B u. A is known to the simulator only, never to controllers."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = linalg.as_matrix(self.A, name="plant.A")
        n = A.shape[0]
        B = linalg.as_matrix(self.B, rows=n, name="plant.B")
        if A.shape[1] != n:
            raise DimensionMismatch(f"plant.A must be square, got {A.shape}")
        if linalg.matrix_rank(B) < B.shape[1]:
            raise ConfigError("plant.B must have full column rank")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class ReferenceSignal:
    """Bounded reference input r(t).

    kinds:
      ``exp_decay``  r_i = amplitude_i * exp(-t / tau_i)
      ``constant``   r_i = amplitude_i
      ``sinusoid``   r_i = amplitude_i * sin(omega_i t + phase_i)
      ``zero``       r = 0 (needs ``m``)
    """

    kind: str
    amplitudes: tuple[float, ...] = ()
    time_constants: tuple[float, ...] = ()
    frequencies: tuple[float, ...] = ()
    phases: tuple[float, ...] = ()
    m: int = 0

    KINDS = ("exp_decay", "constant", "sinusoid", "zero")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError(f"signal.kind must be one of {self.KINDS}, got {self.kind!r}")
        for name in ("amplitudes", "time_constants", "frequencies", "phases"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not all(math.isfinite(v) for v in vals):
                raise ConfigError(f"signal.{name} must be finite")
            object.__setattr__(self, name, vals)
        if self.kind == "zero":
            if self.m < 1:
                raise ConfigError("signal.m must be >= 1 for the zero signal")
            return
        object.__setattr__(self, "m", len(self.amplitudes))
        if self.m < 1:
            raise ConfigError("signal.amplitudes must be non-empty")
        if self.kind == "exp_decay":
            if len(self.time_constants) != self.m or any(tau <= 0 for tau in self.time_constants):
                raise ConfigError("signal.time_constants must be positive, one per channel")
        if self.kind == "sinusoid":
            if len(self.frequencies) != self.m:
                raise ConfigError("signal.frequencies needs one entry per channel")
            if not self.phases:
                object.__setattr__(self, "phases", (0.0,) * self.m)
            elif len(self.phases) != self.m:
                raise ConfigError("signal.phases needs one entry per channel")

    def __call__(self, t: float) -> np.ndarray:
        return eval_reference_signal(self, t)

    @classmethod
    def paper(cls) -> "ReferenceSignal":
        return cls("exp_decay", amplitudes=(1.0, 1.0), time_constants=(10.0, 20.0))


def eval_reference_signal(sig: ReferenceSignal, t: float) -> np.ndarray:
    if sig.kind == "exp_decay":
        return np.array([a * math.exp(-t / tau) for a, tau in zip(sig.amplitudes, sig.time_constants)])
    if sig.kind == "constant":
        return np.array(sig.amplitudes)
    if sig.kind == "sinusoid":
        return np.array([a * math.sin(w * t + ph) for a, w, ph in zip(sig.amplitudes, sig.frequencies, sig.phases)])
    return np.zeros(sig.m)


@dataclass(frozen=True)
class ReferenceModel:
    """x_r' = A_r x_r + B_r r(t), with A_r Hurwitz."""

    A_r: np.ndarray
    B_r: np.ndarray
    signal: ReferenceSignal

    def __post_init__(self):
        A_r = linalg.as_matrix(self.A_r, name="reference.A_r")
        n = A_r.shape[0]
        if A_r.shape[1] != n:
            raise DimensionMismatch(f"reference.A_r must be square, got {A_r.shape}")
        B_r = linalg.as_matrix(self.B_r, rows=n, name="reference.B_r")
        if B_r.shape[1] != self.signal.m:
            raise DimensionMismatch(f"reference.B_r has {B_r.shape[1]} columns but the signal has {self.signal.m} channels")
        # Hurwitz certificate: the Lyapunov equation with Q = I must be solvable with P > 0.
        try:
            P = linalg.solve_lyapunov(A_r, np.eye(n))
        except SingularSystem as exc:
            raise ConfigError(f"reference.A_r is not Hurwitz: {exc}") from None
        if linalg.min_eig_sym(P) <= 0:
            raise ConfigError("reference.A_r is not Hurwitz: Lyapunov solution is not positive definite")
        object.__setattr__(self, "A_r", A_r)
        object.__setattr__(self, "B_r", B_r)

    @property
    def n(self) -> int:
        return self.A_r.shape[0]


@dataclass(frozen=True)
class ConstraintSpec:
    """Safe sets |x| <= beta, |u| <= u_max and the derived error bound k_b = beta - alpha1.

    alpha2 bounds |x_r'| and is carried for completeness; nothing consumes it.
    """

    beta: float
    alpha1: float
    u_max: float
    alpha2: float = math.inf
    k_b: float = field(init=False)

    def __post_init__(self):
        if not 0 < self.alpha1 < self.beta:
            raise ConfigError(f"constraints: need 0 < alpha1 < beta, got alpha1={self.alpha1}, beta={self.beta}")
        if not self.u_max > 0:
            raise ConfigError(f"constraints.u_max must be positive, got {self.u_max}")
        if not self.alpha2 > 0:
            raise ConfigError(f"constraints.alpha2 must be positive, got {self.alpha2}")
        object.__setattr__(self, "k_b", self.beta - self.alpha1)


@dataclass(frozen=True)
class TrueGains:
    K_x: np.ndarray
    K_r: np.ndarray
    residual_x: float = 0.0
    residual_r: float = 0.0


def plant_derivative(plant: PlantModel, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    if x.shape != (plant.n,) or u.shape != (plant.m,):
        raise DimensionMismatch(f"plant_derivative: x {x.shape}, u {u.shape} vs n={plant.n}, m={plant.m}")
    return plant.A @ x + plant.B @ u


def reference_derivative(ref: ReferenceModel, x_r: np.ndarray, t: float) -> np.ndarray:
    if x_r.shape != (ref.n,):
        raise DimensionMismatch(f"reference_derivative: x_r {x_r.shape} vs n={ref.n}")
    return ref.A_r @ x_r + ref.B_r @ ref.signal(t)


def _least_squares(B: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    # normal equations (B'B) K = B' rhs; B has full column rank
    BtB = B.T @ B
    Btr = B.T @ rhs
    return np.column_stack([linalg.solve_linear(BtB, Btr[:, j]) for j in range(rhs.shape[1])])


def solve_matching_gains(plant: PlantModel, ref: ReferenceModel, tol: float = MATCHING_TOL) -> TrueGains:
    """Ideal gains with A + B Kx = A_r and B Kr = B_r (oracle: reads plant.A)."""
    if plant.n != ref.n or plant.m != ref.B_r.shape[1]:
        raise DimensionMismatch("plant and reference model dimensions differ")
    K_x = _least_squares(plant.B, ref.A_r - plant.A)
    K_r = _least_squares(plant.B, ref.B_r)
    res_x = linalg.frobenius_norm(plant.A + plant.B @ K_x - ref.A_r)
    res_r = linalg.frobenius_norm(plant.B @ K_r - ref.B_r)
    if res_x > tol or res_r > tol:
        raise MatchingInfeasible(res_x, res_r)
    return TrueGains(K_x, K_r, res_x, res_r)
