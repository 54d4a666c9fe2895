"""State-space model whose state is the spline coefficient vector and its rate.

Acceleration drives the state as a known input (projected onto the basis by a
pseudo-inverse); surface strain and boundary conditions are the measurements.
Since the continuous transition matrix is nilpotent, the discrete model is
obtained in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bspline import BasisSet, basis_matrix
from .errors import DataError, NumericalError, RankDeficiencyError

__all__ = [
    "SensorLayout",
    "NoiseSpec",
    "DiscreteModel",
    "pseudo_inverse",
    "measurement_rows",
    "assemble_continuous",
    "discretize",
    "process_noise",
    "measurement_noise",
    "build_discrete_model",
]

MAX_MEASUREMENT_COND = 1e12


def _vec(values, name):
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1:
        raise DataError(f"{name} must be a 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True)
class SensorLayout:
    """Sensor and boundary-condition positions (metres).

    Boundary rows prescribe displacement at ``bc_displacement`` and slope at
    ``bc_slope``; the prescribed values default to zero (fixed support).
    """

    accel_positions: np.ndarray
    strain_positions: np.ndarray
    strain_depths: np.ndarray
    bc_displacement: np.ndarray = field(default_factory=lambda: np.array([0.0]))
    bc_slope: np.ndarray = field(default_factory=lambda: np.array([0.0]))
    bc_displacement_values: np.ndarray | None = None
    bc_slope_values: np.ndarray | None = None

    def __post_init__(self):
        conv = {
            "accel_positions": self.accel_positions,
            "strain_positions": self.strain_positions,
            "strain_depths": self.strain_depths,
            "bc_displacement": self.bc_displacement,
            "bc_slope": self.bc_slope,
        }
        for name, value in conv.items():
            object.__setattr__(self, name, _vec(value, name))
        if self.strain_depths.size != self.strain_positions.size:
            raise DataError(
                f"{self.strain_positions.size} strain positions but "
                f"{self.strain_depths.size} depths"
            )
        if np.any(self.strain_depths <= 0):
            raise DataError("strain_depths must be positive")
        for name, pos_name in (("bc_displacement_values", "bc_displacement"),
                               ("bc_slope_values", "bc_slope")):
            n = getattr(self, pos_name).size
            value = getattr(self, name)
            value = np.zeros(n) if value is None else _vec(value, name)
            if value.size != n:
                raise DataError(f"{name} needs {n} entries, got {value.size}")
            object.__setattr__(self, name, value)

    @property
    def p(self) -> int:
        return self.accel_positions.size

    @property
    def q(self) -> int:
        return self.strain_positions.size

    @property
    def alpha(self) -> int:
        return self.bc_displacement.size

    @property
    def beta(self) -> int:
        return self.bc_slope.size

    @property
    def bc_values(self) -> np.ndarray:
        return np.concatenate([self.bc_displacement_values, self.bc_slope_values])


@dataclass(frozen=True)
class NoiseSpec:
    """Per-channel noise standard deviations and the boundary-row variance floor."""

    q_acc: np.ndarray
    r_strain: np.ndarray
    # strain rows carry r^2/dt near 1e-12, so the floor must sit well below that
    bc_variance_floor: float = 1e-16

    def __post_init__(self):
        object.__setattr__(self, "q_acc", _vec(self.q_acc, "q_acc"))
        object.__setattr__(self, "r_strain", _vec(self.r_strain, "r_strain"))
        if np.any(self.q_acc < 0) or np.any(self.r_strain < 0):
            raise DataError("noise standard deviations must be non-negative")
        if not self.bc_variance_floor > 0:
            raise DataError("bc_variance_floor must be positive")


@dataclass(frozen=True)
class DiscreteModel:
    A_d: np.ndarray
    B_d: np.ndarray
    C_d: np.ndarray
    Q_d: np.ndarray
    R_d: np.ndarray
    dt: float
    m: int
    p: int
    q: int
    alpha: int
    beta: int

    @property
    def n_state(self) -> int:
        return 2 * self.m

    @property
    def n_meas(self) -> int:
        return self.q + self.alpha + self.beta


def pseudo_inverse(M, rel_tol: float = 1e-10) -> np.ndarray:
    """Moore-Penrose inverse via SVD, truncating sigma < rel_tol * sigma_max."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if not np.all(np.isfinite(M)):
        raise NumericalError("pseudo-inverse of a matrix with non-finite entries")
    try:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed: {exc}") from exc
    if s.size == 0 or s[0] == 0:
        return np.zeros(M.T.shape)
    keep = s > rel_tol * s[0]
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    return (Vt.T * s_inv) @ U.T


def _check_layout(basis: BasisSet, layout: SensorLayout):
    m = basis.m
    if layout.p < m or layout.q < m:
        raise DataError(
            f"under-determined layout: need p, q >= m={m}, "
            f"got p={layout.p}, q={layout.q}"
        )
    a, b = basis.domain
    for name in ("accel_positions", "strain_positions", "bc_displacement", "bc_slope"):
        pos = getattr(layout, name)
        if np.any((pos < a) | (pos > b)):
            raise DataError(f"{name} outside beam domain [{a}, {b}]")


def measurement_rows(basis: BasisSet, layout: SensorLayout) -> np.ndarray:
    """Left (coefficient) half of the measurement matrix: strain then BC rows."""
    strain_rows = -layout.strain_depths[:, None] * basis_matrix(
        basis, layout.strain_positions, 2)
    return np.vstack([
        strain_rows,
        basis_matrix(basis, layout.bc_displacement, 0),
        basis_matrix(basis, layout.bc_slope, 1),
    ])


def assemble_continuous(basis: BasisSet, layout: SensorLayout, rel_tol: float = 1e-10):
    """Continuous (A_c, B_c, C_c) for the coefficient double integrator."""
    _check_layout(basis, layout)
    m = basis.m
    I, Z = np.eye(m), np.zeros((m, m))
    A_c = np.block([[Z, I], [Z, Z]])
    phi_acc_pinv = pseudo_inverse(basis_matrix(basis, layout.accel_positions, 0), rel_tol)
    B_c = np.vstack([np.zeros_like(phi_acc_pinv), phi_acc_pinv])
    left = measurement_rows(basis, layout)
    cond = np.linalg.cond(left)
    if not np.isfinite(cond) or cond > MAX_MEASUREMENT_COND:
        raise RankDeficiencyError(
            f"strain + boundary rows do not determine all {m} coefficients "
            f"(condition number {cond:.3g})"
        )
    C_c = np.hstack([left, np.zeros_like(left)])
    return A_c, B_c, C_c


def discretize(A_c, B_c, dt: float):
    """Exact zero-order-hold discretization, valid because A_c @ A_c == 0."""
    if dt < 0 or not np.isfinite(dt):
        raise DataError(f"sampling interval must be non-negative, got {dt}")
    A_c = np.asarray(A_c, dtype=float)
    B_c = np.asarray(B_c, dtype=float)
    if not (np.all(np.isfinite(A_c)) and np.all(np.isfinite(B_c))):
        raise NumericalError("non-finite system matrices")
    A_d = np.eye(A_c.shape[0]) + A_c * dt
    B_d = B_c * dt + (A_c @ B_c) * (dt * dt / 2.0)
    return A_d, B_d


def process_noise(basis: BasisSet, layout: SensorLayout, noise: NoiseSpec, dt: float,
                  rel_tol: float = 1e-10) -> np.ndarray:
    """Integrated process covariance of acceleration noise pushed through the basis."""
    if noise.q_acc.size != layout.p:
        raise DataError(f"q_acc needs {layout.p} entries, got {noise.q_acc.size}")
    G = pseudo_inverse(basis_matrix(basis, layout.accel_positions, 0), rel_tol) * noise.q_acc
    Q_hat = G @ G.T
    return np.block([
        [dt**3 / 3.0 * Q_hat, dt**2 / 2.0 * Q_hat],
        [dt**2 / 2.0 * Q_hat, dt * Q_hat],
    ])


def measurement_noise(noise: NoiseSpec, dt: float, alpha: int, beta: int) -> np.ndarray:
    """Diagonal discrete measurement covariance; boundary rows get the floor."""
    if not dt > 0:
        raise DataError(f"sampling interval must be positive, got {dt}")
    diag = np.concatenate([
        noise.r_strain**2 / dt,
        np.full(alpha + beta, noise.bc_variance_floor),
    ])
    return np.diag(diag)


def build_discrete_model(basis: BasisSet, layout: SensorLayout, noise: NoiseSpec,
                         dt: float, rel_tol: float = 1e-10) -> DiscreteModel:
    if noise.r_strain.size != layout.q:
        raise DataError(f"r_strain needs {layout.q} entries, got {noise.r_strain.size}")
    A_c, B_c, C_c = assemble_continuous(basis, layout, rel_tol)
    A_d, B_d = discretize(A_c, B_c, dt)
    return DiscreteModel(
        A_d=A_d,
        B_d=B_d,
        C_d=C_c,
        Q_d=process_noise(basis, layout, noise, dt, rel_tol),
        R_d=measurement_noise(noise, dt, layout.alpha, layout.beta),
        dt=float(dt),
        m=basis.m,
        p=layout.p,
        q=layout.q,
        alpha=layout.alpha,
        beta=layout.beta,
    )
