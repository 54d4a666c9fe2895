"""Discrete Kalman recursion over spline coefficients.

Acceleration sample k drives the prediction from k to k+1; the strain sample
at k+1 (stacked with the prescribed boundary values) then corrects it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DataError, SingularInnovationError
from .statespace import DiscreteModel

__all__ = [
    "FilterState",
    "FilterTrajectory",
    "init_state",
    "time_update",
    "gain",
    "measurement_update",
    "run_filter",
]

MAX_INNOVATION_COND = 1e14


@dataclass(frozen=True)
class FilterState:
    Lambda: np.ndarray
    Theta: np.ndarray
    k: int = 0

    @property
    def m(self) -> int:
        return self.Lambda.size // 2

    @property
    def coefficients(self) -> np.ndarray:
        return self.Lambda[: self.m]

    @property
    def rates(self) -> np.ndarray:
        return self.Lambda[self.m:]


@dataclass(frozen=True)
class FilterTrajectory:
    times: np.ndarray
    lambda_history: np.ndarray
    lambda_dot_history: np.ndarray
    innovation_history: np.ndarray
    theta_trace_history: np.ndarray
    final_state: FilterState | None = None

    @property
    def n_samples(self) -> int:
        return self.lambda_history.shape[0]


def _symmetrize(P):
    return 0.5 * (P + P.T)


def init_state(m: int, theta0_scale: float = 1e-2) -> FilterState:
    """Structure at rest with isotropic initial uncertainty."""
    if not theta0_scale > 0:
        raise DataError(f"theta0_scale must be positive, got {theta0_scale}")
    return FilterState(np.zeros(2 * m), theta0_scale * np.eye(2 * m), 0)


def _check_dims(state: FilterState, model: DiscreteModel):
    if state.Lambda.size != model.n_state or state.Theta.shape != (model.n_state,) * 2:
        raise DataError(
            f"state of size {state.Lambda.size} does not match model with "
            f"{model.n_state} states"
        )


def time_update(state: FilterState, model: DiscreteModel, accel_sample) -> FilterState:
    _check_dims(state, model)
    u = np.asarray(accel_sample, dtype=float)
    if u.shape != (model.p,):
        raise DataError(f"expected {model.p} acceleration channels, got {u.shape}")
    if not np.all(np.isfinite(u)):
        raise DataError(f"non-finite acceleration sample at step {state.k}")
    A = model.A_d
    Lam = A @ state.Lambda + model.B_d @ u
    Theta = _symmetrize(A @ state.Theta @ A.T + model.Q_d)
    return FilterState(Lam, Theta, state.k + 1)


def _innovation_factor(state: FilterState, model: DiscreteModel):
    C = model.C_d
    S = _symmetrize(C @ state.Theta @ C.T + model.R_d)
    eig = np.linalg.eigvalsh(S)
    if eig[0] <= 0 or eig[-1] / eig[0] > MAX_INNOVATION_COND:
        raise SingularInnovationError(
            f"innovation covariance ill-conditioned at step {state.k} "
            f"(eigenvalues {eig[0]:.3g} .. {eig[-1]:.3g})"
        )
    return scipy.linalg.cho_factor(S, lower=True)


def gain(state: FilterState, model: DiscreteModel) -> np.ndarray:
    """Kalman gain Theta C^T S^-1 using a Cholesky solve of S."""
    _check_dims(state, model)
    factor = _innovation_factor(state, model)
    PCt = state.Theta @ model.C_d.T
    # S symmetric, so K^T = S^-1 (Theta C^T)^T
    return scipy.linalg.cho_solve(factor, PCt.T).T


def measurement_update(state: FilterState, model: DiscreteModel, K_g, measurement,
                       joseph: bool = True) -> FilterState:
    """Correct the state; covariance by the Joseph form unless ``joseph=False``."""
    _check_dims(state, model)
    gamma = np.asarray(measurement, dtype=float)
    if gamma.shape != (model.n_meas,):
        raise DataError(f"expected {model.n_meas} measurements, got {gamma.shape}")
    K_g = np.asarray(K_g, dtype=float)
    if K_g.shape != (model.n_state, model.n_meas):
        raise DataError(f"gain shape {K_g.shape} does not match model")
    C = model.C_d
    Lam = state.Lambda + K_g @ (gamma - C @ state.Lambda)
    IKC = np.eye(model.n_state) - K_g @ C
    if joseph:
        Theta = IKC @ state.Theta @ IKC.T + K_g @ model.R_d @ K_g.T
    else:
        Theta = IKC @ state.Theta
    return FilterState(Lam, _symmetrize(Theta), state.k)


def run_filter(model: DiscreteModel, accel, strain, bc_values, init: FilterState | None = None,
               theta0_scale: float = 1e-2) -> FilterTrajectory:
    """Single forward pass over synchronous acceleration and strain records.

    ``accel`` and ``strain`` are TimeSeriesMatrix values (or plain (T, p) and
    (T, q) arrays sampled at ``model.dt``). Row 0 of the trajectory is the
    initial state corrected by the first strain sample; every later row is a
    predict/correct step.
    """
    acc_values, times = _unpack(accel, model.dt)
    str_values, str_times = _unpack(strain, model.dt)
    T = acc_values.shape[0]
    if str_values.shape[0] != T:
        raise DataError(
            f"acceleration has {T} samples but strain has {str_values.shape[0]}"
        )
    if acc_values.shape[1] != model.p or str_values.shape[1] != model.q:
        raise DataError(
            f"expected {model.p} acceleration and {model.q} strain channels, got "
            f"{acc_values.shape[1]} and {str_values.shape[1]}"
        )
    if times is not None and str_times is not None:
        if not np.allclose(times, str_times, rtol=0, atol=1e-9 * model.dt):
            raise DataError("acceleration and strain time columns differ")
        if T > 1 and abs((times[-1] - times[0]) / (T - 1) - model.dt) > 1e-9 * model.dt:
            raise DataError("sampling interval of the records differs from the model dt")
    if times is None:
        times = str_times if str_times is not None else np.arange(T) * model.dt
    bc_values = np.atleast_1d(np.asarray(bc_values, dtype=float))
    if bc_values.size != model.alpha + model.beta:
        raise DataError(
            f"expected {model.alpha + model.beta} boundary values, got {bc_values.size}"
        )
    if not np.all(np.isfinite(str_values)):
        raise DataError("non-finite strain samples")

    m = model.m
    state = init if init is not None else init_state(m, theta0_scale)
    lam = np.empty((T, m))
    lam_dot = np.empty((T, m))
    innov = np.empty((T, model.n_meas))
    trace = np.empty(T)
    C = model.C_d
    for k in range(T):
        if k > 0:
            state = time_update(state, model, acc_values[k - 1])
        gamma = np.concatenate([str_values[k], bc_values])
        innov[k] = gamma - C @ state.Lambda
        state = measurement_update(state, model, gain(state, model), gamma)
        lam[k] = state.coefficients
        lam_dot[k] = state.rates
        trace[k] = np.trace(state.Theta)
    return FilterTrajectory(times, lam, lam_dot, innov, trace, state)


def _unpack(series, dt):
    values = getattr(series, "values", series)
    times = getattr(series, "times", None)
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise DataError("signal records must be 2-D (samples x channels)")
    return values, times
