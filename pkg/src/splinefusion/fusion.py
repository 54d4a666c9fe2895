"""Field reconstruction from filtered spline coefficients, NRMS scoring and
the spline-count sensitivity sweep."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bspline import BasisSet, basis_matrix
from .errors import DataError
from .kalman import FilterTrajectory

__all__ = [
    "DisplacementField",
    "SweepReport",
    "reconstruct_displacement",
    "reconstruct_derived",
    "nrms_error",
    "spline_sweep",
]


@dataclass(frozen=True)
class DisplacementField:
    query_positions: np.ndarray
    times: np.ndarray
    values: np.ndarray
    kind: str = "u"

    def at(self, position: float, atol: float = 1e-9) -> np.ndarray:
        hit = np.flatnonzero(np.abs(self.query_positions - position) <= atol)
        if hit.size == 0:
            raise DataError(f"field was not evaluated at x={position}")
        return self.values[:, hit[0]]


@dataclass(frozen=True)
class SweepReport:
    m_values: np.ndarray
    mean_nrms: np.ndarray
    max_nrms: np.ndarray

    @property
    def best_m(self) -> int:
        return int(self.m_values[np.argmin(self.mean_nrms)])

    def rows(self):
        return list(zip(self.m_values.tolist(), self.mean_nrms.tolist(),
                        self.max_nrms.tolist()))


def _coefficients(traj):
    return traj.lambda_history if isinstance(traj, FilterTrajectory) else np.asarray(traj)


def _times(traj, n):
    return traj.times if isinstance(traj, FilterTrajectory) else np.arange(n, dtype=float)


def reconstruct_displacement(traj, basis: BasisSet, query_positions) -> DisplacementField:
    """u(x, t) = sum_i phi_i(x) lambda_i(t) at arbitrary query positions.

    ``traj`` is a FilterTrajectory or a bare (T, m) coefficient history.
    """
    lam = _coefficients(traj)
    xs = np.atleast_1d(np.asarray(query_positions, dtype=float))
    values = lam @ basis_matrix(basis, xs, 0).T
    return DisplacementField(xs, _times(traj, lam.shape[0]), values, "u")


def reconstruct_derived(traj, basis: BasisSet, query_positions, kind: str = "slope",
                        depths=None) -> DisplacementField:
    """Slope (phi' lambda) or surface strain (-z phi'' lambda) at query positions."""
    lam = _coefficients(traj)
    xs = np.atleast_1d(np.asarray(query_positions, dtype=float))
    if kind == "slope":
        values = lam @ basis_matrix(basis, xs, 1).T
    elif kind == "strain":
        if depths is None:
            raise DataError("strain reconstruction needs neutral-axis depths")
        z = np.broadcast_to(np.asarray(depths, dtype=float), xs.shape)
        values = -(lam @ basis_matrix(basis, xs, 2).T) * z
    else:
        raise DataError(f"unknown derived quantity {kind!r} (slope or strain)")
    return DisplacementField(xs, _times(traj, lam.shape[0]), values, kind)


def nrms_error(estimated, reference) -> float:
    """100 * RMS(estimated - reference) / RMS(reference)."""
    est = np.asarray(estimated, dtype=float)
    ref = np.asarray(reference, dtype=float)
    if est.shape != ref.shape:
        raise DataError(f"signal shapes differ: {est.shape} vs {ref.shape}")
    ref_rms = np.sqrt(np.mean(ref**2))
    if not ref_rms > 0:
        raise DataError("reference signal has zero RMS; NRMS undefined")
    return float(100.0 * np.sqrt(np.mean((est - ref) ** 2)) / ref_rms)


def nrms_profile(field: DisplacementField, truth, start_time: float = 0.0) -> np.ndarray:
    """Per-position NRMS of a reconstructed field against a truth series."""
    truth_values = getattr(truth, "values", truth)
    truth_values = np.asarray(truth_values, dtype=float)
    if truth_values.shape != field.values.shape:
        raise DataError(
            f"truth shape {truth_values.shape} does not match field {field.values.shape}"
        )
    keep = field.times >= start_time
    return np.array([
        nrms_error(field.values[keep, j], truth_values[keep, j])
        for j in range(field.query_positions.size)
    ])


def check_sweep_candidates(m_candidates, p: int, q: int, degree: int = 3):
    ms = [int(m) for m in m_candidates]
    if not ms:
        raise DataError("no spline counts given")
    if len(set(ms)) != len(ms):
        raise DataError(f"duplicate spline counts in {ms}")
    for m in ms:
        if m > min(p, q):
            raise DataError(
                f"infeasible m={m}: must not exceed min(p, q)={min(p, q)}"
            )
        if m < degree + 1:
            raise DataError(
                f"infeasible m={m}: full-support degree-{degree} basis needs m >= {degree + 1}"
            )
    return ms


def spline_sweep(config, m_candidates, dataset=None) -> SweepReport:
    """Re-run the full fusion pipeline for each spline count on one dataset.

    The knot grid is rebuilt from each m (k = m + degree + 1 equally spaced
    knots). ``dataset`` defaults to a fresh simulation of ``config``; the
    same noisy records are reused for every m. Mean and max NRMS are taken
    over the truth positions where the reference is not identically zero.
    """
    from .pipeline import evaluate, fuse, simulate

    ms = check_sweep_candidates(m_candidates, len(config.sensors.accel_positions),
                                len(config.sensors.strain_positions),
                                config.basis.degree)
    if dataset is None:
        dataset = simulate(config)
    query = dataset.truth.positions
    mean, worst = [], []
    for m in ms:
        result = fuse(config, dataset.accel, dataset.strain, m=m, query_positions=query)
        # the clamped support has identically zero truth and is skipped
        _, errs = evaluate(result.field, dataset.truth)
        mean.append(np.nanmean(errs))
        worst.append(np.nanmax(errs))
    return SweepReport(np.array(ms), np.array(mean), np.array(worst))
