"""End-to-end scenario pipeline: simulate -> add noise -> fuse -> score."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import beamsim
from .bspline import BasisSet, basis_for_count
from .config import ScenarioConfig
from .errors import DataError
from .fusion import DisplacementField, nrms_profile, reconstruct_displacement
from .kalman import FilterTrajectory, init_state, run_filter
from .statespace import DiscreteModel, NoiseSpec, SensorLayout, build_discrete_model
from .timeseries import TimeSeriesMatrix

ACCEL_STREAM, STRAIN_STREAM = 0, 1


@dataclass(frozen=True)
class CleanSimulation:
    model: beamsim.FEModel
    result: beamsim.SimulationResult
    accel: TimeSeriesMatrix
    strain: TimeSeriesMatrix
    truth: TimeSeriesMatrix


@dataclass(frozen=True)
class Dataset:
    accel: TimeSeriesMatrix
    strain: TimeSeriesMatrix
    truth: TimeSeriesMatrix
    clean: CleanSimulation


@dataclass(frozen=True)
class FusionResult:
    basis: BasisSet
    layout: SensorLayout
    model: DiscreteModel
    trajectory: FilterTrajectory
    field: DisplacementField


def geometry(config: ScenarioConfig) -> beamsim.BeamGeometry:
    g = config.geometry
    return beamsim.BeamGeometry(g.length, g.width, g.h1, g.h2, g.youngs_modulus,
                                g.density, int(g.n_elements))


def sensor_layout(config: ScenarioConfig) -> SensorLayout:
    s = config.sensors
    return SensorLayout(
        accel_positions=s.accel_positions,
        strain_positions=s.strain_positions,
        strain_depths=config.strain_depths(),
        bc_displacement=s.bc_displacement,
        bc_slope=s.bc_slope,
        bc_displacement_values=s.bc_displacement_values,
        bc_slope_values=s.bc_slope_values,
    )


def make_basis(config: ScenarioConfig, m: int | None = None) -> BasisSet:
    m = config.basis.count if m is None else int(m)
    return basis_for_count([0.0, config.geometry.length], m, int(config.basis.degree))


def simulate_clean(config: ScenarioConfig) -> CleanSimulation:
    model = beamsim.rayleigh_damping(
        beamsim.build_fe_model(geometry(config)),
        config.damping.zeta1, config.damping.zeta2,
    )
    e = config.excitation
    load = beamsim.chirp_load(e.f0, e.f1, e.duration, e.amplitude, e.position)
    result = beamsim.newmark_integrate(model, load, config.sampling.dt, e.duration)
    accel, strain, truth = beamsim.sample_sensors(
        result, model, sensor_layout(config), config.query_positions())
    return CleanSimulation(model, result, accel, strain, truth)


def simulate(config: ScenarioConfig, clean: CleanSimulation | None = None) -> Dataset:
    """Clean simulation plus seeded sensor noise.

    Passing ``clean`` reuses an earlier simulation of the same structure and
    layout, e.g. to evaluate several noise levels.
    """
    if clean is None:
        clean = simulate_clean(config)
    s = config.sampling
    accel = beamsim.add_noise(clean.accel, s.noise_accel_percent, [s.seed, ACCEL_STREAM])
    strain = beamsim.add_noise(clean.strain, s.noise_strain_percent, [s.seed, STRAIN_STREAM])
    return Dataset(accel, strain, clean.truth, clean)


def noise_spec(config: ScenarioConfig, accel: TimeSeriesMatrix,
               strain: TimeSeriesMatrix) -> NoiseSpec:
    """Filter noise levels: explicit values, or fractions of the record RMS.

    Acceleration std scales with each channel's own RMS; the strain std is one
    value for all gauges (a fraction of the mean gauge RMS), because gauges
    near the free end read almost nothing and would otherwise be trusted
    without bound.
    """
    f = config.filter
    if f.q_acc is not None:
        q_acc = np.asarray(f.q_acc, dtype=float)
    else:
        q_acc = f.q_acc_fraction * accel.rms()
    if f.r_strain is not None:
        r_strain = np.asarray(f.r_strain, dtype=float)
    else:
        r_strain = np.full(strain.n_channels, f.r_strain_fraction * strain.rms().mean())
    return NoiseSpec(q_acc, r_strain, f.bc_variance_floor)


def check_channels(config: ScenarioConfig, accel: TimeSeriesMatrix,
                   strain: TimeSeriesMatrix, atol: float = 1e-9) -> None:
    for series, expected, name in (
        (accel, config.sensors.accel_positions, "acceleration"),
        (strain, config.sensors.strain_positions, "strain"),
    ):
        expected = np.asarray(expected, dtype=float)
        if series.positions.shape != expected.shape or not np.allclose(
                series.positions, expected, rtol=0, atol=atol):
            raise DataError(
                f"{name} channel positions {series.positions.tolist()} do not match "
                f"the configured sensors {expected.tolist()}"
            )
    if accel.n_samples != strain.n_samples:
        raise DataError(
            f"acceleration has {accel.n_samples} samples, strain {strain.n_samples}"
        )
    if accel.n_samples > 1:
        for series, name in ((accel, "acceleration"), (strain, "strain")):
            if abs(series.dt - config.sampling.dt) > 1e-9 * config.sampling.dt:
                raise DataError(
                    f"{name} file dt {series.dt!r} differs from configured {config.sampling.dt!r}"
                )


def fuse(config: ScenarioConfig, accel: TimeSeriesMatrix, strain: TimeSeriesMatrix,
         m: int | None = None, query_positions=None) -> FusionResult:
    check_channels(config, accel, strain)
    basis = make_basis(config, m)
    layout = sensor_layout(config)
    model = build_discrete_model(basis, layout, noise_spec(config, accel, strain),
                                 config.sampling.dt)
    init = init_state(basis.m, config.filter.theta0_scale)
    traj = run_filter(model, accel, strain, layout.bc_values, init)
    if query_positions is None:
        query_positions = config.query_positions()
    field = reconstruct_displacement(traj, basis, query_positions)
    return FusionResult(basis, layout, model, traj, field)


def evaluate(field, truth: TimeSeriesMatrix, start_time: float = 0.0):
    """Per-position NRMS (%) of a field against truth; NaN where truth is zero.

    Returns (positions, nrms) after checking that time and position grids agree.
    """
    times = field.times
    if times.shape != truth.times.shape or not np.allclose(times, truth.times, rtol=0,
                                                         atol=1e-9 * max(truth.dt, 1e-12)):
        raise DataError("estimated and truth time grids differ")
    pos = getattr(field, "query_positions", None)
    if pos is None:
        pos = field.positions
    if pos.shape != truth.positions.shape or not np.allclose(pos, truth.positions,
                                                             rtol=0, atol=1e-9):
        raise DataError("estimated and truth position grids differ")
    keep = times >= start_time
    ref_rms = np.sqrt(np.mean(truth.values[keep] ** 2, axis=0))
    defined = ref_rms > 0
    out = np.full(pos.size, np.nan)
    if np.any(defined):
        sub = DisplacementField(pos[defined], times, field.values[:, defined])
        out[defined] = nrms_profile(sub, truth.values[:, defined], start_time)
    return pos, out


NOISE_GRID = ((5.0, 5.0), (10.0, 10.0), (5.0, 10.0), (10.0, 5.0))


def noise_grid(config: ScenarioConfig, cases=NOISE_GRID, clean=None):
    """Mean NRMS (%) for each (accel %, strain %) noise case on one structure."""
    if clean is None:
        clean = simulate_clean(config)
    out = {}
    for na, ns in cases:
        cfg = config.replace(**{"sampling.noise_accel_percent": na,
                                "sampling.noise_strain_percent": ns})
        data = simulate(cfg, clean)
        result = fuse(cfg, data.accel, data.strain)
        _, errs = evaluate(result.field, data.truth)
        out[(na, ns)] = errs
    return out
