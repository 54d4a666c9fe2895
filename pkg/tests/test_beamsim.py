import numpy as np
import pytest
from scipy.integrate import cumulative_trapezoid

from oracles import tip_deflection, uniform_cantilever_f1
from splinefusion.beamsim import (
    BeamGeometry,
    SimulationResult,
    add_noise,
    build_fe_model,
    chirp_load,
    hermite_matrix,
    natural_frequencies,
    newmark_integrate,
    rayleigh_damping,
    sample_strain,
    static_solve,
)
from splinefusion.errors import DataError
from splinefusion.timeseries import TimeSeriesMatrix

UNIFORM = BeamGeometry(h2=0.010)


class ZeroLoad:
    def nodal_forces(self, model, times):
        return np.zeros((len(times), model.n_dofs))


def tip_force(model, P=1.0):
    f = np.zeros(model.n_dofs)
    f[-2] = P
    return f


def energies(model, result):
    v, u = result.velocity, result.displacement
    kinetic = 0.5 * np.sum((v @ model.M) * v, axis=1)
    strain = 0.5 * np.sum((u @ model.K) * u, axis=1)
    return kinetic, strain


@pytest.fixture(scope="module")
def tapered():
    return rayleigh_damping(build_fe_model(BeamGeometry()), 3.0, 4.0)


def test_geometry_validation():
    with pytest.raises(DataError):
        BeamGeometry(h1=-0.01)
    with pytest.raises(DataError):
        BeamGeometry(n_elements=1)
    g = BeamGeometry()
    assert g.depth(0.0) == 0.010
    assert g.depth(g.length) == pytest.approx(0.001)


def test_matrices_symmetric_definite():
    model = build_fe_model(BeamGeometry(n_elements=20))
    np.testing.assert_array_equal(model.M, model.M.T)
    np.testing.assert_array_equal(model.K, model.K.T)
    M, _, K = model.reduced()
    assert np.linalg.eigvalsh(M).min() > 0
    assert np.linalg.eigvalsh(K).min() > 0


def test_uniform_tip_deflection():
    model = build_fe_model(UNIFORM)
    u = static_solve(model, tip_force(model, 0.1))
    ref = tip_deflection(0.1, UNIFORM.length, UNIFORM.youngs_modulus, UNIFORM.second_moment(0))
    assert abs(u[-2] / ref - 1) < 5e-3


def test_uniform_first_frequency():
    w, _ = natural_frequencies(build_fe_model(UNIFORM), 1)
    ref = uniform_cantilever_f1(UNIFORM.length, UNIFORM.youngs_modulus,
                                UNIFORM.second_moment(0), UNIFORM.density, UNIFORM.area(0))
    assert abs(w[0] / (2 * np.pi) / ref - 1) < 1e-2


def test_frequency_convergence():
    errs = []
    for ne in (10, 20, 40, 80):
        g = BeamGeometry(h2=0.010, n_elements=ne)
        w, _ = natural_frequencies(build_fe_model(g), 1)
        ref = uniform_cantilever_f1(g.length, g.youngs_modulus, g.second_moment(0),
                                    g.density, g.area(0))
        errs.append(abs(w[0] / (2 * np.pi) / ref - 1))
    assert all(a > b for a, b in zip(errs, errs[1:]))


def test_modes_mass_normalized():
    model = build_fe_model(BeamGeometry())
    w, shapes = natural_frequencies(model, 4)
    np.testing.assert_allclose(shapes.T @ model.M @ shapes, np.eye(4), atol=1e-12)
    np.testing.assert_allclose(shapes.T @ model.K @ shapes, np.diag(w**2), rtol=1e-9,
                               atol=1e-9 * w[-1] ** 2)
    assert np.all(np.diff(w) > 0)


def test_stiffness_linear_in_modulus():
    a = build_fe_model(UNIFORM)
    b = build_fe_model(BeamGeometry(h2=0.010, youngs_modulus=2 * UNIFORM.youngs_modulus))
    np.testing.assert_allclose(b.K, 2 * a.K, rtol=1e-15, atol=0)
    np.testing.assert_array_equal(b.M, a.M)


def test_rayleigh_modal_projection(tapered):
    w, shapes = natural_frequencies(tapered, 2)
    zeta = np.diag(shapes.T @ tapered.C @ shapes) / (2 * w)
    np.testing.assert_allclose(zeta, [0.03, 0.04], rtol=0, atol=1e-10)
    a0, a1 = tapered.rayleigh_coefficients
    assert a0 > 0 and a1 > 0
    np.testing.assert_allclose(tapered.C, a0 * tapered.M + a1 * tapered.K, rtol=1e-15)


def test_rayleigh_zero_damping():
    model = rayleigh_damping(build_fe_model(BeamGeometry(n_elements=10)), 0.0, 0.0)
    np.testing.assert_array_equal(model.C, 0.0)


def test_chirp_frequency_and_start():
    load = chirp_load(3.0, 15.0, 40.0)
    assert load.value(0.0) == 0.0
    assert load.instantaneous_frequency(20.0) == pytest.approx(9.0)
    assert load.instantaneous_frequency(40.0) == pytest.approx(15.0)
    # d(phase)/dt / 2 pi from the waveform itself
    t, h = 20.0, 1e-3
    phase = lambda s: 3.0 * s + 12.0 * s**2 / 80.0  # noqa: E731
    assert (phase(t + h) - phase(t - h)) / (2 * h) == pytest.approx(9.0, rel=1e-9)
    np.testing.assert_allclose(load.value(t), 0.1 * np.sin(2 * np.pi * phase(t)), rtol=1e-12)


def test_chirp_rejects_bad_band():
    with pytest.raises(DataError):
        chirp_load(15.0, 3.0, 40.0)


def test_chirp_load_pattern_on_node(tapered):
    pattern = chirp_load(3, 15, 40, position=1.65).pattern(tapered)
    expected = np.zeros(tapered.n_dofs)
    expected[-2] = 1.0
    np.testing.assert_allclose(pattern, expected, atol=1e-15)


def test_zero_load_zero_response(tapered):
    r = newmark_integrate(tapered, ZeroLoad(), 5e-3, 1.0)
    assert np.all(r.displacement == 0) and np.all(r.acceleration == 0)


def test_sdof_tip_mass_free_vibration():
    g = BeamGeometry(h2=0.010, n_elements=2)
    beam_mass = g.density * g.area(0) * g.length
    model = build_fe_model(g, {2: 100 * beam_mass})
    w, shapes = natural_frequencies(model, 1)
    k = 3 * g.youngs_modulus * g.second_moment(0) / g.length**3
    # massive tip: lumped SDOF with the beam's 33/140 effective mass
    assert w[0] == pytest.approx(np.sqrt(k / (100 * beam_mass + 33 / 140 * beam_mass)), rel=5e-3)

    period = 2 * np.pi / w[0]
    dt = period / 50
    u0 = shapes[:, 0] * (0.01 / shapes[-2, 0])
    r = newmark_integrate(model, ZeroLoad(), dt, 10 * period, u0=u0)
    tip = r.displacement[:, -2]
    analytic = 0.01 * np.cos(w[0] * r.times)
    assert abs(np.abs(tip).max() / 0.01 - 1) < 5e-3
    assert abs(np.abs(tip[-50:]).max() / np.abs(analytic[-50:]).max() - 1) < 5e-3
    sign = np.sign(tip)
    idx = np.flatnonzero(sign[:-1] * sign[1:] < 0)
    crossings = r.times[idx] - tip[idx] * dt / (tip[idx + 1] - tip[idx])
    assert abs(2 * np.mean(np.diff(crossings)) / period - 1) < 5e-3


def test_constrained_dofs_stay_zero(tapered):
    r = newmark_integrate(tapered, chirp_load(3, 15, 2.0), 5e-3, 2.0)
    for arr in (r.displacement, r.velocity, r.acceleration):
        assert np.all(arr[:, :2] == 0.0)
    assert r.displacement.shape == (401, tapered.n_dofs)
    assert r.metadata["dt"] == 5e-3


def test_energy_audit_trapezoidal(tapered):
    load = chirp_load(3.0, 15.0, 10.0)
    r = newmark_integrate(tapered, load, 1e-3, 10.0)
    F = load.nodal_forces(tapered, r.times)
    power_in = np.einsum("ij,ij->i", F, r.velocity)
    power_d = np.sum((r.velocity @ tapered.C) * r.velocity, axis=1)
    kinetic, strain = energies(tapered, r)
    residual = (cumulative_trapezoid(power_in, r.times, initial=0)
                - cumulative_trapezoid(power_d, r.times, initial=0) - kinetic - strain)
    assert np.abs(residual).max() < 1e-3 * (kinetic + strain).max()


def test_energy_identity_of_average_acceleration(tapered):
    # work and dissipation written as sums over displacement increments
    load = chirp_load(3.0, 15.0, 10.0)
    r = newmark_integrate(tapered, load, 5e-3, 10.0)
    F = load.nodal_forces(tapered, r.times)
    du = np.diff(r.displacement, axis=0)
    work = np.cumsum(np.einsum("ij,ij->i", du, 0.5 * (F[1:] + F[:-1])))
    v_avg = 0.5 * (r.velocity[1:] + r.velocity[:-1])
    dissipated = np.cumsum(np.sum((du @ tapered.C) * v_avg, axis=1))
    kinetic, strain = energies(tapered, r)
    residual = work - dissipated - (kinetic + strain)[1:]
    assert np.abs(residual).max() < 1e-6 * (kinetic + strain).max()


def test_static_root_strain_uniform():
    model = build_fe_model(UNIFORM)
    P = 0.1
    u = static_solve(model, tip_force(model, P))
    snap = SimulationResult(np.zeros(1), u[None, :], u[None, :] * 0, u[None, :] * 0)
    z = UNIFORM.h1 / 2
    eps = sample_strain(snap, model, [0.0], [z])[0, 0]
    # hogging moment P (L - x) at the root
    ref = -P * UNIFORM.length * z / (UNIFORM.youngs_modulus * UNIFORM.second_moment(0))
    assert abs(eps / ref - 1) < 1e-2
    assert sample_strain(snap, model, [0.0], [0.0])[0, 0] == 0.0


def test_node_interpolation_identity(tapered):
    nodes = tapered.node_positions[[5, 40, 77, 110]]
    H = hermite_matrix(tapered, nodes)
    for row, node in zip(H, (5, 40, 77, 110)):
        expected = np.zeros(tapered.n_dofs)
        expected[2 * node] = 1.0
        np.testing.assert_allclose(row, expected, atol=1e-15)


def test_hermite_rejects_outside(tapered):
    with pytest.raises(DataError):
        hermite_matrix(tapered, [1.7])


def test_static_reciprocity(tapered):
    xs = [0.3, 0.6, 0.9, 1.2, 1.5]
    H = hermite_matrix(tapered, xs)
    flex = np.array([H @ static_solve(tapered, h) for h in H])
    assert np.abs(flex - flex.T).max() < 1e-9 * np.abs(flex).max()


def test_strain_matches_curvature_of_sampled_field(tapered):
    r = newmark_integrate(tapered, chirp_load(3, 15, 3.0), 5e-3, 3.0)
    k = 500
    nodes = tapered.node_positions
    mids = 0.5 * (nodes[10:100:9] + nodes[11:101:9])
    h = 1e-4
    u = lambda x: (r.displacement[k] @ hermite_matrix(tapered, x).T)  # noqa: E731
    curvature = (u(mids + h) - 2 * u(mids) + u(mids - h)) / h**2
    z = 0.5 * BeamGeometry().depth(mids)
    strain = sample_strain(r, tapered, mids, z)[k]
    np.testing.assert_allclose(strain, -z * curvature, rtol=2e-2)


def test_add_noise_statistics():
    t = np.arange(8000) * 5e-3
    sig = TimeSeriesMatrix(t, np.column_stack([np.sin(3 * t), 4 * np.cos(7 * t)]),
                           np.array([0.5, 1.0]), "acc")
    noisy = add_noise(sig, 5.0, [0, 0])
    ratio = (noisy.values - sig.values).std(axis=0) / sig.rms()
    assert np.all((ratio > 0.045) & (ratio < 0.055))
    again = add_noise(sig, 5.0, [0, 0])
    np.testing.assert_array_equal(noisy.values, again.values)
    assert add_noise(sig, 0.0, 1) is sig
    with pytest.raises(DataError):
        add_noise(sig, -1.0, 1)
