"""Euler-Bernoulli finite-element simulator for linearly tapered cantilevers.

Used as the ground-truth generator: it produces nodal displacement histories
under a chirp tip load and samples acceleration, surface strain and
displacement at arbitrary positions through the element shape functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .errors import DataError, NumericalError
from .timeseries import TimeSeriesMatrix

__all__ = [
    "BeamGeometry",
    "FEModel",
    "SimulationResult",
    "ChirpLoad",
    "build_fe_model",
    "natural_frequencies",
    "rayleigh_damping",
    "chirp_load",
    "static_solve",
    "newmark_integrate",
    "hermite_matrix",
    "sample_strain",
    "sample_sensors",
    "add_noise",
]


@dataclass(frozen=True)
class BeamGeometry:
    length: float = 1.65
    width: float = 0.02
    h1: float = 0.010
    h2: float = 0.001
    youngs_modulus: float = 2.1e11
    density: float = 7850.0
    n_elements: int = 110

    def __post_init__(self):
        for name in ("length", "width", "h1", "h2", "youngs_modulus", "density"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise DataError(f"geometry.{name} must be positive, got {value}")
        if int(self.n_elements) != self.n_elements or self.n_elements < 2:
            raise DataError(
                f"geometry.n_elements must be an integer >= 2, got {self.n_elements}"
            )

    def depth(self, x):
        x = np.asarray(x, dtype=float)
        return self.h1 + (self.h2 - self.h1) * x / self.length

    def area(self, x):
        return self.width * self.depth(x)

    def second_moment(self, x):
        return self.width * self.depth(x) ** 3 / 12.0


@dataclass(frozen=True)
class FEModel:
    """Assembled beam model. DOFs are ordered (u_0, theta_0, u_1, theta_1, ...)."""

    geometry: BeamGeometry
    node_positions: np.ndarray
    M: np.ndarray
    K: np.ndarray
    C: np.ndarray
    constrained_dofs: tuple = (0, 1)
    rayleigh_coefficients: tuple = (0.0, 0.0)

    @property
    def n_nodes(self) -> int:
        return self.node_positions.size

    @property
    def n_dofs(self) -> int:
        return 2 * self.n_nodes

    @property
    def free_dofs(self) -> np.ndarray:
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[list(self.constrained_dofs)] = False
        return np.flatnonzero(mask)

    def reduced(self):
        """(M, C, K) restricted to the free DOFs."""
        f = self.free_dofs
        ix = np.ix_(f, f)
        return self.M[ix], self.C[ix], self.K[ix]


@dataclass(frozen=True)
class SimulationResult:
    times: np.ndarray
    displacement: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


def _element_matrices(le, EI, rhoA):
    l2 = le * le
    k = (EI / le**3) * np.array(
        [
            [12.0, 6 * le, -12.0, 6 * le],
            [6 * le, 4 * l2, -6 * le, 2 * l2],
            [-12.0, -6 * le, 12.0, -6 * le],
            [6 * le, 2 * l2, -6 * le, 4 * l2],
        ]
    )
    m = (rhoA * le / 420.0) * np.array(
        [
            [156.0, 22 * le, 54.0, -13 * le],
            [22 * le, 4 * l2, 13 * le, -3 * l2],
            [54.0, 13 * le, 156.0, -22 * le],
            [-13 * le, -3 * l2, -22 * le, 4 * l2],
        ]
    )
    return k, m


def build_fe_model(geom: BeamGeometry, point_masses: dict | None = None) -> FEModel:
    """Assemble Hermite-cubic beam elements with midpoint section properties.

    ``point_masses`` maps node index to an added translational lumped mass.
    The fixed end (node 0) is constrained in displacement and slope.
    """
    ne = int(geom.n_elements)
    nodes = np.linspace(0.0, geom.length, ne + 1)
    ndof = 2 * (ne + 1)
    M = np.zeros((ndof, ndof))
    K = np.zeros((ndof, ndof))
    E = geom.youngs_modulus
    for e in range(ne):
        le = nodes[e + 1] - nodes[e]
        xm = 0.5 * (nodes[e] + nodes[e + 1])
        ke, me = _element_matrices(
            le, E * geom.second_moment(xm), geom.density * geom.area(xm)
        )
        sl = slice(2 * e, 2 * e + 4)
        K[sl, sl] += ke
        M[sl, sl] += me
    for node, mass in (point_masses or {}).items():
        M[2 * node, 2 * node] += mass
    return FEModel(geom, nodes, M, K, np.zeros_like(K))


def natural_frequencies(model: FEModel, n_modes: int | None = None):
    """Undamped circular frequencies (rad/s) and full-size mass-normalized modes.

    Solved in flexibility form, L^-1 M L^-T with K = L L^T, so the low modes
    are the dominant eigenvalues 1/w^2. The stiffness form K v = w^2 M v loses
    several digits on them because the FE spectrum spans about ten decades.
    """
    M, _, K = model.reduced()
    nf = M.shape[0]
    n = nf if n_modes is None else min(n_modes, nf)
    try:
        Lk = scipy.linalg.cholesky(K, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"stiffness matrix is not positive definite: {exc}") from exc
    X = scipy.linalg.solve_triangular(Lk, M, lower=True)
    F = scipy.linalg.solve_triangular(Lk, X.T, lower=True)
    mu, y = scipy.linalg.eigh(0.5 * (F + F.T), subset_by_index=[nf - n, nf - 1])
    order = np.argsort(mu)[::-1]
    mu, y = mu[order], y[:, order]
    vecs = scipy.linalg.solve_triangular(Lk.T, y, lower=False)
    vecs /= np.sqrt(np.einsum("ij,ik,kj->j", vecs, M, vecs))
    shapes = np.zeros((model.n_dofs, n))
    shapes[model.free_dofs] = vecs
    return 1.0 / np.sqrt(mu), shapes


def rayleigh_damping(model: FEModel, zeta1: float, zeta2: float) -> FEModel:
    """Fit C = a0*M + a1*K to damping ratios (in percent) on modes 1 and 2."""
    omegas, _ = natural_frequencies(model, 2)
    if omegas.size < 2:
        raise NumericalError("Rayleigh damping needs at least two elastic modes")
    w1, w2 = omegas
    if np.isclose(w1, w2, rtol=1e-12):
        raise NumericalError("repeated natural frequencies: Rayleigh fit is singular")
    A = 0.5 * np.array([[1.0 / w1, w1], [1.0 / w2, w2]])
    a0, a1 = np.linalg.solve(A, [zeta1 / 100.0, zeta2 / 100.0])
    return replace(model, C=a0 * model.M + a1 * model.K, rayleigh_coefficients=(a0, a1))


def hermite_matrix(model: FEModel, positions, deriv: int = 0) -> np.ndarray:
    """Rows interpolate the nodal DOF vector (or its x-derivatives) at positions."""
    positions = np.atleast_1d(np.asarray(positions, dtype=float))
    L = model.geometry.length
    tol = 1e-12 * L
    if np.any((positions < -tol) | (positions > L + tol)):
        raise DataError(f"sensor positions must lie within [0, {L}]")
    positions = np.clip(positions, 0.0, L)
    nodes = model.node_positions
    ne = nodes.size - 1
    elem = np.clip(np.searchsorted(nodes, positions, side="right") - 1, 0, ne - 1)
    le = nodes[elem + 1] - nodes[elem]
    s = (positions - nodes[elem]) / le
    if deriv == 0:
        N = [1 - 3 * s**2 + 2 * s**3, le * (s - 2 * s**2 + s**3),
             3 * s**2 - 2 * s**3, le * (s**3 - s**2)]
    elif deriv == 1:
        N = [(6 * s**2 - 6 * s) / le, 1 - 4 * s + 3 * s**2,
             (6 * s - 6 * s**2) / le, 3 * s**2 - 2 * s]
    elif deriv == 2:
        N = [(12 * s - 6) / le**2, (6 * s - 4) / le,
             (6 - 12 * s) / le**2, (6 * s - 2) / le]
    else:
        raise DataError(f"unsupported derivative order {deriv}")
    H = np.zeros((positions.size, model.n_dofs))
    rows = np.arange(positions.size)
    for j in range(4):
        H[rows, 2 * elem + j] = N[j]
    return H


@dataclass(frozen=True)
class ChirpLoad:
    """Linear sine sweep applied as a point force.

    ``nodal_forces`` returns the consistent nodal load, which for a position
    on a node is simply the force on that node's displacement DOF.
    """

    f0: float
    f1: float
    duration: float
    amplitude: float
    position: float

    def value(self, t):
        t = np.asarray(t, dtype=float)
        phase = self.f0 * t + (self.f1 - self.f0) * t**2 / (2.0 * self.duration)
        return self.amplitude * np.sin(2 * np.pi * phase)

    def instantaneous_frequency(self, t):
        return self.f0 + (self.f1 - self.f0) * np.asarray(t, dtype=float) / self.duration

    def pattern(self, model: FEModel) -> np.ndarray:
        return hermite_matrix(model, [self.position])[0]

    def nodal_forces(self, model: FEModel, times) -> np.ndarray:
        return np.outer(self.value(times), self.pattern(model))

    def describe(self) -> str:
        return (f"chirp {self.f0}-{self.f1} Hz over {self.duration} s, "
                f"amplitude {self.amplitude} N at x={self.position} m")


def chirp_load(f0, f1, duration, amplitude=0.1, position=1.65) -> ChirpLoad:
    if not (f1 >= f0 > 0):
        raise DataError(f"chirp needs f1 >= f0 > 0, got f0={f0}, f1={f1}")
    if duration <= 0:
        raise DataError("chirp duration must be positive")
    return ChirpLoad(float(f0), float(f1), float(duration), float(amplitude), float(position))


def static_solve(model: FEModel, force: np.ndarray) -> np.ndarray:
    """Static nodal displacements under a full-size force vector."""
    f = model.free_dofs
    u = np.zeros(model.n_dofs)
    u[f] = scipy.linalg.solve(model.K[np.ix_(f, f)], force[f], assume_a="pos")
    return u


def newmark_integrate(model: FEModel, load, dt: float, duration: float,
                      u0=None, v0=None, beta: float = 0.25,
                      gamma: float = 0.5) -> SimulationResult:
    """Time-march M a + C v + K u = F(t) with the Newmark method.

    ``load`` is any object with ``nodal_forces(model, times) -> (T, n_dofs)``.
    Defaults are the average-acceleration parameters. Samples run from 0 to
    ``duration`` inclusive.
    """
    if not dt > 0:
        raise DataError(f"time step must be positive, got {dt}")
    n_steps = int(round(duration / dt))
    times = np.arange(n_steps + 1) * dt
    F = np.asarray(load.nodal_forces(model, times), dtype=float)

    free = model.free_dofs
    M, C, K = model.reduced()
    Ff = F[:, free]
    nf = free.size
    u = np.zeros((n_steps + 1, nf))
    v = np.zeros_like(u)
    a = np.zeros_like(u)
    if u0 is not None:
        u[0] = np.asarray(u0, dtype=float)[free]
    if v0 is not None:
        v[0] = np.asarray(v0, dtype=float)[free]

    try:
        a[0] = scipy.linalg.solve(M, Ff[0] - C @ v[0] - K @ u[0], assume_a="pos")
        c0 = 1.0 / (beta * dt**2)
        c1 = gamma / (beta * dt)
        c2 = 1.0 / (beta * dt)
        c3 = 1.0 / (2 * beta) - 1.0
        c4 = gamma / beta - 1.0
        c5 = dt * (gamma / (2 * beta) - 1.0)
        K_eff = K + c0 * M + c1 * C
        factor = scipy.linalg.cho_factor(K_eff)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"Newmark factorization failed: {exc}") from exc

    for n in range(n_steps):
        rhs = (Ff[n + 1]
               + M @ (c0 * u[n] + c2 * v[n] + c3 * a[n])
               + C @ (c1 * u[n] + c4 * v[n] + c5 * a[n]))
        u[n + 1] = scipy.linalg.cho_solve(factor, rhs)
        a[n + 1] = c0 * (u[n + 1] - u[n]) - c2 * v[n] - c3 * a[n]
        v[n + 1] = v[n] + dt * ((1 - gamma) * a[n] + gamma * a[n + 1])

    def full(x):
        out = np.zeros((n_steps + 1, model.n_dofs))
        out[:, free] = x
        return out

    describe = getattr(load, "describe", None)
    meta = {"dt": dt, "duration": duration, "beta": beta, "gamma": gamma,
            "load": describe() if describe else repr(load)}
    return SimulationResult(times, full(u), full(v), full(a), meta)


def sample_strain(result: SimulationResult, model: FEModel, positions, depths) -> np.ndarray:
    """Surface strain -z * u'' at the given positions, shape (T, len(positions))."""
    H2 = hermite_matrix(model, positions, 2)
    depths = np.asarray(depths, dtype=float)
    return -(result.displacement @ H2.T) * depths


def sample_sensors(result: SimulationResult, model: FEModel, layout,
                   query_positions=None):
    """Interpolate (accel, strain, displacement truth) series for a sensor layout.

    ``layout`` needs ``accel_positions``, ``strain_positions`` and
    ``strain_depths``. Truth is sampled at ``query_positions`` (defaults to
    the FE nodes).
    """
    if query_positions is None:
        query_positions = model.node_positions
    acc_pos = np.asarray(layout.accel_positions, dtype=float)
    str_pos = np.asarray(layout.strain_positions, dtype=float)
    q_pos = np.asarray(query_positions, dtype=float)
    accel = result.acceleration @ hermite_matrix(model, acc_pos).T
    strain = sample_strain(result, model, str_pos, layout.strain_depths)
    truth = result.displacement @ hermite_matrix(model, q_pos).T
    t = result.times
    return (TimeSeriesMatrix(t, accel, acc_pos, "acc"),
            TimeSeriesMatrix(t, strain, str_pos, "strain"),
            TimeSeriesMatrix(t, truth, q_pos, "u"))


def add_noise(signal: TimeSeriesMatrix, percent: float, seed) -> TimeSeriesMatrix:
    """Add white Gaussian noise with std = percent% of each channel's RMS."""
    if percent < 0:
        raise DataError(f"noise percent must be non-negative, got {percent}")
    if percent == 0:
        return signal
    rng = np.random.default_rng(seed)
    sigma = percent / 100.0 * signal.rms()
    noise = rng.standard_normal(signal.values.shape) * sigma
    return signal.with_values(signal.values + noise)
