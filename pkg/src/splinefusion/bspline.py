"""Closed-ended B-spline bases on a uniformly extended knot grid.

The knot grid spans the physical domain with equally spaced interior knots and
is padded with ``degree`` extra knots on each side at the same spacing, so that
every basis function touching the domain is a complete (full-support)
piecewise polynomial. Values and the first two derivatives come from the
Cox-de Boor triangle and its derivative recurrence, vectorized over points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError

__all__ = [
    "KnotVector",
    "BasisSet",
    "build_knot_vector",
    "build_basis",
    "basis_for_count",
    "eval_basis",
    "basis_matrix",
]

# points this close outside [a, b] (relative to its width) are snapped onto it
_DOMAIN_SLACK = 1e-12


@dataclass(frozen=True)
class KnotVector:
    knots: np.ndarray
    degree: int

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        if knots.ndim != 1:
            raise DataError("knots must be a 1-D sequence")
        if self.degree < 0:
            raise DataError(f"degree must be non-negative, got {self.degree}")
        if np.any(np.diff(knots) < 0):
            raise DataError("knots must be non-decreasing")
        if knots.size < 2 * (self.degree + 1):
            raise DataError(
                f"need at least {2 * (self.degree + 1)} knots for degree "
                f"{self.degree}, got {knots.size}"
            )
        knots.setflags(write=False)
        object.__setattr__(self, "knots", knots)

    @property
    def order(self) -> int:
        return self.degree + 1

    @property
    def domain(self) -> tuple[float, float]:
        k = self.knots.size
        return float(self.knots[self.degree]), float(self.knots[k - 1 - self.degree])


@dataclass(frozen=True)
class BasisSet:
    knot_vector: KnotVector

    @property
    def degree(self) -> int:
        return self.knot_vector.degree

    @property
    def order(self) -> int:
        return self.knot_vector.order

    @property
    def m(self) -> int:
        return self.knot_vector.knots.size - self.order

    @property
    def domain(self) -> tuple[float, float]:
        return self.knot_vector.domain

    def __call__(self, xs, deriv_order: int = 0) -> np.ndarray:
        return basis_matrix(self, xs, deriv_order)


def build_knot_vector(domain, n_internal: int, degree: int = 3) -> KnotVector:
    """Uniform knots over ``domain`` extended by ``degree`` knots per side.

    ``n_internal`` counts the knots inside the domain including both ends, so
    the spacing is ``(b - a) / (n_internal - 1)`` and the total knot count is
    ``n_internal + 2 * degree``.
    """
    a, b = (float(v) for v in domain)
    if not b > a:
        raise DataError(f"invalid domain [{a}, {b}]: need b > a")
    if n_internal < 2:
        raise DataError(f"need at least 2 internal knots, got {n_internal}")
    if degree < 0:
        raise DataError(f"degree must be non-negative, got {degree}")
    h = (b - a) / (n_internal - 1)
    idx = np.arange(-degree, n_internal + degree)
    knots = a + idx * h
    # pin the domain ends exactly; a + (n-1)*h can be off by an ulp
    knots[degree] = a
    knots[degree + n_internal - 1] = b
    return KnotVector(knots, degree)


def build_basis(domain, n_internal: int, degree: int = 3) -> BasisSet:
    return BasisSet(build_knot_vector(domain, n_internal, degree))


def basis_for_count(domain, m: int, degree: int = 3) -> BasisSet:
    """Basis with exactly ``m`` functions (``m + degree + 1`` knots in total)."""
    n_internal = m - degree + 1
    if n_internal < 2:
        raise DataError(
            f"cannot build {m} full-support splines of degree {degree} "
            f"(need m >= {degree + 1})"
        )
    return build_basis(domain, n_internal, degree)


def _locate(basis: BasisSet, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Snap points onto the domain and return (points, span indices)."""
    a, b = basis.domain
    slack = _DOMAIN_SLACK * (b - a)
    bad = (xs < a - slack) | (xs > b + slack) | ~np.isfinite(xs)
    if np.any(bad):
        raise DataError(
            f"position {xs[bad][0]!r} outside basis domain [{a}, {b}]"
        )
    xs = np.clip(xs, a, b)
    knots = basis.knot_vector.knots
    p = basis.degree
    last_span = knots.size - 2 - p
    # right-continuous: knots[s] <= x < knots[s+1]; x == b falls in the last span
    spans = np.searchsorted(knots, xs, side="right") - 1
    spans = np.clip(spans, p, last_span)
    return xs, spans


def _nonzero_ders(knots, p, xs, spans, n_ders):
    """Derivatives 0..n_ders of the p+1 nonzero basis functions per point.

    Returns an array of shape (n_ders + 1, p + 1, n_points); entry [d, j, :]
    belongs to basis function ``spans - p + j``.
    """
    npts = xs.size
    ndu = np.empty((p + 1, p + 1, npts))
    left = np.empty((p + 1, npts))
    right = np.empty((p + 1, npts))
    ndu[0, 0] = 1.0
    for j in range(1, p + 1):
        left[j] = xs - knots[spans + 1 - j]
        right[j] = knots[spans + j] - xs
        saved = np.zeros(npts)
        for r in range(j):
            # lower triangle keeps knot differences for the derivative pass
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved

    ders = np.zeros((n_ders + 1, p + 1, npts))
    ders[0] = ndu[:, p]
    a = np.empty((2, p + 1, npts))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, n_ders + 1):
            d = np.zeros(npts)
            rk, pk = r - k, p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d = d + a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d = d + a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1

    factor = p
    for k in range(1, n_ders + 1):
        ders[k] *= factor
        factor *= p - k
    return ders


def basis_matrix(basis: BasisSet, xs, deriv_order: int = 0) -> np.ndarray:
    """Matrix whose row j holds all m basis values (or derivatives) at xs[j]."""
    if deriv_order not in (0, 1, 2):
        raise DataError(f"unsupported derivative order {deriv_order} (0, 1 or 2)")
    p = basis.degree
    if deriv_order > p:
        raise DataError(
            f"derivative order {deriv_order} exceeds spline degree {p}"
        )
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if xs.ndim != 1:
        raise DataError("positions must be a 1-D sequence")
    out = np.zeros((xs.size, basis.m))
    if xs.size == 0:
        return out
    xs, spans = _locate(basis, xs)
    ders = _nonzero_ders(basis.knot_vector.knots, p, xs, spans, deriv_order)
    rows = np.arange(xs.size)
    for j in range(p + 1):
        out[rows, spans - p + j] = ders[deriv_order, j]
    return out


def eval_basis(basis: BasisSet, x: float, deriv_order: int = 0) -> np.ndarray:
    """All m basis values (or a derivative) at a single position."""
    return basis_matrix(basis, [x], deriv_order)[0]
