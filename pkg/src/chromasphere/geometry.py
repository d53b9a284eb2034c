"""Core geometry of the n-sphere of radius R embedded in R^(n+1).

Points are plain numpy arrays of shape (n+1,) (or (k, n+1) for batches) with
Euclidean norm R.  Angular distance is the angle subtended at the centre;
chord distance is the straight-line distance, 2 R sin(angle / 2).

The normalized cap measure of the cap of angular radius phi is

    Theta(phi) = int_0^phi sin^(n-1) t dt / int_0^pi sin^(n-1) t dt,

computed by adaptive quadrature to 1e-12 relative accuracy (a single code
path for every dimension; closed forms exist for small n and are used as test
oracles only).
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import DomainError, InvalidPointError

# Relative tolerance for "is on the sphere" checks.  Constructors renormalize
# anything inside this band instead of rejecting it.
ON_SPHERE_RTOL = 1e-12
ROTATION_TOL = 1e-10


@dataclass(frozen=True)
class SphereSpec:
    """Ambient dimension n (the sphere is n-dimensional) and radius R."""

    n: int
    R: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"sphere dimension must be an integer >= 2, got {self.n}")
        if not self.R > 0:
            raise DomainError(f"radius must be positive, got {self.R}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "R", float(self.R))

    @property
    def dim(self):
        """Dimension of the ambient Euclidean space."""
        return self.n + 1


@dataclass(frozen=True)
class Cap:
    """Spherical cap: points within angular_radius of center."""

    center: np.ndarray
    angular_radius: float

    def __post_init__(self):
        if not 0 < self.angular_radius <= np.pi:
            raise DomainError(f"cap angular radius must lie in (0, pi], got {self.angular_radius}")


def sphere_point(spec, coords):
    """Validate coords as a point of the sphere; renormalize within tolerance.

    Raises InvalidPointError when the norm deviates from R by more than the
    on-sphere tolerance (with a small safety factor so that round-tripped
    points always pass).
    """
    v = np.asarray(coords, dtype=float)
    if v.shape != (spec.dim,):
        raise InvalidPointError(f"expected shape ({spec.dim},), got {v.shape}")
    r = float(np.linalg.norm(v))
    if r == 0.0 or abs(r / spec.R - 1.0) > 1e3 * ON_SPHERE_RTOL:
        raise InvalidPointError(f"|coords| = {r} is not R = {spec.R} within tolerance")
    return v * (spec.R / r)


def _check_on_sphere(spec, *points):
    for p in points:
        r = np.linalg.norm(p)
        if abs(r / spec.R - 1.0) > 1e3 * ON_SPHERE_RTOL:
            raise InvalidPointError(f"point with |coords| = {r} is off the sphere R = {spec.R}")


def angular_distance(spec, p, q):
    """Angle in [0, pi] between two sphere points, seen from the centre."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    _check_on_sphere(spec, p, q)
    c = float(np.dot(p, q)) / (spec.R * spec.R)
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def chord_distance(spec, p, q):
    """Euclidean distance between two sphere points: 2 R sin(angle / 2)."""
    theta = angular_distance(spec, p, q)
    return 2.0 * spec.R * np.sin(0.5 * theta)


def angles_to(spec, points, ref):
    """Angles from each row of `points` to the single point `ref` (no validation)."""
    c = points @ np.asarray(ref, dtype=float) / (spec.R * spec.R)
    return np.arccos(np.clip(c, -1.0, 1.0))


@lru_cache(maxsize=None)
def _half_period_integral(n):
    # int_0^pi sin^(n-1) t dt, by the same adaptive scheme as the numerator.
    val, _ = integrate.quad(lambda t: np.sin(t) ** (n - 1), 0.0, np.pi,
                            epsabs=1e-15, epsrel=1e-13, limit=200)
    return val


def cap_measure(spec, phi):
    """Normalized surface measure Theta(phi) of a cap of angular radius phi."""
    if not 0.0 < phi <= np.pi:
        raise DomainError(f"cap angle must lie in (0, pi], got {phi}")
    n = spec.n
    num, _ = integrate.quad(lambda t: np.sin(t) ** (n - 1), 0.0, phi,
                            epsabs=1e-15, epsrel=1e-13, limit=200)
    return num / _half_period_integral(n)


# ---------------------------------------------------------------------------
# random points and rotations
# ---------------------------------------------------------------------------

def random_points(spec, rng, count):
    """`count` independent uniform points on the sphere, rows of a (count, n+1) array."""
    g = rng.standard_normal((count, spec.dim))
    norms = np.linalg.norm(g, axis=1)
    bad = norms == 0.0
    while np.any(bad):  # probability zero, but keep the contract airtight
        g[bad] = rng.standard_normal((int(bad.sum()), spec.dim))
        norms = np.linalg.norm(g, axis=1)
        bad = norms == 0.0
    return g * (spec.R / norms)[:, None]


def random_point(spec, rng):
    return random_points(spec, rng, 1)[0]


def random_rotations(spec, rng, count):
    """`count` Haar-distributed rotations, a (count, n+1, n+1) array.

    Orthonormalize a Gaussian matrix; fixing the signs of the triangular
    factor's diagonal makes the factorization unique (and the orthogonal
    factor Haar on the full orthogonal group); multiplying the last column by
    the determinant lands on the orientation-preserving component without
    disturbing the distribution.
    """
    d = spec.dim
    g = rng.standard_normal((count, d, d))
    q, r = np.linalg.qr(g)
    sign = np.sign(np.diagonal(r, axis1=1, axis2=2))
    sign[sign == 0.0] = 1.0
    q = q * sign[:, None, :]
    det = np.linalg.det(q)
    q[:, :, -1] *= np.sign(det)[:, None]
    return q


def random_rotation(spec, rng):
    return random_rotations(spec, rng, 1)[0]


def rotation_defect(m):
    """Max-entry deviation of M^T M from the identity."""
    m = np.asarray(m, dtype=float)
    return float(np.max(np.abs(m.T @ m - np.eye(m.shape[0]))))


def check_rotation(m, tol=ROTATION_TOL):
    """Raise DomainError unless m is orthogonal with determinant +1."""
    if rotation_defect(m) > tol:
        raise DomainError("matrix is not orthogonal within tolerance")
    if np.linalg.det(m) <= 0:
        raise DomainError("matrix reverses orientation")
    return np.asarray(m, dtype=float)
