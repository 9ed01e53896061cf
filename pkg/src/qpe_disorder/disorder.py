"""Bloch-sphere disorder distributions for the faulty Hadamard gates.

Three families, all centered on the ideal gate output ``|+>`` (the point
``x = 1`` on the Bloch sphere, i.e. ``theta = pi/2, phi = 0``):

* ``Cap(d)`` -- Haar-uniform restricted to geodesic angle <= d from the mean.
* ``Squeezed(area, r)`` -- Haar-uniform restricted to the intersection of the
  sphere with an elliptical cylinder along x; the cross-section has area
  ``D = pi a b`` and aspect ratio ``r = a / b`` (a along y, b along z).
* ``VonMisesFisher(kappa)`` -- the spherical normal with concentration kappa;
  kappa = 0 is uniform over the whole sphere.

Disorder strength is measured by sigma, the root mean square geodesic angle
from the mean direction.  Sampling is performed around the z-pole and mapped
onto the x-axis by the rotation (x, y, z) -> (z, y, -x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import quad

from .core import AngleSample

__all__ = [
    "Cap",
    "Squeezed",
    "VonMisesFisher",
    "DisorderSpec",
    "SphericalPoint",
    "SigmaRangeError",
    "sample",
    "sample_angles",
    "sample_points",
    "sigma",
    "squeezed_sigma",
    "param_for_sigma",
    "empirical_sigma",
    "geodesic_from_mean",
    "vmf_polar_cdf",
    "CAP_SIGMA_MAX",
]

# Consecutive rejected candidates that make the squeezed sampler give up.
REJECTION_LIMIT = 10**7

# Fixed stream for the Monte Carlo sigma of the squeezed family, so that
# sigma(spec) is a deterministic, reproducible function of the spec.
SQUEEZED_SIGMA_SEED = 1905
SQUEEZED_SIGMA_SAMPLES = 10**6

_REJECTION_CHUNK = 1 << 21


class SigmaRangeError(ValueError):
    """Requested disorder strength is outside the attainable interval."""


@dataclass(frozen=True)
class Cap:
    """Haar-uniform with a circular cut-off at geodesic angle ``d``.

    ``d = 0`` is the degenerate zero-disorder point (every sample lands
    exactly on the mean); ``d = pi`` covers the whole sphere.
    """

    d: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.d <= math.pi:
            raise ValueError(f"cap angle must be in [0, pi], got {self.d}")


@dataclass(frozen=True)
class Squeezed:
    """Haar-uniform with an elliptical cut-off of area ``area``, ratio ``r``."""

    area: float
    r: float

    def __post_init__(self) -> None:
        if not 0.0 < self.area <= math.pi:
            raise ValueError(f"ellipse area must be in (0, pi], got {self.area}")
        r_min = self.area / math.pi
        r_max = math.pi / self.area
        if not r_min <= self.r <= r_max:
            raise ValueError(
                f"ratio {self.r} outside allowed range [{r_min:.6g}, {r_max:.6g}] "
                f"for area {self.area}"
            )

    @property
    def semi_axis_y(self) -> float:
        return math.sqrt(self.area * self.r / math.pi)

    @property
    def semi_axis_z(self) -> float:
        return math.sqrt(self.area / (math.pi * self.r))


@dataclass(frozen=True)
class VonMisesFisher:
    """Spherical normal with concentration ``kappa`` (inf = zero disorder)."""

    kappa: float

    def __post_init__(self) -> None:
        if not self.kappa >= 0.0:
            raise ValueError(f"concentration must be >= 0, got {self.kappa}")


DisorderSpec = Cap | Squeezed | VonMisesFisher


class SphericalPoint(NamedTuple):
    """Unit vector on the Bloch sphere with angle conversions."""

    x: float
    y: float
    z: float

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> "SphericalPoint":
        st = math.sin(theta)
        return cls(st * math.cos(phi), st * math.sin(phi), math.cos(theta))

    def to_angles(self) -> AngleSample:
        theta = math.acos(max(-1.0, min(1.0, self.z)))
        phi = math.atan2(self.y, self.x) % (2 * math.pi)
        return AngleSample(theta, phi)


def spec_kind(spec: DisorderSpec) -> str:
    if isinstance(spec, Cap):
        return "cap"
    if isinstance(spec, Squeezed):
        return "squeezed"
    if isinstance(spec, VonMisesFisher):
        return "vmf"
    raise TypeError(f"not a disorder spec: {spec!r}")


def spec_param(spec: DisorderSpec) -> float:
    """The scalar knob of a spec: d, r, or kappa."""
    if isinstance(spec, Cap):
        return spec.d
    if isinstance(spec, Squeezed):
        return spec.r
    if isinstance(spec, VonMisesFisher):
        return spec.kappa
    raise TypeError(f"not a disorder spec: {spec!r}")


# ---------------------------------------------------------------------------
# sampling


def _rotate_pole_to_x(x, y, z):
    # (x, y, z) -> (z, y, -x): maps the north pole onto the +x axis
    return z, y, -x


def _pole_points_from_cos(cos_pol, az):
    sin_pol = np.sqrt(np.clip(1.0 - cos_pol * cos_pol, 0.0, None))
    return sin_pol * np.cos(az), sin_pol * np.sin(az), cos_pol


def _sample_cap_xyz(spec: Cap, rng: np.random.Generator, n: int):
    # polar angle: cosine uniform in [cos d, 1]; azimuth uniform
    cos_pol = 1.0 - rng.random(n) * (1.0 - math.cos(spec.d))
    az = rng.random(n) * (2.0 * math.pi)
    return _rotate_pole_to_x(*_pole_points_from_cos(cos_pol, az))


def _vmf_cos_polar(kappa: float, rng: np.random.Generator, n: int) -> np.ndarray:
    if math.isinf(kappa):
        return np.ones(n)
    a = rng.random(n)
    if kappa == 0.0:
        return 1.0 - 2.0 * a
    # inverse CDF, written as kappa + log1p(-A(1 - e^-2k)) to stay finite
    # for concentrations up to ~1e4 and beyond
    cos_pol = 1.0 + np.log1p(-a * -math.expm1(-2.0 * kappa)) / kappa
    return np.clip(cos_pol, -1.0, 1.0)


def _sample_vmf_xyz(spec: VonMisesFisher, rng: np.random.Generator, n: int):
    cos_pol = _vmf_cos_polar(spec.kappa, rng, n)
    az = rng.random(n) * (2.0 * math.pi)
    return _rotate_pole_to_x(*_pole_points_from_cos(cos_pol, az))


def _sample_squeezed_xyz(spec: Squeezed, rng: np.random.Generator, n: int):
    inv_a2 = 1.0 / spec.semi_axis_y**2
    inv_b2 = 1.0 / spec.semi_axis_z**2
    xs, ys, zs = [], [], []
    accepted = 0
    rejected_run = 0
    while accepted < n:
        z = 1.0 - 2.0 * rng.random(_REJECTION_CHUNK)
        az = rng.random(_REJECTION_CHUNK) * (2.0 * math.pi)
        s = np.sqrt(1.0 - z * z)
        x = s * np.cos(az)
        y = s * np.sin(az)
        keep = (x > 0.0) & (y * y * inv_a2 + z * z * inv_b2 <= 1.0)
        k = int(np.count_nonzero(keep))
        if k == 0:
            rejected_run += _REJECTION_CHUNK
            if rejected_run > REJECTION_LIMIT:
                raise RuntimeError(
                    f"squeezed sampler: no acceptance in {rejected_run} draws; "
                    f"support of {spec} is degenerate"
                )
            continue
        rejected_run = 0
        xs.append(x[keep])
        ys.append(y[keep])
        zs.append(z[keep])
        accepted += k
    x = np.concatenate(xs)[:n]
    y = np.concatenate(ys)[:n]
    z = np.concatenate(zs)[:n]
    return x, y, z


def sample_points(spec: DisorderSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw ``n`` unit vectors from the distribution; shape (n, 3)."""
    if isinstance(spec, Cap):
        x, y, z = _sample_cap_xyz(spec, rng, n)
    elif isinstance(spec, VonMisesFisher):
        x, y, z = _sample_vmf_xyz(spec, rng, n)
    elif isinstance(spec, Squeezed):
        x, y, z = _sample_squeezed_xyz(spec, rng, n)
    else:
        raise TypeError(f"not a disorder spec: {spec!r}")
    return np.column_stack([x, y, z])


def sample_angles(
    spec: DisorderSpec, rng: np.random.Generator, n: int
) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``n`` gate-angle pairs (theta, phi) from the distribution."""
    pts = sample_points(spec, rng, n)
    theta = np.arccos(np.clip(pts[:, 2], -1.0, 1.0))
    phi = np.arctan2(pts[:, 1], pts[:, 0]) % (2.0 * math.pi)
    return theta, phi


def sample(spec: DisorderSpec, rng: np.random.Generator) -> AngleSample:
    """Draw a single gate-angle pair from the distribution."""
    theta, phi = sample_angles(spec, rng, 1)
    return AngleSample(float(theta[0]), float(phi[0]))


def geodesic_from_mean(points: np.ndarray) -> np.ndarray:
    """Great-circle angle of each point from the mean direction (+x)."""
    return np.arccos(np.clip(np.asarray(points)[..., 0], -1.0, 1.0))


# ---------------------------------------------------------------------------
# disorder strength


def _cap_sigma_sq(d: float) -> float:
    if d == 0.0:
        return 0.0
    if d < 1e-2:
        # series around d = 0; the closed form cancels catastrophically there
        return d * d / 2.0 - d**4 / 72.0
    c, s = math.cos(d), math.sin(d)
    return (2.0 * d * s + 2.0 * c - d * d * c - 2.0) / (1.0 - c)


def _vmf_sigma_sq(kappa: float) -> float:
    if math.isinf(kappa):
        return 0.0
    if kappa == 0.0:
        integrand = lambda t: 0.5 * t * t * math.sin(t)
        points = None
    else:
        norm = kappa / -math.expm1(-2.0 * kappa)

        def integrand(t: float) -> float:
            return t * t * norm * math.exp(kappa * (math.cos(t) - 1.0)) * math.sin(t)

        # the mass concentrates near the pole for large kappa; give the
        # adaptive routine a breakpoint at the edge of that region
        points = [min(math.pi * 0.5, 12.0 / math.sqrt(kappa))] if kappa > 4 else None
    val, _ = quad(integrand, 0.0, math.pi, points=points, epsrel=1e-8, limit=200)
    return val


_SQUEEZED_POOL: dict = {}


def _squeezed_pool(seed: int, chunks: int):
    """Haar candidates with x > 0, grown deterministically chunk by chunk.

    Returns (g2, y2, z2) arrays covering `chunks` chunks of the stream.
    Cached so that repeated sigma evaluations (e.g. during bisection over r)
    reuse the same candidate stream.
    """
    cached = _SQUEEZED_POOL.get(seed)
    if cached is None or cached[0] < chunks:
        if cached is None:
            have = 0
            rng = np.random.default_rng(seed)
            parts_g2, parts_y2, parts_z2 = [], [], []
        else:
            have, g2, y2, z2, rng = cached
            parts_g2, parts_y2, parts_z2 = [g2], [y2], [z2]
        for _ in range(chunks - have):
            z = 1.0 - 2.0 * rng.random(_REJECTION_CHUNK)
            az = rng.random(_REJECTION_CHUNK) * (2.0 * math.pi)
            s = np.sqrt(1.0 - z * z)
            x = s * np.cos(az)
            keep = x > 0.0
            y = s[keep] * np.sin(az[keep])
            z = z[keep]
            g = np.arccos(np.clip(x[keep], -1.0, 1.0))
            parts_g2.append(g * g)
            parts_y2.append(y * y)
            parts_z2.append(z * z)
        g2 = np.concatenate(parts_g2)
        y2 = np.concatenate(parts_y2)
        z2 = np.concatenate(parts_z2)
        _SQUEEZED_POOL.clear()
        _SQUEEZED_POOL[seed] = (chunks, g2, y2, z2, rng)
        cached = _SQUEEZED_POOL[seed]
    return cached[1], cached[2], cached[3]


def squeezed_sigma(
    spec: Squeezed,
    n: int = SQUEEZED_SIGMA_SAMPLES,
    seed: int = SQUEEZED_SIGMA_SEED,
) -> tuple[float, float]:
    """Monte Carlo sigma of a squeezed distribution, with its standard error.

    Estimates E[arccos^2(x)] over at least ``n`` accepted samples drawn from
    a fixed candidate stream, so the value is reproducible per spec.
    """
    inv_a2 = 1.0 / spec.semi_axis_y**2
    inv_b2 = 1.0 / spec.semi_axis_z**2
    # candidate budget per chunk after the x > 0 pre-filter is ~chunk/2;
    # acceptance within that half-sphere is roughly area/(2 pi) >= D/(2 pi)
    est_accept = spec.area / (2.0 * math.pi) * 0.8
    chunks = max(1, math.ceil(n / (est_accept * _REJECTION_CHUNK / 2)))
    while True:
        g2, y2, z2 = _squeezed_pool(seed, chunks)
        keep = y2 * inv_a2 + z2 * inv_b2 <= 1.0
        count = int(np.count_nonzero(keep))
        if count >= n:
            break
        if count == 0 and chunks * _REJECTION_CHUNK > REJECTION_LIMIT:
            raise RuntimeError(
                f"squeezed sigma: no acceptance in {chunks * _REJECTION_CHUNK} "
                f"draws; support of {spec} is degenerate"
            )
        chunks *= 2
    vals = g2[keep]
    mean_sq = float(vals.mean())
    se_mean_sq = float(vals.std(ddof=1)) / math.sqrt(count)
    sig = math.sqrt(mean_sq)
    return sig, se_mean_sq / (2.0 * sig) if sig > 0 else 0.0


def sigma(spec: DisorderSpec) -> float:
    """Standard deviation of the geodesic angle from the mean, in radians.

    Cap uses the closed form, von Mises-Fisher adaptive quadrature (relative
    error 1e-8), squeezed a seeded Monte Carlo estimate over >= 1e6 samples
    (see ``squeezed_sigma`` for its standard error).
    """
    if isinstance(spec, Cap):
        return math.sqrt(_cap_sigma_sq(spec.d))
    if isinstance(spec, VonMisesFisher):
        return math.sqrt(_vmf_sigma_sq(spec.kappa))
    if isinstance(spec, Squeezed):
        return squeezed_sigma(spec)[0]
    raise TypeError(f"not a disorder spec: {spec!r}")


CAP_SIGMA_MAX = math.sqrt((math.pi**2 - 4.0) / 2.0)


def _bisect(f, lo: float, hi: float, tol: float, max_iter: int = 200) -> float:
    f_lo = f(lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if abs(f_mid) <= tol or hi - lo < 1e-13 * max(1.0, abs(hi)):
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def param_for_sigma(
    kind: str,
    target_sigma: float,
    area: float | None = None,
    lower_branch: bool = False,
) -> DisorderSpec:
    """Invert sigma(spec) for the requested family by bisection.

    ``kind`` is one of "cap", "vmf", "squeezed".  The squeezed family needs
    the ellipse ``area``; by default the r >= 1 branch is searched, with
    ``lower_branch=True`` selecting r <= 1.  The returned spec reproduces
    ``target_sigma`` to 1e-4.  Out-of-range targets raise SigmaRangeError
    naming the attainable interval.
    """
    if kind == "cap":
        if target_sigma == 0.0:
            return Cap(0.0)
        if not 0.0 < target_sigma <= CAP_SIGMA_MAX:
            raise SigmaRangeError(
                f"sigma={target_sigma} not attainable for cap disorder; "
                f"the attainable range is (0, {CAP_SIGMA_MAX:.6f}]"
            )
        d = _bisect(
            lambda d: math.sqrt(_cap_sigma_sq(d)) - target_sigma, 0.0, math.pi, 1e-6
        )
        return Cap(d)

    if kind == "vmf":
        sig_max = math.sqrt(_vmf_sigma_sq(0.0))
        if target_sigma == 0.0:
            return VonMisesFisher(math.inf)
        if not 0.0 < target_sigma <= sig_max:
            raise SigmaRangeError(
                f"sigma={target_sigma} not attainable for vmf disorder; "
                f"the attainable range is (0, {sig_max:.6f}]"
            )
        if target_sigma == sig_max:
            return VonMisesFisher(0.0)
        hi = max(1.0, 2.0 / target_sigma**2)
        while math.sqrt(_vmf_sigma_sq(hi)) > target_sigma:
            hi *= 2.0
        # sigma decreases with kappa, so flip the objective's sign
        kappa = _bisect(
            lambda k: target_sigma - math.sqrt(_vmf_sigma_sq(k)), 0.0, hi, 1e-6
        )
        return VonMisesFisher(kappa)

    if kind == "squeezed":
        if area is None:
            raise ValueError("squeezed inversion needs the ellipse area")
        r_edge = area / math.pi if lower_branch else math.pi / area
        sig_lo, _ = squeezed_sigma(Squeezed(area, 1.0))
        sig_hi, _ = squeezed_sigma(Squeezed(area, r_edge))
        if not sig_lo <= target_sigma <= sig_hi:
            raise SigmaRangeError(
                f"sigma={target_sigma} not attainable for squeezed disorder with "
                f"area {area}; the attainable range is [{sig_lo:.6f}, {sig_hi:.6f}]"
            )

        def objective(r: float) -> float:
            return squeezed_sigma(Squeezed(area, r))[0] - target_sigma

        # sigma grows away from r = 1 on both branches
        if lower_branch:
            r = _bisect(lambda r: -objective(r), r_edge, 1.0, 5e-5)
        else:
            r = _bisect(objective, 1.0, r_edge, 5e-5)
        return Squeezed(area, r)

    raise ValueError(f"unknown disorder kind {kind!r}")


def empirical_sigma(
    spec: DisorderSpec, n: int, rng: np.random.Generator | None = None
) -> tuple[float, float]:
    """Sampler-based sigma with a jackknife standard error.

    Validates the samplers against the analytic/quadrature values of
    ``sigma``; ``n`` must be at least 1e4 for the error estimate to mean
    anything.
    """
    if n < 10**4:
        raise ValueError(f"need n >= 1e4 samples, got {n}")
    if rng is None:
        rng = np.random.default_rng(SQUEEZED_SIGMA_SEED)
    pts = sample_points(spec, rng, n)
    g2 = geodesic_from_mean(pts) ** 2
    total = g2.sum()
    est = math.sqrt(total / n)
    loo = np.sqrt(np.clip(total - g2, 0.0, None) / (n - 1))
    se = math.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2))
    return est, se


def vmf_polar_cdf(kappa: float, theta) -> np.ndarray:
    """CDF of the polar angle from the mean for von Mises-Fisher disorder."""
    theta = np.asarray(theta, dtype=float)
    if kappa == 0.0:
        return 0.5 * (1.0 - np.cos(theta))
    num = -np.expm1(kappa * (np.cos(theta) - 1.0))
    return num / -math.expm1(-2.0 * kappa)
