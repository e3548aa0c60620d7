"""Isotropic Gaussian distribution on SO(3).

The rotation angle follows the truncated heat-kernel series

    f(w) = (1 - cos w) / pi * sum_l (2l+1) exp(-l(l+1) eps2) sin((l+1/2) w) / sin(w/2)

with the axis uniform on the sphere. Sampling goes through a tabulated
inverse CDF on a uniform angle grid over [0, pi].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import so3

DEFAULT_N_OMEGA = 4096
DEFAULT_SERIES_LENGTH = 2000

# Below this concentration the series is numerically hostile; fall back to
# the tangent-space Gaussian (per-axis variance 2*eps2, angle ~ scaled chi_3).
_TANGENT_FALLBACK = 1e-4
_EPS2_FLOOR = 1e-6
_TERM_CUTOFF = 1e-12


def _series_sum(omega: np.ndarray, eps2: float, length: int) -> np.ndarray:
    """Sum of the l-series at each angle; the w -> 0 limit of each term is 2l+1."""
    omega = np.asarray(omega, dtype=float)
    total = np.zeros_like(omega)
    half = 0.5 * omega
    sin_half = np.sin(half)
    tiny = omega < 1e-10
    for l in range(length):
        decay = np.exp(-l * (l + 1) * eps2)
        # |sin((l+1/2)w)/sin(w/2)| <= 2l+1, so this bounds the term everywhere.
        if (2 * l + 1) ** 2 * decay < _TERM_CUTOFF and l > 1:
            break
        ratio = np.where(
            tiny,
            2 * l + 1,
            np.sin((l + 0.5) * omega) / np.where(tiny, 1.0, sin_half),
        )
        total += (2 * l + 1) * decay * ratio
    return total


def density(
    omega: float | np.ndarray, eps2: float, length: int = DEFAULT_SERIES_LENGTH
) -> float | np.ndarray:
    """Angle density f(omega) of the isotropic Gaussian at concentration eps2.

    Vanishes at omega = 0 through the (1 - cos omega) Haar factor. Raises
    ValueError for eps2 <= 0 or length < 1.
    """
    if eps2 <= 0.0:
        raise ValueError(f"concentration eps2 must be positive, got {eps2}")
    if length < 1:
        raise ValueError(f"series length must be >= 1, got {length}")
    scalar = np.isscalar(omega)
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    out = (1.0 - np.cos(w)) / np.pi * _series_sum(w, eps2, length)
    return float(out[0]) if scalar else out


def _tangent_density(omega: np.ndarray, eps2: float) -> np.ndarray:
    """Unnormalized angle density of a tangent-space Gaussian draw.

    For a zero-mean Gaussian with per-axis variance 2*eps2 in the tangent
    space, the angle |v| has a Maxwell density w^2 exp(-w^2 / (4 eps2)).
    """
    return omega**2 * np.exp(-(omega**2) / (4.0 * eps2))


@dataclass
class IgSo3Table:
    """Tabulated angle density and inverse CDF at one concentration."""

    eps2: float
    omega: np.ndarray
    density: np.ndarray
    cdf: np.ndarray
    # Trapezoidal mass of the raw density before renormalization; close to 1
    # when the series is converged.
    raw_mass: float = field(default=1.0, repr=False)

    def median_angle(self) -> float:
        return float(np.interp(0.5, self.cdf, self.omega))

    def mean_angle(self) -> float:
        return float(np.trapezoid(self.omega * self.density, self.omega))


def build_table(
    eps2: float,
    n_omega: int = DEFAULT_N_OMEGA,
    length: int = DEFAULT_SERIES_LENGTH,
) -> IgSo3Table:
    """Build the density/CDF table for inverse-CDF angle sampling.

    The density is renormalized so the CDF ends at exactly 1. Concentrations
    below 1e-4 use the tangent-space Gaussian approximation; eps2 is floored
    at 1e-6.
    """
    if eps2 <= 0.0:
        raise ValueError(f"concentration eps2 must be positive, got {eps2}")
    if n_omega < 256:
        raise ValueError(f"n_omega must be >= 256, got {n_omega}")
    eps2 = max(float(eps2), _EPS2_FLOOR)
    omega = np.linspace(0.0, np.pi, n_omega)
    if eps2 < _TANGENT_FALLBACK:
        dens = _tangent_density(omega, eps2)
    else:
        dens = np.asarray(density(omega, eps2, length))
    dens = np.maximum(dens, 0.0)
    widths = np.diff(omega)
    increments = 0.5 * (dens[1:] + dens[:-1]) * widths
    cdf = np.concatenate([[0.0], np.cumsum(increments)])
    raw_mass = float(cdf[-1])
    if raw_mass <= 0.0:
        raise ValueError(f"degenerate density table for eps2={eps2}")
    dens = dens / raw_mass
    cdf = cdf / raw_mass
    cdf[-1] = 1.0
    return IgSo3Table(eps2=eps2, omega=omega, density=dens, cdf=cdf, raw_mass=raw_mass)


def sample_angles(table: IgSo3Table, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw n rotation angles by linear-interpolation inverse CDF."""
    u = rng.uniform(0.0, 1.0, n)
    return np.interp(u, table.cdf, table.omega)


def sample_rotation(table: IgSo3Table, rng: np.random.Generator) -> np.ndarray:
    """One rotation matrix: tabulated angle, uniform axis."""
    angle = float(sample_angles(table, rng, 1)[0])
    return so3.exp_rotation(angle * so3.sample_uniform_axis(rng))


def sample_rotations(table: IgSo3Table, rng: np.random.Generator, n: int) -> np.ndarray:
    """n rotation matrices, shape (n, 3, 3)."""
    angles = sample_angles(table, rng, n)
    axes = so3.sample_uniform_axes(rng, n)
    return so3.exp_rotations(angles[:, None] * axes)


def sample_shifted(
    mean: np.ndarray, table: IgSo3Table, rng: np.random.Generator
) -> np.ndarray:
    """Draw from the isotropic Gaussian centered at ``mean``."""
    return np.asarray(mean) @ sample_rotation(table, rng)


class TableCache:
    """Per-concentration table cache; tables are immutable once built."""

    def __init__(
        self,
        n_omega: int = DEFAULT_N_OMEGA,
        length: int = DEFAULT_SERIES_LENGTH,
    ) -> None:
        self.n_omega = n_omega
        self.length = length
        self._tables: dict[float, IgSo3Table] = {}

    def get(self, eps2: float) -> IgSo3Table:
        key = float(eps2)
        table = self._tables.get(key)
        if table is None:
            table = build_table(key, self.n_omega, self.length)
            self._tables[key] = table
        return table
