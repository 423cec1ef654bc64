"""Time-independent vorticity forcing built from spectral amplitude laws.

The zonal part is a pure sine series in ``y`` whose coefficient moduli follow
one of three laws (band-limited, algebraic, analytic), taken with equality.
Moduli are quoted for the orthonormal basis ``exp(i k.x)/L``; the stored
Fourier amplitudes are therefore the moduli divided by ``L``.

An optional non-zonal component is drawn as a y-odd random field and scaled
to a prescribed Grashof contribution ``|grad^{-1} f_tilde| / (mu kappa0)^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import zeta as _scipy_zeta

from .dynamics import PhysicalParams
from .spectral import (
    DomainError,
    GridSpec,
    SpectralField,
    band_profile,
    norm,
    random_field,
    zonal_split,
)

__all__ = [
    "BandLimited",
    "Algebraic",
    "Analytic",
    "NonZonal",
    "ForcingSpec",
    "build_forcing",
    "zonal_moduli",
    "normalization_check",
    "zeta",
]


@dataclass(frozen=True)
class BandLimited:
    """Flat zonal spectrum on ``kappa0 <= |k| <= kappa_f``."""

    kappa_f: float

    def __post_init__(self):
        if not self.kappa_f > 0:
            raise DomainError(f"kappa_f must be positive, got {self.kappa_f}")


@dataclass(frozen=True)
class Algebraic:
    """Zonal moduli decaying as ``|k|^{-s}``; needs ``s > 5/2``."""

    s: float

    def __post_init__(self):
        if not self.s > 2.5:
            raise DomainError(f"s must exceed 5/2 (got {self.s})")


@dataclass(frozen=True)
class Analytic:
    """Zonal moduli decaying as ``exp(alpha (1 - |k|/kappa0))``."""

    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError(f"alpha must be positive (got {self.alpha})")


ZonalClass = Union[BandLimited, Algebraic, Analytic]


@dataclass(frozen=True)
class NonZonal:
    """Random y-odd non-zonal forcing on the band ``kmin <= |k|/kappa0 <= kmax``.

    ``amplitude`` is its Grashof contribution ``|grad^{-1} f| / (mu kappa0)^2``.
    """

    amplitude: float
    kmin: float = 1.0
    kmax: float = 4.0
    slope: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.amplitude < 0:
            raise DomainError("non-zonal amplitude must be nonnegative")
        if not 0 < self.kmin <= self.kmax:
            raise DomainError(f"need 0 < kmin <= kmax, got {self.kmin}, {self.kmax}")


@dataclass(frozen=True)
class ForcingSpec:
    zonal_class: ZonalClass
    G0_target: float
    grid: GridSpec
    params: PhysicalParams
    phase_seed: int | None = None
    nonzonal: NonZonal | None = None

    def __post_init__(self):
        if self.G0_target < 0:
            raise DomainError("G0_target must be nonnegative")


def zeta(x: float) -> float:
    """Riemann zeta for real ``x > 1``."""
    x = float(x)
    if not x > 1:
        raise DomainError(f"zeta needs x > 1, got {x}")
    return float(_scipy_zeta(x))


def zonal_moduli(zonal_class: ZonalClass, G0: float, params: PhysicalParams,
                 jmax: int) -> np.ndarray:
    """Moduli ``|f_bar_(0, j kappa0)|`` for ``j = 1..jmax`` (orthonormal basis)."""
    j = np.arange(1, jmax + 1, dtype=float)
    nu0, k0 = params.nu0, params.kappa0
    if isinstance(zonal_class, Analytic):
        a = zonal_class.alpha
        return (nu0**2 * G0 / (2 * k0)) * math.sqrt(2 * a / (1 + 2 * a)) * np.exp(a * (1 - j))
    if isinstance(zonal_class, Algebraic):
        s = zonal_class.s
        pref = nu0**2 * k0 ** (s - 1) * G0 / (math.sqrt(2) * math.sqrt(zeta(2 + 2 * s)))
        return pref * (j * k0) ** (-s)
    if isinstance(zonal_class, BandLimited):
        m = int(math.floor(zonal_class.kappa_f / k0 + 1e-9))
        out = np.zeros_like(j)
        m = min(m, jmax)
        if m < 1:
            return out
        # |grad^{-1} f_bar|^2 = 2 b^2 sum_{j<=m} 1/(j k0)^2 = (nu0^2 G0 / k0^2)^2
        b = nu0**2 * G0 / k0 / math.sqrt(2 * np.sum(1.0 / j[:m] ** 2))
        out[:m] = b
        return out
    raise TypeError(f"unknown zonal class {zonal_class!r}")


def build_forcing(spec: ForcingSpec) -> SpectralField:
    """Assemble the forcing field; the zonal part uses modes up to the 2/3-rule cutoff."""
    grid = spec.grid
    n = grid.n
    jmax = grid.dealias_index
    moduli = zonal_moduli(spec.zonal_class, spec.G0_target, spec.params, jmax)
    if spec.phase_seed is None:
        signs = np.ones(jmax)
    else:
        rng = np.random.Generator(np.random.Philox(key=int(spec.phase_seed)))
        signs = np.where(rng.random(jmax) < 0.5, -1.0, 1.0)
    c = np.zeros(grid.spectral_shape, complex)
    j = np.arange(1, jmax + 1)
    amp = signs * moduli / grid.L
    # sin(j k0 y) = (e^{i j k0 y} - e^{-i j k0 y}) / 2i
    c[j, 0] = -1j * amp
    c[n - j, 0] = 1j * amp
    f = SpectralField(grid, c, True)
    nz = spec.nonzonal
    if nz is not None and nz.amplitude > 0:
        g = random_field(nz.seed, band_profile(nz.kmin, nz.kmax, nz.slope), grid,
                         y_antisymmetric=True)
        gc = np.array(g.coeffs)
        gc[:, 0] = 0.0
        g = SpectralField(grid, gc, True)
        scale = norm(g, -1.0)
        if scale == 0:
            raise DomainError("non-zonal band contains no admissible modes")
        target = nz.amplitude * (spec.params.mu * spec.params.kappa0) ** 2
        f = f + (target / scale) * g
    return f


def normalization_check(f: SpectralField, params: PhysicalParams) -> float:
    """``|grad^{-1} f_bar| / (mu kappa0)^2`` for the zonal part of ``f``."""
    fbar, _ = zonal_split(f)
    return norm(fbar, -1.0) / (params.mu * params.kappa0) ** 2
