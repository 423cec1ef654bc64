"""Fourier pseudospectral machinery on the doubly periodic square.

Fields live on the square of side ``L`` sampled at ``n x n`` collocation
points. Physical arrays are indexed ``values[iy, ix]`` with ``x = ix*L/n`` and
``y = iy*L/n`` (taken modulo ``L`` into ``[-L/2, L/2)``), so grid row 0 is the
line ``y = 0`` and reflecting ``y -> -y`` maps row ``j`` to row ``(n - j) % n``.

Spectral arrays hold the half spectrum produced by ``rfft2`` along ``x``:
shape ``(n, n//2 + 1)``, axis 0 is the ``k_y`` index in FFT order, axis 1 the
non-negative ``k_x`` index. Coefficients are normalised as Fourier amplitudes,

    f(x) = sum_k f_k exp(i k.x),

so ``cos(kappa0 x)`` has coefficient 1/2 at ``k = (+-kappa0, 0)`` and
``|f|^2_{L^2} = L^2 sum_k |f_k|^2`` over the full spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.fft import irfft2, rfft2

__all__ = [
    "DimensionError",
    "DomainError",
    "GridSpec",
    "SpectralField",
    "PhysicalField",
    "transform",
    "forward",
    "inverse",
    "differentiate",
    "inv_laplacian",
    "jacobian",
    "project_low",
    "project_high",
    "zonal_split",
    "inner_product",
    "norm",
    "enforce_y_antisymmetry",
    "random_field",
    "shell_profile",
    "band_profile",
    "agmon_ratio",
    "zonal_agmon_ratio",
]


class DimensionError(ValueError):
    """Array shape or grid mismatch."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


@dataclass(frozen=True)
class GridSpec:
    """Square periodic grid of side ``L`` with ``n`` points per direction."""

    L: float
    n: int

    def __post_init__(self):
        if not (self.L > 0 and np.isfinite(self.L)):
            raise DomainError(f"L must be positive and finite, got {self.L}")
        if int(self.n) != self.n or self.n < 8 or self.n % 2:
            raise DomainError(f"n must be an even integer >= 8, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "L", float(self.L))

    @property
    def kappa0(self) -> float:
        return 2.0 * np.pi / self.L

    @property
    def area(self) -> float:
        return self.L * self.L

    @property
    def dx(self) -> float:
        return self.L / self.n

    @property
    def spectral_shape(self) -> tuple[int, int]:
        return (self.n, self.n // 2 + 1)

    @property
    def dealias_index(self) -> int:
        """Largest integer wavenumber index kept by the 2/3 rule."""
        return self.n // 3

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Collocation coordinates ``(X, Y)`` with ``Y`` in ``[-L/2, L/2)``."""
        j = np.arange(self.n)
        x = j * self.dx
        y = ((j + self.n // 2) % self.n - self.n // 2) * self.dx
        return np.meshgrid(x, y, indexing="xy")

    @property
    def wavenumbers(self) -> "Wavenumbers":
        return _wavenumbers(self)


@dataclass(frozen=True, eq=False)
class Wavenumbers:
    """Precomputed spectral multipliers for one grid (half-spectrum layout)."""

    lx: np.ndarray  # integer k_x index, shape (1, n//2+1)
    ly: np.ndarray  # integer k_y index, shape (n, 1)
    kx: np.ndarray
    ky: np.ndarray
    k2: np.ndarray
    kabs: np.ndarray
    inv_k2: np.ndarray  # 1/|k|^2 with 0 at the origin
    ikx: np.ndarray  # i k_x, Nyquist column zeroed
    iky: np.ndarray  # i k_y, Nyquist row zeroed
    dealias: np.ndarray  # bool mask, |l1|,|l2| <= n//3
    weight: np.ndarray  # multiplicity of each half-spectrum entry in the full sum
    l2: np.ndarray  # l1^2 + l2^2 as integers


@lru_cache(maxsize=32)
def _wavenumbers(grid: GridSpec) -> Wavenumbers:
    n = grid.n
    k0 = grid.kappa0
    lx = np.arange(n // 2 + 1)[None, :]
    ly = np.fft.fftfreq(n, 1.0 / n).astype(int)[:, None]
    # fftfreq puts the Nyquist row at -n/2; the sign is immaterial for even
    # multipliers and the row is zeroed for odd ones.
    kx = k0 * lx * np.ones((n, 1))
    ky = k0 * ly * np.ones((1, n // 2 + 1))
    l2 = lx**2 + ly**2
    k2 = k0 * k0 * l2
    inv_k2 = np.zeros_like(k2)
    inv_k2[l2 > 0] = 1.0 / k2[l2 > 0]
    ikx = 1j * kx
    ikx[:, n // 2] = 0.0
    iky = 1j * ky
    iky[n // 2, :] = 0.0
    m = grid.dealias_index
    dealias = (np.abs(lx) <= m) & (np.abs(ly) <= m)
    weight = np.full((1, n // 2 + 1), 2.0)
    weight[0, 0] = 1.0
    weight[0, n // 2] = 1.0
    weight = weight * np.ones((n, 1))
    arrays = dict(kx=kx, ky=ky, k2=k2, kabs=np.sqrt(k2), inv_k2=inv_k2,
                  ikx=ikx, iky=iky, dealias=dealias, weight=weight,
                  l2=l2 * np.ones((n, 1), dtype=int))
    for a in arrays.values():
        a.flags.writeable = False
    return Wavenumbers(lx=lx, ly=ly, **arrays)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Truncated Fourier coefficients of a real periodic scalar.

    Parameters
    ----------
    grid : GridSpec
    coeffs : ndarray, complex, shape ``grid.spectral_shape``
        Half-spectrum amplitudes. A copy is stored read-only.
    mean_zero : bool
        When set, the ``k = 0`` coefficient is forced to exactly zero.
    """

    grid: GridSpec
    coeffs: np.ndarray
    mean_zero: bool = False

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != self.grid.spectral_shape:
            raise DimensionError(
                f"coefficient shape {c.shape} does not match grid "
                f"{self.grid.spectral_shape}")
        c = np.array(c, copy=True)
        if self.mean_zero:
            c[0, 0] = 0.0
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "SpectralField":
        return cls(grid, np.zeros(grid.spectral_shape, complex), True)

    def _check(self, other: "SpectralField"):
        if not isinstance(other, SpectralField):
            return NotImplemented
        if other.grid != self.grid:
            raise DimensionError(f"grid mismatch: {self.grid} vs {other.grid}")

    def __add__(self, other):
        self._check(other)
        return SpectralField(self.grid, self.coeffs + other.coeffs,
                             self.mean_zero and other.mean_zero)

    def __sub__(self, other):
        self._check(other)
        return SpectralField(self.grid, self.coeffs - other.coeffs,
                             self.mean_zero and other.mean_zero)

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs, self.mean_zero)

    def __mul__(self, scalar):
        if not np.isscalar(scalar) or np.iscomplexobj(scalar):
            return NotImplemented
        return SpectralField(self.grid, float(scalar) * self.coeffs, self.mean_zero)

    __rmul__ = __mul__

    def full_spectrum(self) -> np.ndarray:
        """Logical ``n x n`` spectrum, ``[ky index, kx index]`` in FFT order."""
        n = self.grid.n
        full = np.empty((n, n), complex)
        full[:, : n // 2 + 1] = self.coeffs
        # f(-k) = conj f(k) fills the negative k_x half
        mirror = np.conj(self.coeffs[(-np.arange(n)) % n, :])
        full[:, n // 2 + 1:] = mirror[:, 1: n // 2][:, ::-1]
        return full

    def hermitian_defect(self) -> float:
        """max |f(-k) - conj f(k)| over the self-conjugate columns."""
        n = self.grid.n
        idx = (-np.arange(n)) % n
        defect = 0.0
        for col in (0, n // 2):
            c = self.coeffs[:, col]
            defect = max(defect, float(np.max(np.abs(c[idx] - np.conj(c)))))
        return defect

    def to_physical(self) -> "PhysicalField":
        return inverse(self)

    def norm(self) -> float:
        return norm(self)

    def is_zonal(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.coeffs[:, 1:]) <= tol))


@dataclass(frozen=True, eq=False)
class PhysicalField:
    """Real samples ``values[iy, ix]`` at the collocation points."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n, self.grid.n):
            raise DimensionError(
                f"values shape {v.shape} does not match grid n={self.grid.n}")
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def from_function(cls, grid: GridSpec, func: Callable) -> "PhysicalField":
        X, Y = grid.coords()
        return cls(grid, func(X, Y))


# ---------------------------------------------------------------------------
# transforms (raw array versions operate on trailing two axes)

def _fwd(values: np.ndarray) -> np.ndarray:
    return rfft2(values, axes=(-2, -1), norm="forward")


def _inv(coeffs: np.ndarray, n: int) -> np.ndarray:
    return irfft2(coeffs, s=(n, n), axes=(-2, -1), norm="forward")


def forward(f: PhysicalField, mean_zero: bool = False) -> SpectralField:
    """Physical samples to Fourier amplitudes."""
    return SpectralField(f.grid, _fwd(f.values), mean_zero)


def inverse(f: SpectralField) -> PhysicalField:
    return PhysicalField(f.grid, _inv(f.coeffs, f.grid.n))


def transform(f, direction: str | None = None):
    """Forward (physical -> spectral) or inverse transform.

    ``direction`` may be ``"forward"``/``"inverse"``; when omitted it is
    inferred from the type of ``f``.
    """
    if direction is None:
        direction = "forward" if isinstance(f, PhysicalField) else "inverse"
    if direction == "forward":
        if not isinstance(f, PhysicalField):
            raise TypeError("forward transform expects a PhysicalField")
        return forward(f)
    if direction == "inverse":
        if not isinstance(f, SpectralField):
            raise TypeError("inverse transform expects a SpectralField")
        return inverse(f)
    raise ValueError(f"unknown direction {direction!r}")


# ---------------------------------------------------------------------------
# spectral calculus

def _has_mean(f: SpectralField) -> bool:
    return (not f.mean_zero) and f.coeffs[0, 0] != 0


def _power_multiplier(grid: GridSpec, s: float) -> np.ndarray:
    wn = grid.wavenumbers
    if s == 0:
        return np.ones_like(wn.k2)
    mult = np.zeros_like(wn.k2)
    nz = wn.l2 > 0
    mult[nz] = wn.kabs[nz] ** s
    return mult


def differentiate(f: SpectralField, op) -> SpectralField:
    """Apply ``"dx"``, ``"dy"``, ``"laplacian"`` or ``|k|^s`` (``op`` real).

    The fractional operator ``nabla^s`` acts as the Fourier multiplier
    ``|k|^s``; negative ``s`` requires a mean-zero field.
    """
    wn = f.grid.wavenumbers
    if op == "dx":
        return SpectralField(f.grid, wn.ikx * f.coeffs, True)
    if op == "dy":
        return SpectralField(f.grid, wn.iky * f.coeffs, True)
    if op in ("laplacian", "lap"):
        return SpectralField(f.grid, -wn.k2 * f.coeffs, True)
    if isinstance(op, str):
        raise ValueError(f"unknown differential operator {op!r}")
    s = float(op)
    if s < 0 and _has_mean(f):
        raise DomainError("negative power of nabla applied to a field with nonzero mean")
    return SpectralField(f.grid, _power_multiplier(f.grid, s) * f.coeffs,
                         f.mean_zero or s > 0)


def inv_laplacian(omega: SpectralField) -> SpectralField:
    """Mean-zero solution of ``Laplacian psi = omega``."""
    if _has_mean(omega):
        raise DomainError("inverse Laplacian needs a mean-zero field")
    wn = omega.grid.wavenumbers
    return SpectralField(omega.grid, -wn.inv_k2 * omega.coeffs, True)


def _jacobian_arrays(psi: np.ndarray, omega: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Dealiased ``dpsi/dx domega/dy - domega/dx dpsi/dy`` on raw arrays."""
    wn = grid.wavenumbers
    n = grid.n
    psi = psi * wn.dealias
    omega = omega * wn.dealias
    stack = np.stack([wn.ikx * psi, wn.iky * psi, wn.ikx * omega, wn.iky * omega])
    px, py, ox, oy = _inv(stack, n)
    out = _fwd(px * oy - ox * py) * wn.dealias
    out[..., 0, 0] = 0.0
    return out


def jacobian(psi: SpectralField, omega: SpectralField) -> SpectralField:
    """Dealiased pseudospectral Jacobian ``d(psi, omega)``.

    Both inputs are truncated to the 2/3-rule band before the products are
    formed, so the result equals the exact convolution restricted to that band.
    """
    if psi.grid != omega.grid:
        raise DimensionError(f"grid mismatch: {psi.grid} vs {omega.grid}")
    return SpectralField(psi.grid, _jacobian_arrays(psi.coeffs, omega.coeffs, psi.grid), True)


def _low_mask(grid: GridSpec, kappa: float) -> np.ndarray:
    if kappa < 0:
        raise DomainError(f"kappa must be nonnegative, got {kappa}")
    r2 = (kappa / grid.kappa0) ** 2
    return grid.wavenumbers.l2 <= r2 * (1 + 1e-12)


def project_low(f: SpectralField, kappa: float) -> SpectralField:
    """Keep modes with ``|k| <= kappa``."""
    return SpectralField(f.grid, f.coeffs * _low_mask(f.grid, kappa), f.mean_zero)


def project_high(f: SpectralField, kappa: float) -> SpectralField:
    """Complement of :func:`project_low`: modes with ``|k| > kappa``."""
    return SpectralField(f.grid, f.coeffs * ~_low_mask(f.grid, kappa), f.mean_zero)


def zonal_split(f: SpectralField) -> tuple[SpectralField, SpectralField]:
    """Return ``(fbar, ftilde)``: x-average and its complement."""
    zon = np.zeros_like(f.coeffs)
    zon[:, 0] = f.coeffs[:, 0]
    return (SpectralField(f.grid, zon, f.mean_zero),
            SpectralField(f.grid, f.coeffs - zon, f.mean_zero))


def _inner_arrays(a: np.ndarray, b: np.ndarray, grid: GridSpec) -> float:
    wn = grid.wavenumbers
    return grid.area * float(np.sum(wn.weight * (a * np.conj(b)).real))


def inner_product(f: SpectralField, g: SpectralField) -> float:
    """L2 inner product over the domain, via Parseval."""
    if f.grid != g.grid:
        raise DimensionError(f"grid mismatch: {f.grid} vs {g.grid}")
    return _inner_arrays(f.coeffs, g.coeffs, f.grid)


def norm(f: SpectralField, s: float = 0.0) -> float:
    """``|nabla^s f|_{L^2}``."""
    c = f.coeffs if s == 0 else _power_multiplier(f.grid, s) * f.coeffs
    return float(np.sqrt(max(_inner_arrays(c, c, f.grid), 0.0)))


def _reflect_y(c: np.ndarray) -> np.ndarray:
    n = c.shape[-2]
    return c[..., (-np.arange(n)) % n, :]


def enforce_y_antisymmetry(f: SpectralField) -> SpectralField:
    """Odd part in ``y``: ``(f(x, y) - f(x, -y)) / 2``."""
    return SpectralField(f.grid, 0.5 * (f.coeffs - _reflect_y(f.coeffs)), f.mean_zero)


# ---------------------------------------------------------------------------
# random inputs

def shell_profile(k: float, width: float = 0.5) -> Callable[[np.ndarray], np.ndarray]:
    """Amplitude 1 on lattice wavenumbers with ``||k| - k| <= width``.

    ``k`` and ``width`` are in units of ``kappa0``.
    """
    def profile(kk):
        return (np.abs(kk - k) <= width).astype(float)
    return profile


def band_profile(kmin: float, kmax: float, slope: float = 0.0) -> Callable[[np.ndarray], np.ndarray]:
    """Amplitude ``(|k|)^slope`` for ``kmin <= |k| <= kmax`` (units of kappa0)."""
    def profile(kk):
        inside = (kk >= kmin - 1e-12) & (kk <= kmax + 1e-12)
        out = np.zeros_like(kk, dtype=float)
        out[inside] = kk[inside] ** slope
        return out
    return profile


def random_field(seed: int, profile: Callable[[np.ndarray], np.ndarray], grid: GridSpec,
                 y_antisymmetric: bool = False, dealiased: bool = True) -> SpectralField:
    """Deterministic random real field with prescribed modal amplitudes.

    Each half-spectrum coefficient gets modulus ``profile(|k|/kappa0)`` and a
    phase ``2*pi*U``, with ``U`` drawn from a Philox counter-based generator
    keyed by ``seed``: one uniform per half-spectrum entry, consumed in C order
    of the ``(n, n//2+1)`` array. The ``k_x = 0`` column is then made
    Hermitian by copying the conjugate of its ``k_y > 0`` half onto ``k_y < 0``.
    The mean and the Nyquist modes are zero; with ``dealiased`` the support is
    further limited to the 2/3-rule band.
    """
    n = grid.n
    wn = grid.wavenumbers
    rng = np.random.Generator(np.random.Philox(key=int(seed) & (2**64 - 1)))
    phase = 2.0 * np.pi * rng.random(grid.spectral_shape)
    amp = np.asarray(profile(np.sqrt(wn.l2.astype(float))), dtype=float)
    amp = np.broadcast_to(amp, grid.spectral_shape).copy()
    amp[0, 0] = 0.0
    amp[n // 2, :] = 0.0
    amp[:, n // 2] = 0.0
    if dealiased:
        amp[~wn.dealias] = 0.0
    c = amp * np.exp(1j * phase)
    half = np.arange(1, n // 2)
    c[n - half, 0] = np.conj(c[half, 0])
    out = SpectralField(grid, c, True)
    if y_antisymmetric:
        out = enforce_y_antisymmetry(out)
    return out


# ---------------------------------------------------------------------------
# interpolation-type inequalities (empirical constants)

def _sup_norm(f: SpectralField, refine: int = 2) -> float:
    """Max |f| on a grid refined ``refine`` times by zero padding.

    Nyquist modes are dropped (they are zero for every field built here).
    """
    n = f.grid.n
    m = refine * n
    padded = np.zeros((m, m // 2 + 1), complex)
    h = n // 2
    padded[:h, :h] = f.coeffs[:h, :h]
    padded[m - h + 1:, :h] = f.coeffs[h + 1:, :h]
    return float(np.max(np.abs(irfft2(padded, s=(m, m), norm="forward"))))


def agmon_ratio(u: SpectralField) -> float:
    """``|u|_inf / (|u|^{1/2} |Laplacian u|^{1/2})``."""
    den = np.sqrt(norm(u) * norm(u, 2.0))
    return _sup_norm(u) / den if den > 0 else 0.0


def zonal_agmon_ratio(v: SpectralField) -> float:
    """``|v|_inf / (kappa0^{1/2} |v|^{1/2} |grad v|^{1/2})`` for zonal ``v``."""
    den = np.sqrt(v.grid.kappa0 * norm(v) * norm(v, 1.0))
    return _sup_norm(v) / den if den > 0 else 0.0
