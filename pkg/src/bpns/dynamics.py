"""Time integration of the beta-plane vorticity equation

    d_t omega + d(psi, omega) + (kappa0/eps) d_x psi = mu Lap omega + f,

with ``psi = Lap^{-1} omega``. The linear part (viscosity and the beta term)
is diagonal in Fourier space and is propagated exactly; the advective term is
treated with the classical fourth-order Runge-Kutta method in the
integrating-factor (Lawson) form.

The low-level stepper works on raw half-spectrum arrays with arbitrary
leading batch axes so that several trajectories (master/slave pairs) share
the FFT calls; :func:`step` and :func:`integrate` wrap it for
:class:`SimState` objects.
"""

from __future__ import annotations

import math
import warnings
from functools import lru_cache
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .spectral import (
    DomainError,
    GridSpec,
    SpectralField,
    _fwd,
    _inner_arrays,
    _inv,
    _reflect_y,
    band_profile,
    norm,
    random_field,
)

__all__ = [
    "BlowUpError",
    "PhysicalParams",
    "SimState",
    "IntegratorConfig",
    "IFRK4",
    "Observer",
    "DiagRecord",
    "linear_symbol",
    "linear_operator",
    "nonlinear_rhs",
    "step",
    "integrate",
    "diagnostics",
    "exp_weighted_integral",
    "suggest_dt",
    "initial_vorticity",
    "Stepper",
    "advection",
]


class BlowUpError(FloatingPointError):
    """Non-finite coefficients appeared during time stepping."""

    def __init__(self, step_index: int, t: float, max_abs: float, label: str | None = None):
        self.step_index = step_index
        self.t = t
        self.max_abs = max_abs
        self.label = label
        where = f" in run {label!r}" if label else ""
        super().__init__(
            f"blow-up{where} at step {step_index} (t={t:.6g}): max |omega_k| = {max_abs!r}")


@dataclass(frozen=True)
class PhysicalParams:
    """Viscosity ``mu`` (length^2), rotation parameter ``epsilon`` and ``kappa0``."""

    mu: float
    epsilon: float
    kappa0: float

    def __post_init__(self):
        if not self.mu > 0:
            raise DomainError(f"mu must be positive, got {self.mu}")
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon}")
        if not self.kappa0 > 0:
            raise DomainError(f"kappa0 must be positive, got {self.kappa0}")
        if self.nu0 > 1:
            warnings.warn(f"nu0 = mu*kappa0^2 = {self.nu0:g} exceeds 1", stacklevel=3)

    @classmethod
    def for_grid(cls, grid: GridSpec, mu: float, epsilon: float) -> "PhysicalParams":
        return cls(mu=mu, epsilon=epsilon, kappa0=grid.kappa0)

    @property
    def nu0(self) -> float:
        return self.mu * self.kappa0**2

    @property
    def beta(self) -> float:
        """Coefficient ``kappa0/epsilon`` of ``d_x psi``."""
        return self.kappa0 / self.epsilon

    def with_epsilon(self, epsilon: float) -> "PhysicalParams":
        return PhysicalParams(self.mu, epsilon, self.kappa0)


@dataclass(frozen=True)
class SimState:
    t: float
    omega: SpectralField

    def __post_init__(self):
        if not self.omega.mean_zero:
            raise DomainError("vorticity state must be flagged mean-zero")


@dataclass(frozen=True)
class IntegratorConfig:
    """``dt=None`` selects the automatic step of :func:`suggest_dt`."""

    dt: float | None
    scheme: str = "ifrk4"
    enforce_symmetry: bool = False
    dealias: bool = True
    cfl: float = 0.5

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise DomainError(f"dt must be positive, got {self.dt}")
        if self.scheme != "ifrk4":
            raise ValueError(f"unsupported scheme {self.scheme!r}")
        if not self.dealias:
            raise ValueError("dealiasing cannot be disabled")


def linear_symbol(k: Sequence[float], params: PhysicalParams) -> complex:
    """Fourier symbol of ``mu Lap omega - (kappa0/eps) d_x Lap^{-1} omega``."""
    kx, ky = float(k[0]), float(k[1])
    k2 = kx * kx + ky * ky
    if k2 == 0:
        raise DomainError("linear symbol undefined at k = 0")
    return complex(-params.mu * k2, params.beta * kx / k2)


def linear_operator(grid: GridSpec, params: PhysicalParams) -> np.ndarray:
    """Array of :func:`linear_symbol` over the half spectrum (0 at k = 0)."""
    wn = grid.wavenumbers
    return -params.mu * wn.k2 + 1j * params.beta * wn.kx * wn.inv_k2


@lru_cache(maxsize=32)
def _flux_multipliers(grid: GridSpec):
    wn = grid.wavenumbers
    m = wn.dealias.astype(float)
    # velocity from vorticity: u = -d_y psi, v = d_x psi, psi = -omega/|k|^2
    to_u = m * wn.iky * wn.inv_k2
    to_v = -m * wn.ikx * wn.inv_k2
    # -(u.grad omega) = -[d_x d_y (v^2 - u^2) + (d_xx - d_yy)(u v)]
    from_a = m * (wn.kx * wn.ky)
    from_b = m * (wn.kx**2 - wn.ky**2)
    return to_u, to_v, from_a, from_b


def advection(omega: np.ndarray, grid: GridSpec) -> np.ndarray:
    """``d(psi, omega)`` with ``psi = Lap^{-1} omega`` on raw arrays.

    Uses the flux form ``d_x d_y (v^2 - u^2) + (d_xx - d_yy)(u v)``, which for
    2/3-truncated inputs is the same truncated convolution as the direct
    Jacobian but needs four transforms instead of five.
    """
    to_u, to_v, from_a, from_b = _flux_multipliers(grid)
    u, v = _inv(np.stack([to_u * omega, to_v * omega]), grid.n)
    fa, fb = _fwd(np.stack([v * v - u * u, u * v]))
    return -(from_a * fa + from_b * fb)


def nonlinear_rhs(omega: np.ndarray, forcing: np.ndarray | None, grid: GridSpec) -> np.ndarray:
    """``-d(psi, omega) + f`` for raw arrays."""
    out = -advection(omega, grid)
    if forcing is not None:
        out += forcing
    return out


def _hermitize(c: np.ndarray) -> None:
    """In-place: make the k_x = 0 column exactly Hermitian and zero the mean."""
    col = c[..., :, 0]
    n = col.shape[-1]
    col[...] = 0.5 * (col + np.conj(col[..., (-np.arange(n)) % n]))
    c[..., 0, 0] = 0.0


class IFRK4:
    """Integrating-factor RK4 for ``u' = Lu + N(u)`` with diagonal ``L``.

    Propagators ``exp(L h)`` and ``exp(L h/2)`` are cached per step size.
    """

    def __init__(self, linear: np.ndarray):
        self.linear = linear
        self._cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    def propagators(self, h: float):
        p = self._cache.get(h)
        if p is None:
            if len(self._cache) > 16:
                self._cache.clear()
            p = (np.exp(self.linear * h), np.exp(self.linear * (0.5 * h)))
            self._cache[h] = p
        return p

    def step(self, u: np.ndarray, nonlinear: Callable[[np.ndarray], np.ndarray], h: float) -> np.ndarray:
        E, Eh = self.propagators(h)
        a = h * nonlinear(u)
        Eu = Eh * u
        b = h * nonlinear(Eu + 0.5 * Eh * a)
        c = h * nonlinear(Eu + 0.5 * b)
        d = h * nonlinear(E * u + Eh * c)
        return E * u + (E * a + 2.0 * Eh * (b + c) + d) / 6.0


class Stepper:
    """Raw-array stepper for one physical configuration.

    Parameters
    ----------
    grid : the domain
    params : physical parameters, or a sequence with one entry per leading
        batch index (stacked linear propagators)
    forcing : SpectralField or None
    enforce_symmetry : project onto y-odd fields after every step
    """

    def __init__(self, grid: GridSpec, params: PhysicalParams | Sequence[PhysicalParams],
                 forcing: SpectralField | None, enforce_symmetry: bool = False):
        self.grid = grid
        self.params = params
        self.forcing = None if forcing is None else np.asarray(forcing.coeffs)
        self.enforce_symmetry = enforce_symmetry
        if isinstance(params, PhysicalParams):
            linear = linear_operator(grid, params)
        else:
            # one parameter set per leading batch entry
            linear = np.stack([linear_operator(grid, p) for p in params])
        self.scheme = IFRK4(linear)
        self.max_wave_frequency = float(np.max(np.abs(self.scheme.linear.imag)))

    def rhs(self, u: np.ndarray) -> np.ndarray:
        return nonlinear_rhs(u, self.forcing, self.grid)

    def advance(self, u: np.ndarray, h: float, rhs=None) -> np.ndarray:
        u = self.scheme.step(u, rhs or self.rhs, h)
        _hermitize(u)
        if self.enforce_symmetry:
            u = 0.5 * (u - _reflect_y(u))
        return u


def _check_finite(u: np.ndarray, step_index: int, t: float, label=None):
    if not np.isfinite(u).all():
        mag = np.abs(u)
        finite = mag[np.isfinite(mag)]
        m = float(finite.max()) if finite.size else float("nan")
        raise BlowUpError(step_index, t, m, label)


def _warn_dt(stepper: Stepper, dt: float):
    if dt * stepper.max_wave_frequency > 0.5:
        warnings.warn(
            f"dt={dt:g} under-resolves the fastest Rossby frequency "
            f"{stepper.max_wave_frequency:g} (dt*omega > 0.5)", stacklevel=3)


def step(state: SimState, forcing: SpectralField | None, params: PhysicalParams,
         cfg: IntegratorConfig) -> SimState:
    """Advance ``state`` by one step of size ``cfg.dt``."""
    grid = state.omega.grid
    stepper = Stepper(grid, params, forcing, cfg.enforce_symmetry)
    dt = cfg.dt if cfg.dt is not None else suggest_dt(state.omega, params, cfg.cfl)
    _warn_dt(stepper, dt)
    u = stepper.advance(np.array(state.omega.coeffs), dt)
    _check_finite(u, 1, state.t + dt)
    return SimState(state.t + dt, SpectralField(grid, u, True))


def suggest_dt(omega: SpectralField, params: PhysicalParams, cfl: float = 0.5) -> float:
    """``min(0.5/max|Im symbol|, cfl*dx/max|v|)``."""
    grid = omega.grid
    wn = grid.wavenumbers
    wave = float(np.max(np.abs(params.beta * wn.kx * wn.inv_k2)))
    dt = 0.5 / wave if wave > 0 else np.inf
    psi = -wn.inv_k2 * omega.coeffs
    u, v = _inv(np.stack([-wn.iky * psi, wn.ikx * psi]), grid.n)
    vmax = float(np.max(np.hypot(u, v)))
    if vmax > 0:
        dt = min(dt, cfl * grid.dx / vmax)
    if not np.isfinite(dt):
        dt = 0.1 / params.nu0
    return dt


@dataclass
class Observer:
    """Callback ``fn(state)`` invoked every ``cadence`` time units."""

    cadence: float
    fn: Callable[[SimState], None]


def _time_grid_steps(t: float, target: float, dt: float):
    """Yield step sizes from ``t`` to ``target``: full ``dt`` then a shortened last step."""
    remaining = target - t
    nfull = math.floor(remaining / dt * (1 + 1e-12))
    for _ in range(nfull):
        yield dt
    last = remaining - nfull * dt
    if last > 1e-12 * dt:
        yield last


def integrate(state: SimState, forcing: SpectralField | None, params: PhysicalParams,
              cfg: IntegratorConfig, T_end: float,
              observers: Iterable[Observer] = (), label: str | None = None) -> SimState:
    """Step from ``state.t`` to ``T_end``.

    Observers are called on the initial state and at every ``state.t +
    j*cadence <= T_end``; the step is shortened to land exactly on each
    observation time and on ``T_end``. With ``cfg.dt=None`` the step is
    recomputed by :func:`suggest_dt` at every observation.
    """
    if T_end < state.t:
        raise DomainError(f"T_end={T_end} precedes state time {state.t}")
    grid = state.omega.grid
    observers = list(observers)
    stepper = Stepper(grid, params, forcing, cfg.enforce_symmetry)
    t0 = state.t
    for ob in observers:
        if not ob.cadence > 0:
            raise DomainError("observer cadence must be positive")
        ob.fn(state)
    if T_end == state.t:
        return state
    ticks = [1 for _ in observers]
    u = np.array(state.omega.coeffs)
    t = t0
    nstep = 0
    while t < T_end:
        dt = cfg.dt if cfg.dt is not None else suggest_dt(SpectralField(grid, u, True), params, cfg.cfl)
        _warn_dt(stepper, dt)
        next_obs = [t0 + j * ob.cadence for j, ob in zip(ticks, observers)]
        target = min([T_end] + [x for x in next_obs if x <= T_end])
        for h in _time_grid_steps(t, target, dt):
            u = stepper.advance(u, h)
            nstep += 1
            _check_finite(u, nstep, t + h, label)
            t += h
        t = target
        for i, ob in enumerate(observers):
            if next_obs[i] == target:
                ob.fn(SimState(t, SpectralField(grid, u, True)))
                ticks[i] += 1
        if target == T_end:
            break
    return SimState(T_end, SpectralField(grid, u, True))


@dataclass(frozen=True)
class DiagRecord:
    t: float
    energy: float
    enstrophy: float
    palinstrophy: float
    zonal_enstrophy: float
    nonzonal_enstrophy: float
    highpass_zonal_enstrophy: float
    beta_flux: float

    def as_dict(self) -> dict:
        return asdict(self)


def diagnostics(state: SimState, params: PhysicalParams, kappa_f: float) -> DiagRecord:
    """Energy/enstrophy budget quantities of one state.

    ``highpass_zonal_enstrophy`` is ``|(1 - P_kappa_f) omega_bar|^2 / 2``;
    ``beta_flux`` is ``(d_x psi, omega)``, which vanishes identically.
    """
    grid = state.omega.grid
    wn = grid.wavenumbers
    w = state.omega.coeffs
    psi = -wn.inv_k2 * w
    ip = lambda a, b: _inner_arrays(a, b, grid)  # noqa: E731
    zonal = np.zeros_like(w)
    zonal[:, 0] = w[:, 0]
    high = zonal * (wn.l2 > (kappa_f / grid.kappa0) ** 2 * (1 + 1e-12))
    nonzonal = w - zonal
    return DiagRecord(
        t=state.t,
        energy=0.5 * ip(wn.k2 * psi, psi),
        enstrophy=0.5 * ip(w, w),
        palinstrophy=0.5 * ip(wn.k2 * w, w),
        zonal_enstrophy=0.5 * ip(zonal, zonal),
        nonzonal_enstrophy=0.5 * ip(nonzonal, nonzonal),
        highpass_zonal_enstrophy=0.5 * ip(high, high),
        beta_flux=ip(wn.ikx * psi, w),
    )


def exp_weighted_integral(accumulator: float, new_value: float, dt: float, nu0: float) -> float:
    """Rectangle-rule update of ``I(t) = int_0^t u(s) exp(nu0 (s - t)) ds``."""
    if not dt > 0:
        raise DomainError("dt must be positive")
    return accumulator * math.exp(-nu0 * dt) + new_value * dt


def initial_vorticity(grid: GridSpec, seed: int, amplitude: float, kmin: float = 1.0,
                      kmax: float = 8.0, y_antisymmetric: bool = True) -> SpectralField:
    """Random band-limited vorticity with ``|omega|_{L^2} = amplitude``."""
    w = random_field(seed, band_profile(kmin, kmax), grid, y_antisymmetric=y_antisymmetric)
    size = norm(w)
    if size == 0:
        raise DomainError("initial-condition band contains no admissible modes")
    return (amplitude / size) * w
