"""Master/slave synchronization experiments.

A master run and one or more slave runs share grid, forcing and parameters
and start from different initial vorticities.  Both evolve freely until
``burn_in``; afterwards each slave is coupled to the master through its low
Fourier modes (replacement or nudging) or through nodal values (nudging with a
bilinear interpolant).  Convergence of ``delta omega = omega - omega_slave`` is
judged relative to its size at ``burn_in``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .dynamics import (
    BlowUpError,
    IntegratorConfig,
    PhysicalParams,
    Stepper,
    _time_grid_steps,
    _warn_dt,
    initial_vorticity,
    suggest_dt,
)
from .spectral import (
    DomainError,
    GridSpec,
    PhysicalField,
    SpectralField,
    _fwd,
    _inv,
    _jacobian_arrays,
    _low_mask,
    _sup_norm,
    band_profile,
    norm,
    random_field,
)
from .thresholds import Constants, grashof_set, m0

__all__ = [
    "ModesSyncConfig",
    "NodesSyncConfig",
    "SyncResult",
    "NodeLattice",
    "run_modes_sync",
    "run_modes_sweep",
    "run_nodes_sync",
    "eta",
    "nodal_inequality_check",
    "threshold_search",
    "SearchResult",
    "RegimeTooDissipative",
    "InconclusiveSearch",
    "zonalization_check",
    "delta_consistency",
    "eddy_turnover_time",
]

CONVERGED = "converged"
NOT_CONVERGED = "not_converged"


class RegimeTooDissipative(RuntimeError):
    """The uncoupled control pair already synchronizes."""

    def __init__(self, control: "SyncResult"):
        self.control = control
        super().__init__(
            "regime too dissipative: uncoupled control converged "
            f"(|dw(T)|/|dw(burn_in)| = {control.ratio:.3e})")


class InconclusiveSearch(RuntimeError):
    """Verdicts are not monotone in the sweep variable (or nothing converged)."""

    def __init__(self, message: str, table: dict):
        self.table = table
        super().__init__(f"{message}; verdicts: {table}")


def _check_tol(tc, td):
    if not (0 < tc < 1 and 0 < td < 1):
        raise DomainError(f"tolerances must lie in (0, 1), got {tc}, {td}")


@dataclass(frozen=True)
class ModesSyncConfig:
    """Low-mode coupling experiment.

    ``kappa`` is an absolute wavenumber; modes with ``|k| <= kappa`` are
    coupled.  ``coupling`` is ``"replace"`` or ``"nudge"`` (gain ``lam``).
    """

    kappa: float
    T: float
    burn_in: float
    coupling: str = "replace"
    lam: float = 1.0
    seeds: tuple[int, int] = (1, 2)
    tol_converged: float = 1e-6
    tol_diverged: float = 1e-1
    cadence: float | None = None
    ic_amplitude: float = 1.0
    ic_band: tuple[float, float] = (1.0, 8.0)
    ic_y_antisymmetric: bool = True

    def __post_init__(self):
        if self.kappa < 0:
            raise DomainError(f"kappa must be nonnegative, got {self.kappa}")
        if not self.T > self.burn_in >= 0:
            raise DomainError(f"need T > burn_in >= 0, got T={self.T}, burn_in={self.burn_in}")
        if self.coupling not in ("replace", "nudge"):
            raise DomainError(f"coupling must be 'replace' or 'nudge', got {self.coupling!r}")
        if self.coupling == "nudge" and not self.lam >= 0:
            raise DomainError(f"nudging gain must be nonnegative, got {self.lam}")
        if self.cadence is not None and not self.cadence > 0:
            raise DomainError("cadence must be positive")
        _check_tol(self.tol_converged, self.tol_diverged)


@dataclass(frozen=True)
class NodesSyncConfig:
    """Nodal nudging on a regular ``sqrt(N) x sqrt(N)`` lattice with gain ``lam``."""

    N: int
    lam: float
    T: float
    burn_in: float
    seeds: tuple[int, int] = (1, 2)
    tol_converged: float = 1e-6
    tol_diverged: float = 1e-1
    cadence: float | None = None
    ic_amplitude: float = 1.0
    ic_band: tuple[float, float] = (1.0, 8.0)
    ic_y_antisymmetric: bool = True

    def __post_init__(self):
        m = math.isqrt(self.N) if self.N > 0 else 0
        if self.N <= 0 or m * m != self.N:
            raise DomainError(f"N must be a positive perfect square, got {self.N}")
        if not self.lam >= 0:
            raise DomainError(f"lam must be nonnegative, got {self.lam}")
        if not self.T > self.burn_in >= 0:
            raise DomainError(f"need T > burn_in >= 0, got T={self.T}, burn_in={self.burn_in}")
        if self.cadence is not None and not self.cadence > 0:
            raise DomainError("cadence must be positive")
        _check_tol(self.tol_converged, self.tol_diverged)


@dataclass
class SyncResult:
    """Time series and verdict of one synchronization experiment.

    ``observed`` is ``|P_kappa delta omega|`` for mode coupling and
    ``eta(grad delta psi)`` for nodal coupling.
    """

    kind: str
    coupling: str
    parameter: float
    t: np.ndarray
    delta: np.ndarray
    observed: np.ndarray
    energy_master: np.ndarray
    energy_slave: np.ndarray
    burn_in: float
    delta_burn_in: float
    delta_final: float
    verdict: str
    decay_rate: float
    tol_converged: float
    tol_diverged: float

    @property
    def ratio(self) -> float:
        """``|dw(T)| / |dw(burn_in)|`` (0 when both vanish)."""
        if self.delta_burn_in == 0:
            return 0.0 if self.delta_final == 0 else math.inf
        return self.delta_final / self.delta_burn_in

    @property
    def converged(self) -> bool:
        return self.verdict == CONVERGED

    @property
    def stays_apart(self) -> bool:
        """``|dw(T)|`` above ``tol_diverged`` times its burn-in value."""
        return self.delta_final > self.tol_diverged * self.delta_burn_in

    def records(self) -> list[dict]:
        obs = "P_kappa_delta" if self.kind == "modes" else "eta_grad_delta_psi"
        return [
            {"t": float(t), "delta": float(d), obs: float(o),
             "energy_master": float(em), "energy_slave": float(es)}
            for t, d, o, em, es in zip(self.t, self.delta, self.observed,
                                       self.energy_master, self.energy_slave)
        ]

    def summary(self) -> dict:
        return {
            "kind": self.kind, "coupling": self.coupling, "parameter": self.parameter,
            "verdict": self.verdict, "decay_rate": self.decay_rate,
            "delta_burn_in": self.delta_burn_in, "delta_final": self.delta_final,
            "ratio": self.ratio, "stays_apart": self.stays_apart,
        }


def _norms(U: np.ndarray, grid: GridSpec) -> np.ndarray:
    w = grid.wavenumbers.weight
    return np.sqrt(grid.area * np.sum(w * (U.real**2 + U.imag**2), axis=(-2, -1)))


def _energies(U: np.ndarray, grid: GridSpec) -> np.ndarray:
    wn = grid.wavenumbers
    return 0.5 * grid.area * np.sum(wn.weight * wn.inv_k2 * (U.real**2 + U.imag**2), axis=(-2, -1))


def _observation_times(T: float, cadence: float, burn_in: float) -> list[float]:
    """Ticks ``j*cadence`` in ``[0, T]`` plus ``burn_in`` and ``T`` themselves."""
    tol = 1e-9 * cadence
    n = math.floor(T / cadence * (1 + 1e-12))
    ticks = [j * cadence for j in range(n + 1)]
    ticks = [x for x in ticks if abs(x - burn_in) > tol and abs(x - T) > tol]
    return sorted(set(ticks + [float(burn_in), float(T)]))


def _fit_decay(t: np.ndarray, d: np.ndarray, burn_in: float) -> float:
    sel = (t >= burn_in) & (d > 0) & np.isfinite(d)
    if sel.sum() < 2:
        return math.nan
    return float(np.polyfit(t[sel], np.log(d[sel]), 1)[0])


def _blowup_label(U: np.ndarray, labels: Sequence[str]) -> str:
    bad = ~np.isfinite(U).reshape(U.shape[0], -1).all(axis=1)
    return ",".join(lab for lab, b in zip(labels, bad) if b) or labels[0]


def _lockstep(stepper: Stepper, U: np.ndarray, times: Sequence[float], integrator: IntegratorConfig,
              params: PhysicalParams, couple: Callable[[np.ndarray, float], np.ndarray] | None,
              couple_from: float, observe: Callable[[float, np.ndarray], None],
              labels: Sequence[str], rhs=None) -> np.ndarray:
    """March the batch ``U`` through ``times``, coupling on steps starting at ``t >= couple_from``."""
    grid = stepper.grid
    t = times[0]
    observe(t, U)
    nstep = 0
    for target in times[1:]:
        if integrator.dt is not None:
            dt = integrator.dt
        else:
            dt = min(suggest_dt(SpectralField(grid, U[i], True), params, integrator.cfl)
                     for i in range(U.shape[0]))
        _warn_dt(stepper, dt)
        for h in _time_grid_steps(t, target, dt):
            coupled = couple is not None and t >= couple_from
            U = stepper.advance(U, h, rhs)
            if coupled:
                U = couple(U, h)
            nstep += 1
            t += h
            if not np.isfinite(U).all():
                mag = np.abs(U)
                finite = mag[np.isfinite(mag)]
                raise BlowUpError(nstep, t, float(finite.max()) if finite.size else math.nan,
                                  _blowup_label(U, labels))
        t = target
        observe(t, U)
    return U


def _initial_pair(grid, seeds, amplitude, band, symmetric, initial):
    if initial is not None:
        a, b = initial
        return np.array(a.coeffs), np.array(b.coeffs)
    a = initial_vorticity(grid, seeds[0], amplitude, *band, y_antisymmetric=symmetric)
    b = initial_vorticity(grid, seeds[1], amplitude, *band, y_antisymmetric=symmetric)
    return np.array(a.coeffs), np.array(b.coeffs)


def _verdict(delta_b: float, delta_T: float, tol: float) -> str:
    return CONVERGED if delta_T <= tol * delta_b else NOT_CONVERGED


def _result(kind, coupling, parameter, cfg, t, d, o, em, es):
    t, d = np.asarray(t), np.asarray(d)
    ib = int(np.argmin(np.abs(t - cfg.burn_in)))
    db, dT = float(d[ib]), float(d[-1])
    return SyncResult(
        kind=kind, coupling=coupling, parameter=float(parameter), t=t, delta=d,
        observed=np.asarray(o), energy_master=np.asarray(em), energy_slave=np.asarray(es),
        burn_in=cfg.burn_in, delta_burn_in=db, delta_final=dT,
        verdict=_verdict(db, dT, cfg.tol_converged), decay_rate=_fit_decay(t, d, cfg.burn_in),
        tol_converged=cfg.tol_converged, tol_diverged=cfg.tol_diverged)


def run_modes_sweep(cfgs: Sequence[ModesSyncConfig], forcing: SpectralField | None,
                    params: PhysicalParams, integrator: IntegratorConfig,
                    initial: tuple[SpectralField, SpectralField] | None = None,
                    grid: GridSpec | None = None) -> list[SyncResult]:
    """Run several mode-coupled slaves against one shared master in lockstep.

    All configurations must agree on ``T``, ``burn_in``, seeds, cadence and
    initial-condition settings; they may differ in ``kappa``, coupling and gain.
    Every slave starts from the same initial vorticity, so each result is
    identical to a separate :func:`run_modes_sync` call.
    """
    cfgs = list(cfgs)
    if not cfgs:
        return []
    base = cfgs[0]
    shared = ("T", "burn_in", "seeds", "cadence", "ic_amplitude", "ic_band", "ic_y_antisymmetric")
    for c in cfgs[1:]:
        for name in shared:
            if getattr(c, name) != getattr(base, name):
                raise ValueError(f"configurations differ in shared field {name!r}")
    if grid is None:
        if forcing is not None:
            grid = forcing.grid
        elif initial is not None:
            grid = initial[0].grid
        else:
            raise ValueError("grid is required when neither forcing nor initial data is given")
    w_m, w_s = _initial_pair(grid, base.seeds, base.ic_amplitude, base.ic_band,
                             base.ic_y_antisymmetric, initial)
    k = len(cfgs)
    U = np.stack([w_m] + [w_s] * k)
    masks = np.stack([_low_mask(grid, c.kappa).astype(float) for c in cfgs])
    replace_sel = np.array([c.coupling == "replace" for c in cfgs])
    gains = np.array([c.lam if c.coupling == "nudge" else 0.0 for c in cfgs])[:, None, None]

    def couple(U, h):
        # replacement copies the master's coefficients exactly; nudging relaxes toward them
        nudged = U[1:] + h * gains * masks * (U[:1] - U[1:])
        copied = np.where(masks > 0, U[:1], U[1:])
        U[1:] = np.where(replace_sel[:, None, None], copied, nudged)
        return U

    cadence = base.cadence or base.T / 200
    times = _observation_times(base.T, cadence, base.burn_in)
    rec_t, rec_d, rec_o, rec_em, rec_es = [], [], [], [], []

    def observe(t, U):
        diff = U[:1] - U[1:]
        rec_t.append(t)
        rec_d.append(_norms(diff, grid))
        rec_o.append(_norms(masks * diff, grid))
        e = _energies(U, grid)
        rec_em.append(e[0])
        rec_es.append(e[1:])

    stepper = Stepper(grid, params, forcing, integrator.enforce_symmetry)
    labels = ["master"] + [f"slave[kappa={c.kappa:g}]" for c in cfgs]
    _lockstep(stepper, U, times, integrator, params, couple, base.burn_in, observe, labels)
    d, o, es = np.array(rec_d), np.array(rec_o), np.array(rec_es)
    return [
        _result("modes", c.coupling, c.kappa, c, rec_t, d[:, i], o[:, i], rec_em, es[:, i])
        for i, c in enumerate(cfgs)
    ]


def run_modes_sync(cfg: ModesSyncConfig, forcing: SpectralField | None, params: PhysicalParams,
                   integrator: IntegratorConfig,
                   initial: tuple[SpectralField, SpectralField] | None = None,
                   grid: GridSpec | None = None) -> SyncResult:
    """Low-mode coupled master/slave pair; see :func:`run_modes_sweep`."""
    return run_modes_sweep([cfg], forcing, params, integrator, initial, grid)[0]


@dataclass(frozen=True)
class NodeLattice:
    """Regular ``m x m`` lattice of collocation points, ``m = sqrt(N)`` dividing ``n``."""

    grid: GridSpec
    N: int

    def __post_init__(self):
        m = math.isqrt(self.N) if self.N > 0 else 0
        if self.N <= 0 or m * m != self.N:
            raise DomainError(f"N must be a positive perfect square, got {self.N}")
        if self.grid.n % m:
            raise DomainError(f"sqrt(N) = {m} must divide n = {self.grid.n}")

    @property
    def m(self) -> int:
        return math.isqrt(self.N)

    @property
    def stride(self) -> int:
        return self.grid.n // self.m

    @property
    def indices(self) -> np.ndarray:
        """Collocation indices of the nodes along either axis."""
        return np.arange(self.m) * self.stride

    def points(self) -> np.ndarray:
        """Node coordinates ``(x, y)`` with ``y`` in ``[-L/2, L/2)``, shape ``(N, 2)``."""
        L = self.grid.L
        c = self.indices * self.grid.dx
        yy, xx = np.meshgrid(c, c, indexing="ij")
        yy = np.where(yy >= L / 2, yy - L, yy)
        return np.column_stack([xx.ravel(), yy.ravel()])

    def sample(self, values: np.ndarray) -> np.ndarray:
        idx = self.indices
        return values[..., idx[:, None], idx[None, :]]

    def interpolation_matrix(self) -> np.ndarray:
        """Periodic piecewise-linear weights from ``m`` nodes to ``n`` points."""
        n, m, s = self.grid.n, self.m, self.stride
        W = np.zeros((n, m))
        p = np.arange(n)
        j0 = p // s
        frac = (p % s) / s
        W[p, j0] += 1 - frac
        W[p, (j0 + 1) % m] += frac
        return W

    def interpolate(self, node_values: np.ndarray) -> np.ndarray:
        """Bilinear interpolant on the full grid of values given at the nodes."""
        W = self.interpolation_matrix()
        return W @ node_values @ W.T


def _node_indices(nodes, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(nodes, NodeLattice):
        if nodes.grid != grid:
            raise DomainError("node lattice belongs to a different grid")
        idx = nodes.indices
        iy, ix = np.meshgrid(idx, idx, indexing="ij")
        return iy.ravel(), ix.ravel()
    pts = np.asarray(nodes, dtype=float).reshape(-1, 2)
    fx = np.mod(pts[:, 0], grid.L) / grid.dx
    fy = np.mod(pts[:, 1], grid.L) / grid.dx
    ix, iy = np.rint(fx), np.rint(fy)
    if np.any(np.abs(fx - ix) > 1e-9) or np.any(np.abs(fy - iy) > 1e-9):
        raise DomainError("node does not lie on a collocation point")
    n = grid.n
    return iy.astype(int) % n, ix.astype(int) % n


def eta(u, nodes) -> float:
    """``max_i |u(x_i)|`` over the nodes; vector fields use the Euclidean length.

    ``u`` is a :class:`PhysicalField` or a sequence of them (components);
    ``nodes`` a :class:`NodeLattice` or an array of ``(x, y)`` points that must
    sit on collocation points.
    """
    comps = [u] if isinstance(u, PhysicalField) else list(u)
    grid = comps[0].grid
    iy, ix = _node_indices(nodes, grid)
    if len(iy) == 0:
        return 0.0
    if len(comps) == 1:
        # direct max keeps eta(c u) = |c| eta(u) exact
        return float(np.max(np.abs(np.asarray(comps[0].values)[iy, ix])))
    sq = sum(np.asarray(c.values)[iy, ix] ** 2 for c in comps)
    return float(np.sqrt(np.max(sq)))


def _grad_psi_physical(d: np.ndarray, grid: GridSpec) -> np.ndarray:
    wn = grid.wavenumbers
    psi = -wn.inv_k2 * d
    return _inv(np.stack([wn.ikx * psi, wn.iky * psi]), grid.n)


def run_nodes_sync(cfg: NodesSyncConfig, forcing: SpectralField | None, params: PhysicalParams,
                   integrator: IntegratorConfig,
                   initial: tuple[SpectralField, SpectralField] | None = None,
                   grid: GridSpec | None = None) -> SyncResult:
    """Nodal nudging ``w_s += lam dt I_N(w - w_s)`` after ``burn_in``.

    ``I_N`` samples the physical difference at the lattice nodes, interpolates
    it bilinearly to the whole grid, and is transformed back with the mean
    removed and the 2/3 rule applied.
    """
    if grid is None:
        grid = forcing.grid if forcing is not None else initial[0].grid
    lattice = NodeLattice(grid, cfg.N)
    w_m, w_s = _initial_pair(grid, cfg.seeds, cfg.ic_amplitude, cfg.ic_band,
                             cfg.ic_y_antisymmetric, initial)
    U = np.stack([w_m, w_s])
    mask = grid.wavenumbers.dealias
    W = lattice.interpolation_matrix()

    def couple(U, h):
        if cfg.lam == 0:
            return U
        d = _inv(U[0] - U[1], grid.n)
        c = _fwd(W @ lattice.sample(d) @ W.T) * mask
        c[0, 0] = 0.0
        U[1] += (cfg.lam * h) * c
        return U

    iy, ix = _node_indices(lattice, grid)
    cadence = cfg.cadence or cfg.T / 200
    times = _observation_times(cfg.T, cadence, cfg.burn_in)
    rec = {"t": [], "d": [], "o": [], "em": [], "es": []}

    def observe(t, U):
        diff = U[0] - U[1]
        gx, gy = _grad_psi_physical(diff, grid)
        e = _energies(U, grid)
        rec["t"].append(t)
        rec["d"].append(float(_norms(diff, grid)))
        rec["o"].append(float(np.sqrt(np.max(gx[iy, ix] ** 2 + gy[iy, ix] ** 2))))
        rec["em"].append(e[0])
        rec["es"].append(e[1])

    stepper = Stepper(grid, params, forcing, integrator.enforce_symmetry)
    _lockstep(stepper, U, times, integrator, params, couple, cfg.burn_in, observe,
              ["master", f"slave[N={cfg.N}]"])
    return _result("nodes", "nudge", cfg.N, cfg, rec["t"], rec["d"], rec["o"], rec["em"], rec["es"])


def _trial_field(grid: GridSpec, rng: np.random.Generator, seed: int) -> SpectralField:
    kmax = int(rng.integers(1, grid.dealias_index + 1))
    slope = float(rng.uniform(-3.0, 0.0))
    f = random_field(seed, band_profile(1.0, float(kmax), slope), grid)
    return SpectralField(grid, f.coeffs, True)


def nodal_inequality_check(u: SpectralField | None, nodes: NodeLattice, trials: int = 0,
                           seed: int = 0) -> tuple[float, float]:
    """Empirical constants in the two nodal interpolation inequalities.

    For each field the ratios

    - ``|u|^2 / (L^2 eta(u)^2 + L^4/N^2 |Lap u|^2)`` and
    - ``max(|grad u|^2, |u|_inf^2) / (N eta(u)^2 + L^2/N |Lap u|^2)``

    are formed (``c_eta = 1``); the maxima over ``u`` (if given) and ``trials``
    random mean-zero band-limited fields are returned.  Fields with a vanishing
    denominator are skipped.
    """
    grid = nodes.grid
    L, N = grid.L, nodes.N
    fields = [] if u is None else [u]
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    for i in range(trials):
        fields.append(_trial_field(grid, rng, seed * 1_000_003 + i + 1))
    best_l2 = best_h1 = 0.0
    iy, ix = _node_indices(nodes, grid)
    for f in fields:
        vals = _inv(f.coeffs, grid.n)
        e2 = float(np.max(vals[iy, ix] ** 2)) if len(iy) else 0.0
        lap2 = norm(f, 2.0) ** 2
        den1 = L**2 * e2 + L**4 / N**2 * lap2
        den2 = N * e2 + L**2 / N * lap2
        if den1 > 0:
            best_l2 = max(best_l2, norm(f) ** 2 / den1)
        if den2 > 0:
            lhs = max(norm(f, 1.0) ** 2, _sup_norm(f) ** 2)
            best_h1 = max(best_h1, lhs / den2)
    return best_l2, best_h1


@dataclass
class SearchResult:
    family: str
    threshold: float
    table: dict
    control: SyncResult
    results: dict = field(default_factory=dict)


def threshold_search(family: str, values: Sequence[float], forcing: SpectralField,
                     params: PhysicalParams, integrator: IntegratorConfig,
                     base: ModesSyncConfig | NodesSyncConfig,
                     initial: tuple[SpectralField, SpectralField] | None = None) -> SearchResult:
    """Smallest sweep value (``kappa`` or ``N``) whose coupled pair converges.

    A control run without coupling (``kappa = 0`` or ``lam = 0``) must fail to
    converge, otherwise :class:`RegimeTooDissipative` is raised.  The sweep is
    bisected assuming monotone verdicts; both neighbours of the returned value
    are evaluated and any violation raises :class:`InconclusiveSearch`.
    """
    if family not in ("modes", "nodes"):
        raise ValueError(f"family must be 'modes' or 'nodes', got {family!r}")
    vals = sorted(set(values))
    if not vals:
        raise ValueError("empty sweep")
    grid = forcing.grid
    cache: dict = {}

    def run(v):
        if v not in cache:
            if family == "modes":
                cfg = replace(base, kappa=float(v))
                cache[v] = run_modes_sync(cfg, forcing, params, integrator, initial, grid)
            else:
                cfg = replace(base, N=int(v))
                cache[v] = run_nodes_sync(cfg, forcing, params, integrator, initial, grid)
        return cache[v]

    if family == "modes":
        control = run_modes_sync(replace(base, kappa=0.0), forcing, params, integrator, initial, grid)
    else:
        control = run_nodes_sync(replace(base, lam=0.0), forcing, params, integrator, initial, grid)
    if control.converged:
        raise RegimeTooDissipative(control)

    def table():
        return {v: cache[v].verdict for v in sorted(cache)}

    if not run(vals[-1]).converged:
        raise InconclusiveSearch("no sweep value converged", table())
    lo, hi = -1, len(vals) - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if run(vals[mid]).converged:
            hi = mid
        else:
            lo = mid
    if hi > 0 and run(vals[hi - 1]).converged:
        raise InconclusiveSearch("non-monotone verdicts below the boundary", table())
    if hi + 1 < len(vals) and not run(vals[hi + 1]).converged:
        raise InconclusiveSearch("non-monotone verdicts above the boundary", table())
    return SearchResult(family, float(vals[hi]), table(), control, dict(cache))


def zonalization_check(forcing: SpectralField, params: PhysicalParams, eps_list: Sequence[float],
                       T: float, burn_in: float, integrator: IntegratorConfig,
                       seed: int = 1, ic_amplitude: float = 1.0,
                       ic_band: tuple[float, float] = (1.0, 8.0),
                       ic_y_antisymmetric: bool = True, consts: Constants = Constants(),
                       M0: float | None = None) -> list[dict]:
    """Non-zonal enstrophy across a sweep of ``epsilon`` with forcing held fixed.

    All values of ``epsilon`` are integrated together from the same initial
    vorticity.  Each row reports ``sup |w_tilde|^2`` over ``[burn_in, T]``
    (sampled every step), the largest window ``mu int_t^{t+1} |grad w_tilde|^2``,
    the reference ``eps M0 / kappa0^2`` and the ratio of ``sup |w_tilde|^2``
    of the previous row to this one.
    """
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        return []
    if not T > burn_in >= 0:
        raise DomainError(f"need T > burn_in >= 0, got T={T}, burn_in={burn_in}")
    grid = forcing.grid
    wn = grid.wavenumbers
    plist = [params.with_epsilon(e) for e in eps_list]
    stepper = Stepper(grid, plist, forcing, integrator.enforce_symmetry)
    w0 = initial_vorticity(grid, seed, ic_amplitude, *ic_band, y_antisymmetric=ic_y_antisymmetric)
    U = np.stack([np.array(w0.coeffs)] * len(eps_list))
    nz = np.ones(grid.spectral_shape)
    nz[:, 0] = 0.0
    M = m0(grashof_set(forcing, params), consts) if M0 is None else float(M0)
    ts: list[float] = []
    ens: list[np.ndarray] = []
    pal: list[np.ndarray] = []
    t = 0.0
    nstep = 0
    cad = (T - burn_in) / 50

    def sample(t, U):
        ts.append(t)
        ens.append(_norms(nz * U, grid) ** 2)
        pal.append(_norms(nz * wn.kabs * U, grid) ** 2)

    times = _observation_times(T, cad, burn_in)
    for target in times[1:]:
        if integrator.dt is not None:
            dt = integrator.dt
        else:
            dt = min(suggest_dt(SpectralField(grid, U[i], True), p, integrator.cfl)
                     for i, p in enumerate(plist))
        for h in _time_grid_steps(t, target, dt):
            U = stepper.advance(U, h)
            nstep += 1
            t += h
            if not np.isfinite(U).all():
                raise BlowUpError(nstep, t, math.nan,
                                  _blowup_label(U, [f"eps={e:g}" for e in eps_list]))
            if t >= burn_in - 1e-12 * T:
                sample(t, U)
        t = target
    ts_a, ens_a, pal_a = np.array(ts), np.array(ens), np.array(pal)
    # cumulative trapezoid for the windowed dissipation integral
    cum = np.concatenate([np.zeros((1, len(eps_list))),
                          np.cumsum(0.5 * (pal_a[1:] + pal_a[:-1]) * np.diff(ts_a)[:, None], axis=0)])
    rows = []
    prev = None
    for i, e in enumerate(eps_list):
        sup = float(ens_a[:, i].max())
        starts = ts_a[ts_a + 1.0 <= ts_a[-1] + 1e-12]
        if starts.size:
            win = np.interp(starts + 1.0, ts_a, cum[:, i]) - np.interp(starts, ts_a, cum[:, i])
            window = float(params.mu * win.max())
        else:
            window = math.nan
        bound = e * M / params.kappa0**2
        rows.append({
            "epsilon": e,
            "sup_nonzonal_enstrophy": sup,
            "sup_window_dissipation": window,
            "bound": bound,
            "ratio_to_bound": sup / bound if bound > 0 else math.inf,
            "ratio_to_previous": (prev / sup if (prev is not None and sup > 0) else None),
        })
        prev = sup
    return rows


def eddy_turnover_time(omega: SpectralField) -> float:
    """``L / |omega|_{L^2}``, the inverse root-mean-square vorticity."""
    size = norm(omega)
    if size == 0:
        raise DomainError("turnover time undefined for zero vorticity")
    return omega.grid.L / size


def delta_consistency(master: SpectralField, slave: SpectralField, forcing: SpectralField | None,
                      params: PhysicalParams, T: float, integrator: IntegratorConfig,
                      cadence: float | None = None) -> float:
    """Largest relative gap between a directly integrated difference and ``w - w_s``.

    The difference obeys
    ``d_t dw + d(psi_s, dw) + d(dpsi, w) + (kappa0/eps) d_x dpsi = mu Lap dw``,
    which is stepped with the same scheme as the pair.  The residual at each
    observation is ``|dw - (w - w_s)| / |w - w_s|``, or the absolute gap when
    ``|w - w_s| < 1e-14``.
    """
    grid = master.grid
    if slave.grid != grid:
        raise DomainError("master and slave live on different grids")
    stepper = Stepper(grid, params, forcing, integrator.enforce_symmetry)
    f = stepper.forcing
    wn = grid.wavenumbers

    def rhs(U):
        psi = -wn.inv_k2 * U
        jac = _jacobian_arrays(np.stack([psi[0], psi[1], psi[1], psi[2]]),
                               np.stack([U[0], U[1], U[2], U[0]]), grid)
        out = np.empty_like(U)
        out[0] = -jac[0]
        out[1] = -jac[1]
        if f is not None:
            out[0] += f
            out[1] += f
        out[2] = -(jac[2] + jac[3])
        return out

    U = np.stack([np.array(master.coeffs), np.array(slave.coeffs),
                  np.array(master.coeffs) - np.array(slave.coeffs)])
    worst = [0.0]

    def observe(t, U):
        pair = U[0] - U[1]
        gap = float(_norms(U[2] - pair, grid))
        size = float(_norms(pair, grid))
        worst[0] = max(worst[0], gap / size if size >= 1e-14 else gap)

    times = _observation_times(T, cadence or T / 100, 0.0)
    _lockstep(stepper, U, times, integrator, params, None, math.inf, observe,
              ["master", "slave", "delta"], rhs=rhs)
    return worst[0]
