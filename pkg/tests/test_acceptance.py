"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s``; the lines are also
collected in the ``acceptance criteria`` section of the terminal summary.
"""

import time

import numpy as np

from bpns.dynamics import (
    IntegratorConfig,
    PhysicalParams,
    SimState,
    Stepper,
    initial_vorticity,
    integrate,
)
from bpns.forcing import Algebraic, Analytic, BandLimited, ForcingSpec, NonZonal, build_forcing
from bpns.spectral import (
    GridSpec,
    PhysicalField,
    SpectralField,
    differentiate,
    forward,
    inner_product,
    inv_laplacian,
    inverse,
    jacobian,
    norm,
    project_high,
    project_low,
)
from bpns.sync import (
    ModesSyncConfig,
    NodeLattice,
    delta_consistency,
    eddy_turnover_time,
    eta,
    nodal_inequality_check,
    run_modes_sweep,
    zonalization_check,
)
from bpns.thresholds import (
    Constants,
    GrashofSet,
    f_alpha,
    f_alpha_inverse,
    modes_threshold,
    nodes_threshold,
)

from conftest import ACCEPTANCE, TWO_PI, rand, single_mode
from test_spectral import direct_jacobian

# desk-scale forced regime shared by the synchronization checks
N64 = 64
MU, EPS, G0 = 0.05, 0.2, 20.0
NZ_AMPLITUDE, NZ_BAND, NZ_SEED = 10000.0, (2.0, 4.0), 7

# zonalization sweep: same zonal forcing, non-zonal band chosen in the
# weakly nonlinear range
ZONAL_NZ_AMPLITUDE, ZONAL_NZ_BAND, ZONAL_DT = 4000.0, (2.0, 6.0), 0.01


def verdict(number: int, title: str, ok: bool, detail: str):
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    assert ok, line


def desk_forcing(amplitude=NZ_AMPLITUDE, band=NZ_BAND, eps=EPS):
    g = GridSpec(TWO_PI, N64)
    p = PhysicalParams.for_grid(g, MU, eps)
    nz = NonZonal(amplitude, band[0], band[1], seed=NZ_SEED)
    return g, p, build_forcing(ForcingSpec(Analytic(1.0), G0, g, p, nonzonal=nz))


def test_c01_transform_round_trip():
    t0 = time.perf_counter()
    worst = 0.0
    for n in range(8, 257, 8):
        g = GridSpec(TWO_PI, n)
        rng = np.random.default_rng(n)
        u = PhysicalField(g, rng.standard_normal((n, n)))
        back = inverse(forward(u)).values
        worst = max(worst, np.linalg.norm(back - u.values) / np.linalg.norm(u.values))
    dt = time.perf_counter() - t0
    verdict(1, "transform round trip", worst <= 1e-12 and dt < 1.0,
            f"max rel err {worst:.2e} over n=8..256, {dt:.2f} s")


def test_c02_jacobian_oracle():
    t0 = time.perf_counter()
    g = GridSpec(TWO_PI, 8)
    worst = 0.0
    for seed in range(3):
        psi, w = rand(g, 2 * seed), rand(g, 2 * seed + 1)
        worst = max(worst, np.max(np.abs(jacobian(psi, w).coeffs - direct_jacobian(psi, w))))
    dt = time.perf_counter() - t0
    verdict(2, "Jacobian oracle", worst <= 1e-12 and dt < 1.0,
            f"max coefficient err {worst:.2e} on 8x8, {dt:.2f} s")


def _skew_scaled(psi: SpectralField, w: SpectralField) -> tuple[float, float]:
    skew = abs(inner_product(jacobian(psi, w), w)) / (norm(psi, 1.0) * norm(w) ** 2)
    dpsi_dx = differentiate(psi, "dx")
    beta = abs(inner_product(dpsi_dx, w)) / (norm(psi, 1.0) * norm(w))
    return skew, beta


def test_c03_skew_symmetry_and_beta_neutrality():
    t0 = time.perf_counter()
    g = GridSpec(TWO_PI, N64)
    worst = [0.0, 0.0]
    for seed in range(100):
        w = rand(g, seed)
        for i, v in enumerate(_skew_scaled(inv_laplacian(w), w)):
            worst[i] = max(worst[i], v)
    _, p, f = desk_forcing()
    st = Stepper(g, p, f)
    u = np.array(initial_vorticity(g, 1, 10.0).coeffs)
    for _ in range(1000):
        u = st.advance(u, 0.006)
        w = SpectralField(g, u, True)
        for i, v in enumerate(_skew_scaled(inv_laplacian(w), w)):
            worst[i] = max(worst[i], v)
    dt = time.perf_counter() - t0
    ok = max(worst) <= 1e-10 and dt < 30
    verdict(3, "skew-symmetry and beta-neutrality", ok,
            f"max scaled <J(psi,w),w> {worst[0]:.2e}, <d_x psi,w> {worst[1]:.2e}, {dt:.1f} s")


def test_c04_rossby_wave():
    t0 = time.perf_counter()
    g = GridSpec(TWO_PI, N64)
    p = PhysicalParams.for_grid(g, 1e-3, 0.1)
    lx, ly, a0 = 2, 1, 0.4 + 0.3j
    k2 = (lx**2 + ly**2) * g.kappa0**2
    freq = p.beta * lx * g.kappa0 / k2
    period = 2 * np.pi / freq
    out = integrate(SimState(0.0, single_mode(g, lx, ly, a0)), None, p,
                    IntegratorConfig(dt=period / 2000), period).omega
    exact = a0 * np.exp((-p.mu * k2 + 1j * freq) * period)
    got = out.coeffs[ly, lx]
    amp_err = abs(abs(got) / abs(exact) - 1)
    phase_err = abs(np.angle(got / exact)) / (2 * np.pi)
    rest = np.array(out.coeffs)
    rest[ly, lx] = 0
    dt = time.perf_counter() - t0
    ok = amp_err <= 1e-6 and phase_err <= 1e-6 and np.max(np.abs(rest)) <= 1e-14 and dt < 30
    verdict(4, "Rossby-wave exactness", ok,
            f"amplitude err {amp_err:.2e}, phase err {phase_err:.2e} of a cycle, {dt:.1f} s")


def test_c05_integrator_order():
    t0 = time.perf_counter()
    g = GridSpec(TWO_PI, 32)
    p = PhysicalParams.for_grid(g, 0.02, 0.3)
    f = build_forcing(ForcingSpec(Analytic(1.0), G0, g, p, nonzonal=NonZonal(200.0, 2, 4, seed=1)))
    w0 = initial_vorticity(g, 3, 8.0, 1, 6)
    T, h = 0.5, 0.05

    def run(step):
        return integrate(SimState(0.0, w0), f, p, IntegratorConfig(dt=step), T).omega

    ref = run(h / 16)
    errs = [norm(run(h / 2**j) - ref) for j in range(3)]
    slope = np.polyfit(np.log([h, h / 2, h / 4]), np.log(errs), 1)[0]
    dt = time.perf_counter() - t0
    verdict(5, "integrator order", abs(slope - 4) <= 0.5 and dt < 120,
            f"self-convergence slope {slope:.3f}, {dt:.1f} s")


def test_c06_poincare_exactness():
    t0 = time.perf_counter()
    g = GridSpec(TWO_PI, N64)
    rng = np.random.default_rng(6)
    worst = 0.0
    for seed in range(100):
        w = rand(g, seed, slope=rng.uniform(-3, 0))
        kappa = rng.uniform(1.0, g.dealias_index)
        hi, lo = project_high(w, kappa), project_low(w, kappa)
        # violation ratios; the inequalities hold iff these are <= 1
        worst = max(worst, kappa**2 * norm(hi) ** 2 / norm(hi, 1.0) ** 2,
                    norm(lo, 1.0) ** 2 / (kappa**2 * norm(lo) ** 2))
    dt = time.perf_counter() - t0
    verdict(6, "Poincare exactness", worst <= 1 + 1e-12 and dt < 5,
            f"max ratio {worst:.15f} over 100 fields, {dt:.2f} s")


CASES = [BandLimited(2.0), Algebraic(3.0), Analytic(1.0)]


def test_c07_f_alpha_and_monotonicity():
    t0 = time.perf_counter()
    worst = 0.0
    for variant in ("modes", "nodes"):
        for alpha in (0.1, 1.0, 10.0):
            for u in np.logspace(-3, 6, 91):
                back = f_alpha_inverse(f_alpha(u, alpha, 1.0, variant), alpha, 1.0, variant)
                worst = max(worst, abs(back / u - 1))
    p = PhysicalParams(MU, 1.0, 1.0)
    Gs = np.logspace(0, 6, 5)
    eMs = np.concatenate([[0.0], np.logspace(-3, 3, 4)])
    monotone = True
    for fn in (modes_threshold, nodes_threshold):
        for case in CASES:
            table = np.array([[fn(case, 1.0, GrashofSet(G), Constants(), p, M0=eM).value
                               for eM in eMs] for G in Gs])
            monotone &= bool(np.all(np.diff(table, axis=0) >= 0) and np.all(np.diff(table, axis=1) >= 0))
    dt = time.perf_counter() - t0
    verdict(7, "F_alpha round trip and monotonicity", worst <= 1e-10 and monotone and dt < 5,
            f"max rel err {worst:.2e}, monotone over 5x5 grids: {monotone}, {dt:.2f} s")


def test_c08_determining_modes():
    t0 = time.perf_counter()
    g, p, f = desk_forcing()
    T, burn_in = 50 / p.nu0, 5 / p.nu0
    cfgs = [ModesSyncConfig(kappa=k * g.kappa0, T=T, burn_in=burn_in, ic_amplitude=10.0)
            for k in (0.0, 20.0)]
    control, coupled = run_modes_sweep(cfgs, f, p, IntegratorConfig(dt=0.006))
    dt = time.perf_counter() - t0
    ok = control.stays_apart and coupled.ratio <= 1e-6 and dt < 900
    verdict(8, "determining-modes synchronization", ok,
            f"kappa=0 ratio {control.ratio:.3e}, kappa/kappa0=20 ratio {coupled.ratio:.3e}, "
            f"{dt:.0f} s")


def test_c09_zonalization_scaling():
    t0 = time.perf_counter()
    g, p, f = desk_forcing(ZONAL_NZ_AMPLITUDE, ZONAL_NZ_BAND)
    rows = zonalization_check(f, p, [0.2, 0.1, 0.05], T=25 / p.nu0, burn_in=5 / p.nu0,
                              integrator=IntegratorConfig(dt=ZONAL_DT))
    ratios = [r["ratio_to_previous"] for r in rows[1:]]
    dt = time.perf_counter() - t0
    ok = all(1.3 <= r <= 3.1 for r in ratios) and dt < 900
    verdict(9, "zonalization scaling", ok,
            "consecutive sup|w~|^2 ratios " + ", ".join(f"{r:.3f}" for r in ratios) + f", {dt:.0f} s")


def test_c10_delta_consistency():
    t0 = time.perf_counter()
    g, p, f = desk_forcing()
    master, slave = initial_vorticity(g, 1, 10.0), initial_vorticity(g, 2, 10.0)
    T = 10 * eddy_turnover_time(master)
    resid = delta_consistency(master, slave, f, p, T, IntegratorConfig(dt=0.006))
    dt = time.perf_counter() - t0
    verdict(10, "delta-equation consistency", resid <= 1e-6 and dt < 300,
            f"max relative residual {resid:.2e} over T={T:.2f}, {dt:.1f} s")


def test_c11_nodal_inequalities():
    t0 = time.perf_counter()
    g = GridSpec(TWO_PI, N64)
    nodes = NodeLattice(g, 256)
    a = nodal_inequality_check(None, nodes, trials=500, seed=11)
    b = nodal_inequality_check(None, nodes, trials=1000, seed=11)
    finite = all(0 < v < np.inf for v in a + b)
    stable = all(abs(y / x - 1) <= 0.2 for x, y in zip(a, b))
    # eta: exact scaling and maximum over a union of node sets
    exact = True
    pts = nodes.points()
    rng = np.random.default_rng(11)
    for seed in range(20):
        u = inverse(rand(g, seed))
        c = rng.uniform(-100, 100)
        exact &= eta(PhysicalField(g, c * u.values), nodes) == abs(c) * eta(u, nodes)
        cut = rng.integers(1, len(pts))
        exact &= eta(u, pts) == max(eta(u, pts[:cut]), eta(u, pts[cut:]))
        exact &= eta(u, pts) == eta(u, nodes)
    dt = time.perf_counter() - t0
    verdict(11, "nodal inequality estimates", finite and stable and exact and dt < 120,
            f"c_eta L2 {a[0]:.4g} -> {b[0]:.4g}, H1/sup {a[1]:.4g} -> {b[1]:.4g}, "
            f"eta exact: {exact}, {dt:.1f} s")
