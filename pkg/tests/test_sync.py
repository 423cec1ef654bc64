import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bpns.dynamics import BlowUpError, IntegratorConfig, PhysicalParams, initial_vorticity
from bpns.forcing import Analytic, ForcingSpec, NonZonal, build_forcing
from bpns.spectral import (
    DomainError,
    GridSpec,
    PhysicalField,
    SpectralField,
    forward,
    inverse,
)
from bpns.sync import (
    InconclusiveSearch,
    ModesSyncConfig,
    NodeLattice,
    NodesSyncConfig,
    RegimeTooDissipative,
    delta_consistency,
    eddy_turnover_time,
    eta,
    nodal_inequality_check,
    run_modes_sweep,
    run_modes_sync,
    run_nodes_sync,
    threshold_search,
    zonalization_check,
)

from conftest import TWO_PI, rand

DT = IntegratorConfig(dt=0.02)


def physics(n=16, mu=0.01, eps=0.3, G0=10.0, A=100.0):
    g = GridSpec(TWO_PI, n)
    p = PhysicalParams.for_grid(g, mu, eps)
    nz = NonZonal(A, 2, 4, seed=1) if A else None
    return g, p, build_forcing(ForcingSpec(Analytic(1.0), G0, g, p, nonzonal=nz))


class TestConfigs:
    def test_modes_validation(self):
        with pytest.raises(DomainError):
            ModesSyncConfig(kappa=-1, T=1, burn_in=0)
        with pytest.raises(DomainError):
            ModesSyncConfig(kappa=1, T=1, burn_in=1)
        with pytest.raises(DomainError):
            ModesSyncConfig(kappa=1, T=2, burn_in=1, coupling="copy")
        with pytest.raises(DomainError):
            ModesSyncConfig(kappa=1, T=2, burn_in=1, tol_converged=1.5)

    def test_nodes_validation(self):
        with pytest.raises(DomainError):
            NodesSyncConfig(N=10, lam=1, T=2, burn_in=1)
        with pytest.raises(DomainError):
            NodesSyncConfig(N=16, lam=-1, T=2, burn_in=1)
        NodesSyncConfig(N=16, lam=0.0, T=2, burn_in=1)


class TestModesSync:
    def test_identical_seeds(self):
        g, p, f = physics()
        r = run_modes_sync(ModesSyncConfig(2.0, T=2.0, burn_in=1.0, seeds=(5, 5)), f, p, DT)
        assert np.all(r.delta == 0) and r.converged and r.ratio == 0

    def test_full_replacement(self):
        g, p, f = physics()
        cfg = ModesSyncConfig(100.0, T=1.0, burn_in=0.0, ic_amplitude=5.0)
        r = run_modes_sync(cfg, f, p, DT)
        assert r.delta[0] > 0 and np.all(r.delta[1:] == 0) and r.converged

    def test_unforced_viscous_control(self):
        g = GridSpec(TWO_PI, 16)
        p = PhysicalParams.for_grid(g, 1.0, 0.5)  # nu0 = 1
        cfg = ModesSyncConfig(0.0, T=3.0, burn_in=1.0, ic_amplitude=1e-3, cadence=0.25)
        r = run_modes_sync(cfg, None, p, DT, grid=g)
        bound = r.delta[0] * np.exp(-p.nu0 * r.t)
        assert np.all(r.delta <= bound * (1 + 1e-6))

    def test_replace_zeroes_low_modes(self):
        g, p, f = physics(n=32)
        cfg = ModesSyncConfig(3.0, T=3.0, burn_in=1.0, ic_amplitude=10.0, cadence=0.1)
        r = run_modes_sync(cfg, f, p, DT)
        after = r.t > r.burn_in
        assert np.all(r.observed[after] <= 1e-14 * r.delta[after])
        assert np.all(r.observed[~after] > 0)

    def test_sweep_matches_single_runs(self):
        g, p, f = physics()
        base = dict(T=2.0, burn_in=0.5, ic_amplitude=8.0)
        cfgs = [ModesSyncConfig(k, **base) for k in (0.0, 2.0)] + \
            [ModesSyncConfig(3.0, coupling="nudge", lam=5.0, **base)]
        swept = run_modes_sweep(cfgs, f, p, DT)
        for c, r in zip(cfgs, swept):
            single = run_modes_sync(c, f, p, DT)
            assert np.array_equal(single.delta, r.delta)
            assert np.array_equal(single.energy_master, r.energy_master)

    def test_sweep_rejects_mixed_horizons(self):
        g, p, f = physics()
        with pytest.raises(ValueError):
            run_modes_sweep([ModesSyncConfig(1, T=2, burn_in=1), ModesSyncConfig(1, T=3, burn_in=1)],
                            f, p, DT)

    def test_nudging_contracts(self):
        g, p, f = physics()
        cfg = ModesSyncConfig(100.0, T=4.0, burn_in=1.0, coupling="nudge", lam=10.0, ic_amplitude=5.0)
        r = run_modes_sync(cfg, f, p, DT)
        assert r.delta_final < 1e-6 * r.delta_burn_in
        assert r.decay_rate < 0

    def test_deterministic(self):
        g, p, f = physics()
        cfg = ModesSyncConfig(1.5, T=1.0, burn_in=0.5, ic_amplitude=8.0)
        a, b = run_modes_sync(cfg, f, p, DT), run_modes_sync(cfg, f, p, DT)
        assert np.array_equal(a.delta, b.delta) and np.array_equal(a.energy_slave, b.energy_slave)

    def test_records_and_summary(self):
        g, p, f = physics()
        r = run_modes_sync(ModesSyncConfig(1.0, T=1.0, burn_in=0.5, cadence=0.25), f, p, DT)
        recs = r.records()
        assert [x["t"] for x in recs] == pytest.approx([0, 0.25, 0.5, 0.75, 1.0])
        assert {"delta", "P_kappa_delta", "energy_master", "energy_slave"} <= set(recs[0])
        s = r.summary()
        assert s["verdict"] in ("converged", "not_converged") and s["parameter"] == 1.0

    def test_blow_up_labelled(self):
        g = GridSpec(TWO_PI, 16)
        p = PhysicalParams.for_grid(g, 1e-4, 10.0)
        cfg = ModesSyncConfig(0.0, T=5000.0, burn_in=1.0, ic_amplitude=1e4)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            with pytest.raises(BlowUpError, match="master|slave"):
                run_modes_sync(cfg, None, p, IntegratorConfig(dt=5.0), grid=g)


class TestNodesSync:
    def test_identical_seeds(self):
        g, p, f = physics()
        r = run_nodes_sync(NodesSyncConfig(16, 1.0, T=1.0, burn_in=0.5, seeds=(3, 3)), f, p, DT)
        assert np.all(r.delta == 0) and r.converged

    def test_dense_nodes_unit_gain(self):
        g, p, f = physics()
        dt = 0.02
        cfg = NodesSyncConfig(g.n**2, 1 / dt, T=1.0, burn_in=0.2, ic_amplitude=5.0)
        r = run_nodes_sync(cfg, f, p, IntegratorConfig(dt=dt))
        assert r.delta_final <= 1e-6 * r.delta_burn_in and r.converged

    def test_zero_gain_is_uncoupled(self):
        g, p, f = physics()
        kw = dict(T=2.0, burn_in=0.5, ic_amplitude=8.0)
        a = run_nodes_sync(NodesSyncConfig(16, 0.0, **kw), f, p, DT)
        b = run_modes_sync(ModesSyncConfig(0.0, **kw), f, p, DT)
        assert np.array_equal(a.delta, b.delta)
        assert np.array_equal(a.energy_slave, b.energy_slave)

    def test_converged_run_drives_eta_down(self):
        g, p, f = physics()
        cfg = NodesSyncConfig(256, 10.0, T=3.5, burn_in=1.0, ic_amplitude=5.0)
        r = run_nodes_sync(cfg, f, p, DT)
        assert r.converged and r.decay_rate < 0
        assert r.observed[-1] < 1e-6 * r.observed[np.searchsorted(r.t, 1.0)]
        assert r.records()[0].keys() >= {"eta_grad_delta_psi"}


class TestEta:
    def setup_method(self):
        self.g = GridSpec(TWO_PI, 16)
        self.nodes = NodeLattice(self.g, 16)

    def test_zero(self):
        assert eta(PhysicalField(self.g, np.zeros((16, 16))), self.nodes) == 0

    def test_cosine_at_origin(self):
        u = PhysicalField.from_function(self.g, lambda x, y: np.cos(x))
        assert eta(u, self.nodes) == pytest.approx(1.0, rel=1e-15)
        assert eta(u, [(0.0, 0.0)]) == pytest.approx(1.0, rel=1e-15)

    @given(st.integers(0, 2**32), st.floats(-1e3, 1e3))
    def test_subset_max_and_scaling(self, seed, c):
        g = GridSpec(TWO_PI, 16)
        nodes = NodeLattice(g, 16)
        u = inverse(rand(g, seed))
        assert eta(u, nodes) <= np.max(np.abs(u.values))
        cu = PhysicalField(g, c * u.values)
        assert eta(cu, nodes) == abs(c) * eta(u, nodes)

    def test_vector_uses_euclidean_length(self):
        a = PhysicalField(self.g, np.full((16, 16), 3.0))
        b = PhysicalField(self.g, np.full((16, 16), -4.0))
        assert eta((a, b), self.nodes) == pytest.approx(5.0)

    def test_off_lattice(self):
        u = PhysicalField(self.g, np.ones((16, 16)))
        with pytest.raises(DomainError):
            eta(u, [(0.1, 0.0)])
        with pytest.raises(DomainError):
            eta(u, NodeLattice(GridSpec(TWO_PI, 32), 16))


class TestNodeLattice:
    def test_validation(self):
        g = GridSpec(TWO_PI, 16)
        with pytest.raises(DomainError):
            NodeLattice(g, 15)
        with pytest.raises(DomainError):
            NodeLattice(g, 9)

    def test_points(self):
        g = GridSpec(TWO_PI, 16)
        pts = NodeLattice(g, 16).points()
        assert pts.shape == (16, 2)
        assert pts[:, 1].min() == -np.pi and pts[:, 0].max() == pytest.approx(1.5 * np.pi)

    def test_interpolant(self):
        g = GridSpec(TWO_PI, 16)
        lat = NodeLattice(g, 16)
        vals = np.random.default_rng(0).standard_normal((4, 4))
        full = lat.interpolate(vals)
        assert np.allclose(lat.sample(full), vals, atol=1e-15)
        assert np.allclose(lat.interpolate(np.ones((4, 4))), 1.0, atol=1e-15)
        # midway between two nodes along x the interpolant is their mean
        assert full[0, 2] == pytest.approx(0.5 * (vals[0, 0] + vals[0, 1]))


class TestNodalInequalities:
    def test_zero_field(self):
        g = GridSpec(TWO_PI, 16)
        z = SpectralField.zeros(g)
        assert nodal_inequality_check(z, NodeLattice(g, 16)) == (0.0, 0.0)

    def test_cosine_by_hand(self):
        g = GridSpec(3.0, 32)
        N = 64
        k0 = g.kappa0
        u = forward(PhysicalField.from_function(g, lambda x, y: np.cos(k0 * x)), True)
        l2, h1 = nodal_inequality_check(u, NodeLattice(g, N))
        L = g.L
        lap2 = k0**4 * L**2 / 2
        assert l2 == pytest.approx((L**2 / 2) / (L**2 + L**4 / N**2 * lap2), rel=1e-12)
        assert l2 <= 0.5
        grad2 = k0**2 * L**2 / 2
        assert h1 == pytest.approx(max(grad2, 1.0) / (N + L**2 / N * lap2), rel=1e-12)

    def test_random_trials_positive(self):
        g = GridSpec(TWO_PI, 32)
        l2, h1 = nodal_inequality_check(None, NodeLattice(g, 64), trials=50, seed=1)
        assert 0 < l2 < np.inf and 0 < h1 < np.inf
        assert (l2, h1) == nodal_inequality_check(None, NodeLattice(g, 64), trials=50, seed=1)


class TestThresholdSearch:
    def test_two_point_bracket(self):
        g, p, f = physics(mu=0.002)
        base = ModesSyncConfig(0.0, T=2.0, burn_in=1.0, ic_amplitude=8.0)
        res = threshold_search("modes", [1.0, 100.0], f, p, DT, base)
        assert res.threshold == 100.0
        assert res.table == {1.0: "not_converged", 100.0: "converged"}
        assert not res.control.converged

    def test_too_dissipative(self):
        g = GridSpec(TWO_PI, 16)
        p = PhysicalParams.for_grid(g, 1.0, 0.5)
        f = SpectralField.zeros(g)
        base = ModesSyncConfig(0.0, T=30.0, burn_in=1.0, ic_amplitude=1e-3, cadence=1.0)
        with pytest.raises(RegimeTooDissipative):
            threshold_search("modes", [1.0, 2.0], f, p, IntegratorConfig(dt=0.1), base)

    def test_nothing_converges(self):
        g, p, f = physics(mu=0.002)
        base = ModesSyncConfig(0.0, T=2.0, burn_in=1.0, ic_amplitude=8.0)
        with pytest.raises(InconclusiveSearch) as info:
            threshold_search("modes", [1.0, 2.0], f, p, DT, base)
        assert set(info.value.table) == {2.0}

    def test_nodes_family(self):
        g, p, f = physics(mu=0.002)
        base = NodesSyncConfig(16, 1 / 0.02, T=2.0, burn_in=1.0, ic_amplitude=8.0)
        res = threshold_search("nodes", [4, 256], f, p, DT, base)
        assert res.threshold == 256

    def test_bad_family(self):
        g, p, f = physics()
        with pytest.raises(ValueError):
            threshold_search("edges", [1.0], f, p, DT, ModesSyncConfig(0, T=2, burn_in=1))


class TestZonalization:
    def test_zonal_manifold(self):
        g, p, f = physics(A=0.0)
        rows = zonalization_check(f, p, [0.4, 0.2], T=2.0, burn_in=1.0, integrator=DT,
                                  ic_amplitude=0.0)
        assert all(r["sup_nonzonal_enstrophy"] == 0 for r in rows)

    def test_rows(self):
        g, p, f = physics()
        rows = zonalization_check(f, p, [0.4, 0.2, 0.1], T=3.0, burn_in=1.0, integrator=DT,
                                  ic_amplitude=5.0)
        assert [r["epsilon"] for r in rows] == [0.4, 0.2, 0.1]
        assert rows[0]["ratio_to_previous"] is None
        for prev, r in zip(rows, rows[1:]):
            assert r["ratio_to_previous"] == pytest.approx(
                prev["sup_nonzonal_enstrophy"] / r["sup_nonzonal_enstrophy"])
        for r in rows:
            assert 0 < r["ratio_to_bound"] < np.inf and r["sup_window_dissipation"] > 0
            assert r["bound"] > 0

    def test_validation(self):
        g, p, f = physics()
        with pytest.raises(DomainError):
            zonalization_check(f, p, [0.1], T=1.0, burn_in=1.0, integrator=DT)
        assert zonalization_check(f, p, [], T=2.0, burn_in=1.0, integrator=DT) == []


class TestDeltaConsistency:
    def test_zero_difference(self):
        g, p, f = physics()
        w = initial_vorticity(g, 1, 5.0)
        assert delta_consistency(w, w, f, p, 1.0, DT) == 0.0

    def test_linear_regime(self):
        g = GridSpec(TWO_PI, 16)
        p = PhysicalParams.for_grid(g, 0.01, 0.3)
        a, b = initial_vorticity(g, 1, 1e-6), initial_vorticity(g, 2, 1e-6)
        assert delta_consistency(a, b, None, p, 2.0, DT) <= 1e-10

    def test_nonlinear_short_run(self):
        g, p, f = physics()
        a, b = initial_vorticity(g, 1, 8.0), initial_vorticity(g, 2, 8.0)
        assert delta_consistency(a, b, f, p, 2.0, DT) <= 1e-6

    def test_grid_mismatch(self):
        g, p, f = physics()
        with pytest.raises(DomainError):
            delta_consistency(rand(g, 1), rand(GridSpec(TWO_PI, 32), 2), f, p, 1.0, DT)


class TestTurnover:
    def test_value(self):
        g = GridSpec(TWO_PI, 16)
        w = initial_vorticity(g, 1, 4 * np.pi)
        assert eddy_turnover_time(w) == pytest.approx(0.5)
        with pytest.raises(DomainError):
            eddy_turnover_time(SpectralField.zeros(g))
