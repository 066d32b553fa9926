import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from critheat import heat_tail as ht
from critheat import pde_sim as ps
from critheat.errors import BlowUpSuspected, ConfigurationError, DomainError, RangeError
from critheat.profiles import RadialProfile, eval_Q


def scaled_Q(cfg, lam, amp=1.0):
    r = ps.make_grid(cfg).centers
    return amp * lam**-2 * eval_Q(r / lam)


# ---- configuration and grid -----------------------------------------------

@pytest.mark.parametrize("kw", [{"kappa": 0.0}, {"kappa": 0.5}, {"lam": 0.0}, {"horizon": 0.0},
                                {"delta": 0.0}, {"rtol": 1.0}, {"r_max": 10.0}])
def test_config_rejects(kw):
    with pytest.raises(ConfigurationError):
        ps.SimConfig(**kw)


def test_grid_geometry():
    cfg = ps.SimConfig(lam=0.5)
    g = ps.make_grid(cfg)
    assert g.faces[0] == 0.0
    assert g.faces[1] == pytest.approx(0.01, rel=1e-3)
    assert g.faces[-1] >= 20 * np.sqrt(cfg.t_start + cfg.horizon)
    assert np.all(np.diff(g.faces) > 0)
    ratio = np.diff(g.faces)[-1] / np.diff(g.faces)[-2]
    assert ratio == pytest.approx(np.exp(cfg.delta), rel=1e-3)
    assert np.sum(g.volumes) == pytest.approx(g.faces[-1] ** 6 / 6, rel=1e-12)


def test_refined_grid_nests():
    cfg = ps.SimConfig()
    a, b = ps.make_grid(cfg), ps.make_grid(cfg.refined())
    assert np.allclose(b.faces[::2][: a.faces.size - 1], a.faces[:-1], rtol=1e-12)


def test_discrete_laplacian_exact_on_r2():
    g = ps.make_grid(ps.SimConfig(r_max=200))
    lap = g.laplacian(g.centers**2)
    # Delta r^2 = 12 in R^6; the last cells see the Dirichlet wall
    assert np.allclose(lap[:-5], 12.0, rtol=2e-3)


def test_K_is_symmetric_positive():
    g = ps.make_grid(ps.SimConfig())
    rng = np.random.default_rng(0)
    u, v = rng.normal(size=g.n), rng.normal(size=g.n)
    assert np.dot(u, g.apply_K(v)) == pytest.approx(np.dot(v, g.apply_K(u)), rel=1e-12)
    assert np.dot(u, g.apply_K(u)) > 0


def test_value_at_origin_even_quadratic():
    g = ps.make_grid(ps.SimConfig())
    assert g.value_at_origin(3.0 - 2.0 * g.centers**2) == pytest.approx(3.0, rel=1e-12)


# ---- ansatz ---------------------------------------------------------------

@pytest.fixture(scope="module")
def theta100():
    cfg = ps.SimConfig(t_start=100.0)
    return ps.tabulate_heat(ht.build_theta0(0.75), 100.0, ps.make_grid(cfg).centers)


def test_ansatz_origin_value(theta100):
    cfg = ps.SimConfig(t_start=100.0)
    lam, b = 0.8, 0.01
    u = ps.assemble_ansatz(lam, b, theta100, cfg)
    g = ps.make_grid(cfg)
    T10 = float(ps.t1_profile()(0.0))
    assert g.value_at_origin(u.values) == pytest.approx(lam**-2 + 1.25 * b * T10, rel=1e-5)


def test_ansatz_is_theta_outside_cutoff(theta100):
    cfg = ps.SimConfig(t_start=100.0)
    lam = 1.0
    u = ps.assemble_ansatz(lam, 0.01, theta100, cfg)
    edge = 2 * lam**cfg.kappa * 10.0 ** (1 - cfg.kappa)
    far = u.grid > edge
    assert np.array_equal(u.values[far], theta100.values[far])


def test_ansatz_reduces_to_ground_state():
    cfg = ps.SimConfig(t_start=100.0)
    zero = RadialProfile(ps.make_grid(cfg).centers, np.zeros(ps.make_grid(cfg).n))
    u = ps.assemble_ansatz(2.0, 0.0, zero, cfg)
    plateau = u.grid < 2.0**cfg.kappa * 10.0 ** (1 - cfg.kappa)
    assert np.allclose(u.values[plateau], 0.25 * eval_Q(u.grid[plateau] / 2.0), rtol=1e-14)


def test_ansatz_errors(theta100):
    cfg = ps.SimConfig(t_start=100.0)
    with pytest.raises(DomainError):
        ps.assemble_ansatz(0.0, 0.0, theta100, cfg)
    short = RadialProfile(theta100.grid[:50], theta100.values[:50])
    with pytest.raises(RangeError):
        ps.assemble_ansatz(1.0, 0.0, short, cfg)
    with pytest.raises(RangeError):
        ps.assemble_ansatz(1.0, 0.0, None, cfg)


def test_extract_lambda():
    cfg = ps.SimConfig()
    g = ps.make_grid(cfg)
    for lam in (0.5, 1.0, 2.0):
        s = ps.make_state(g, 10.0, scaled_Q(cfg, lam))
        assert ps.extract_lambda(s) == pytest.approx(lam, rel=1e-4)
    with pytest.raises(DomainError):
        ps.extract_lambda(ps.make_state(g, 10.0, np.zeros(g.n)))


def test_extract_lambda_with_correction(theta100):
    cfg = ps.SimConfig(t_start=100.0)
    lam, b = 1.0, 0.02
    g = ps.make_grid(cfg)
    u = ps.assemble_ansatz(lam, b, theta100, cfg)
    T10 = float(ps.t1_profile()(0.0))
    expected = lam * (1 + 1.25 * b * T10 * lam**2) ** -0.5
    assert ps.extract_lambda(ps.make_state(g, 100.0, u.values)) == pytest.approx(expected, rel=1e-5)


# ---- residual -------------------------------------------------------------

def test_residual_zero_state():
    cfg = ps.SimConfig()
    z = np.zeros(ps.make_grid(cfg).n)
    rep = ps.residual(z, z, 0.1, cfg)
    assert rep.inner == rep.intermediate == rep.outer == 0.0


def test_stationary_residual_second_order():
    base = ps.SimConfig(h0=0.1, delta=0.04)
    sups = []
    for f in (1, 2, 4):
        cfg = base.refined(f) if f > 1 else base
        Q = scaled_Q(cfg, 1.0)
        sups.append(ps.residual(Q, Q, 1.0, cfg).inner)
    assert np.all(ps.observed_order(sups) >= 1.7)


def test_matched_ansatz_reduces_inner_residual():
    datum = ht.PiecewiseRadialDatum(0.75, amplitude=10.0)
    cfg = ps.SimConfig(t_start=100.0, kappa=0.05, R=5.0)
    m = ps.ansatz_residual(datum, 1.0, 100.0, 1e-2, cfg, matched=True)
    u = ps.ansatz_residual(datum, 1.0, 100.0, 1e-2, cfg, matched=False)
    assert u.inner >= 5 * m.inner


def test_residual_shape_mismatch():
    cfg = ps.SimConfig()
    with pytest.raises(ConfigurationError):
        ps.residual(np.zeros(3), np.zeros(3), 1.0, cfg)


# ---- evolution ------------------------------------------------------------

def test_pure_heat_matches_quadrature():
    d = ht.build_theta0(0.75)
    cfg = ps.SimConfig(h0=0.05, t_start=10.0, horizon=90.0, nonlinear=False, rtol=1e-7)
    g = ps.make_grid(cfg)
    res = ps.run(cfg, ps.tabulate_heat(d, 10.0, g.centers))
    for t in (20.0, 50.0, 100.0):
        k = int(np.argmin(np.abs(res.times - t)))
        s = res.states[k]
        assert s.u0 == pytest.approx(ht.theta_origin(d, s.t).value, rel=1e-3)
    assert all(np.all(s.u >= 0) for s in res.states)


@pytest.mark.parametrize("amp,nonlinear", [(0.5, True), (1.0, False), (-0.7, True)])
def test_energy_nonincreasing(amp, nonlinear):
    cfg = ps.SimConfig(t_start=0.0, horizon=5.0, r_max=100, nonlinear=nonlinear, rtol=1e-5)
    res = ps.run(cfg, scaled_Q(cfg, 1.0, amp))
    E = res.energy
    assert np.all(np.diff(E) <= 1e-13 * np.abs(E[:-1]))


@given(st.floats(-1.2, 1.2), st.floats(1e-3, 0.5))
@settings(max_examples=10, deadline=None)
def test_single_step_lowers_energy(amp, dt):
    cfg = ps.SimConfig(t_start=0.0, horizon=1.0, r_max=60, delta=0.05)
    g = ps.make_grid(cfg)
    stepper = ps._Stepper(g, True)
    u0 = scaled_Q(cfg, 1.0, amp)
    u1 = stepper(u0, dt)
    assert g.energy(u1) <= g.energy(u0) + 1e-13 * abs(g.energy(u0))


def test_spread_data_decay():
    cfg = ps.SimConfig(lam=4.0, t_start=0.0, horizon=50.0, r_max=400, rtol=1e-5)
    res = ps.run(cfg, scaled_Q(cfg, 4.0, 0.5))
    sups = [np.max(np.abs(s.u)) for s in res.states]
    assert sups[-1] < 0.5 * sups[0]
    assert np.all(np.diff(res.energy) <= 1e-13 * np.abs(res.energy[:-1]))


def test_scaling_covariance():
    T = 5.0
    out = {}
    for f in (1, 2):
        for lam in (1.0, 2.0):
            cfg = ps.SimConfig(t_start=0.0, horizon=lam**2 * T, h0=0.05 / f, delta=0.04 / f,
                               rtol=1e-7, r_max=200)
            out[f, lam] = lam**2 * ps.run(cfg, scaled_Q(cfg, lam, 0.5)).final.u0
    mismatch = abs(out[1, 1.0] - out[1, 2.0])
    assert mismatch <= abs(out[1, 1.0] - out[2, 1.0])
    assert abs(out[2, 1.0] - out[2, 2.0]) < mismatch


def test_grid_convergence_center_value():
    vals = []
    for f in (1, 2, 4):
        cfg = ps.SimConfig(t_start=0.0, horizon=2.0, r_max=100, h0=0.1 / f, delta=0.04 / f)
        vals.append(ps.run(cfg, scaled_Q(cfg, 1.0, 0.5), fixed_dt=0.01).final.u0)
    d1, d2 = abs(vals[0] - vals[1]), abs(vals[1] - vals[2])
    assert d1 <= 4 * d2


def test_blowup_guard():
    cfg = ps.SimConfig(t_start=0.0, horizon=50.0, r_max=150, blowup_factor=10.0)
    res = ps.run(cfg, scaled_Q(cfg, 1.0, 1.5))
    assert res.status == "blowup"
    with pytest.raises(BlowUpSuspected):
        ps.run_or_raise(cfg, scaled_Q(cfg, 1.0, 1.5))


def test_nonfinite_initial_rejected():
    cfg = ps.SimConfig()
    u = np.zeros(ps.make_grid(cfg).n)
    u[3] = np.nan
    with pytest.raises(DomainError):
        ps.run(cfg, u)


def test_run_deterministic_and_csv(tmp_path):
    cfg = ps.SimConfig(t_start=0.0, horizon=1.0, r_max=60)
    a = ps.run(cfg, scaled_Q(cfg, 1.0, 0.5))
    b = ps.run(cfg, scaled_Q(cfg, 1.0, 0.5))
    a.write_csv(tmp_path / "a.csv")
    b.write_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.csv").read_text().splitlines()[0] == "t,u0,lambda_est,energy,dt"
    a.snapshot_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "r,u" and len(lines) == a.grid.n + 1


def test_observed_order():
    assert np.allclose(ps.observed_order([1.0, 0.25, 0.0625]), 2.0)
