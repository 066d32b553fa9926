import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.special import gammainc
from scipy.stats import ncx2

from critheat import duhamel as du
from critheat.errors import ConfigurationError


def ball_heat(rho, x, tau):
    """e^{tau Delta} 1_{B_rho} at |x| in R^6: a chi-square law with 6 dof."""
    if x == 0:
        return gammainc(3, rho * rho / (4 * tau))
    return ncx2.cdf(rho * rho / (2 * tau), 6, x * x / (2 * tau))


def inner_reference(f, x, t):
    def g(s):
        return s ** -f.gamma * np.log(s) ** f.q * ball_heat(f.K1 * np.sqrt(s), x, t - s)
    pts = [t / 2, t - t / 16, t - t / 256]
    pts = [p for p in pts if p > f.t0]
    return f.amplitude * quad(g, f.t0, t, points=pts, epsrel=1e-11, epsabs=0, limit=500)[0]


def test_forcing_validation():
    for kw in ({"gamma": 3.0, "q": 0}, {"gamma": 1, "q": 0, "K1": 0},
               {"gamma": 1, "q": 0, "region": "mid"}, {"gamma": 1, "q": 0, "t0": 2.0}):
        with pytest.raises(ConfigurationError):
            du.ForcingSpec(**kw)
    with pytest.raises(ConfigurationError):
        du.duhamel_eval(du.ForcingSpec(1, 0, t0=10), 0.0, 5.0)


def test_zero_forcing_is_zero():
    v = du.duhamel_eval(du.ForcingSpec(1, 0, amplitude=0.0), 3.0, 1e4)
    assert v.u == 0.0 and v.error == 0.0


@pytest.mark.parametrize("x,t", [(0.0, 1e3), (0.0, 1e5), (50.0, 1e4), (300.0, 1e4)])
def test_inner_against_chi_square_oracle(x, t):
    f = du.ForcingSpec(1.0, 1.0, K1=1.0)
    assert du.duhamel_eval(f, x, t, rtol=1e-9).u == pytest.approx(inner_reference(f, x, t), rel=2e-8)


def test_inner_wider_support():
    f = du.ForcingSpec(1.5, -0.5, K1=2.5)
    assert du.duhamel_eval(f, 40.0, 2e4, rtol=1e-9).u == pytest.approx(
        inner_reference(f, 40.0, 2e4), rel=2e-8)


def test_inner_plus_outer_equals_full_power():
    # inner + outer with gamma = 1, q = 0 and K1 = 1 is s^-1 on |y| < sqrt s
    # and |y|^-2 outside; both pieces agree at the seam, so only positivity
    # and additivity are checked against separate evaluations
    t, x = 1e4, 30.0
    a = du.duhamel_eval(du.ForcingSpec(1.0, 0.0, region="inner"), x, t).u
    b = du.duhamel_eval(du.ForcingSpec(1.0, 0.0, region="outer"), x, t).u
    assert a > 0 and b > 0


@given(st.floats(-4, 4).filter(lambda a: abs(a) > 1e-3))
@settings(max_examples=3, deadline=None)
def test_linearity_in_amplitude(a):
    base = du.duhamel_eval(du.ForcingSpec(1.0, 0.5), 20.0, 3e3)
    v = du.duhamel_eval(du.ForcingSpec(1.0, 0.5, amplitude=a), 20.0, 3e3)
    assert v.u == pytest.approx(a * base.u, rel=1e-5)


def test_monotone_in_support():
    t, x = 1e4, 0.0
    us = [du.duhamel_eval(du.ForcingSpec(1.0, 0.0, K1=k), x, t).u for k in (0.5, 1.0, 2.0)]
    assert us[0] < us[1] < us[2]


def test_tolerance_refinement_converges():
    f = du.ForcingSpec(2.0, -1.0, region="outer")
    coarse = du.duhamel_eval(f, 500.0, 1e4, rtol=1e-6).u
    fine = du.duhamel_eval(f, 500.0, 1e4, rtol=5e-7).u
    assert abs(coarse - fine) <= 1e-6 * abs(fine)


def test_inner_bounded_example():
    # gamma = 1, q = 1: u(0, t) tracks the shape t^(1-gamma) (log t)^q = log t
    f = du.ForcingSpec(1.0, 1.0)
    ts = np.array([1e3, 1e5, 1e7, 1e9])
    us = np.array([du.duhamel_eval(f, 0.0, t).u for t in ts])
    assert np.all(us / np.log(ts) < 1.0)
    slope = np.polyfit(np.log(np.log(ts)), np.log(us), 1)[0]
    assert slope == pytest.approx(1.0, abs=0.05)


def test_outer_bound_constant_stable():
    f = du.ForcingSpec(2.0, -1.0, region="outer")
    rows = du.bound_report(f, [1e4, 1e6], [10.0])
    assert du.spread([r.Cemp for r in rows]) < 2.0


def test_seam_shapes_continuous():
    f = du.ForcingSpec(1.5, 0.5)
    t = 1e6
    x = np.sqrt(t)
    assert du.bound_shape(f, x * (1 - 1e-12), t) == pytest.approx(du.bound_shape(f, x, t), rel=1e-9)


def test_spread_edge_cases():
    assert du.spread([1.0, 2.0, -4.0]) == 4.0
    assert du.spread([1.0, 0.0]) == float("inf")
    assert du.spread([1.0, np.nan]) == float("inf")


def test_rows_csv(tmp_path):
    f = du.ForcingSpec(1.0, 0.0)
    rows = du.bound_report(f, [1e3], [0.0, 1.0])
    du.write_rows_csv(tmp_path / "d.csv", rows)
    lines = (tmp_path / "d.csv").read_text().splitlines()
    assert lines[0] == "gamma,q,K1,logt,x,u,bound,Cemp"
    assert len(lines) == 3
