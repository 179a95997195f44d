import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sst

from kacwild.checks import finite_variance_laws
from kacwild.coefficients import alpha_p
from kacwild.errors import ArgumentError, DomainError
from kacwild.laws import parse_law
from kacwild.simulator import simulate_batch
from kacwild.stats import (BERRY_ESSEEN_C1, ESSEEN_CONSTANT, EmpiricalCDF, RateReport, Theorem2Params,
                           constant_A, depth_moment_time, depth_moment_time_series, dkw_half_width,
                           esseen_chain, fit_log_slope, gaussian_cdf, kolmogorov_distance, m_of_t,
                           min_distance_over_sigma, rate_study, theorem2_bound_berry_esseen,
                           theorem2_bound_general, threshold_t0)


def test_gaussian_cdf_accuracy():
    x = np.linspace(-9, 9, 3601)
    ref = np.array([0.5 * math.erfc(-v / math.sqrt(2)) for v in x])
    assert np.max(np.abs(gaussian_cdf(x) - ref)) < 1e-15
    assert gaussian_cdf(1.0, 2.0) == pytest.approx(0.5 * math.erfc(-0.5 / math.sqrt(2)), abs=1e-16)


def test_dkw_value():
    assert dkw_half_width(100_000) == pytest.approx(0.0051470, abs=1e-7)
    assert dkw_half_width(100_000) < 0.0052


def test_ecdf():
    e = EmpiricalCDF.from_samples([3.0, 1.0, 2.0, 2.0])
    assert e.sorted_values.tolist() == [1.0, 2.0, 2.0, 3.0]
    assert e(np.array([0.5, 1.0, 2.0, 2.5, 3.0])).tolist() == [0.0, 0.25, 0.75, 0.75, 1.0]
    with pytest.raises(ArgumentError):
        EmpiricalCDF.from_samples([])


def test_distance_all_zero():
    assert kolmogorov_distance(EmpiricalCDF.from_samples(np.zeros(10)), 1.0) == pytest.approx(0.5)


def test_distance_quantiles():
    n = 100
    q = sst.norm.ppf((np.arange(1, n + 1) - 0.5) / n)
    assert kolmogorov_distance(EmpiricalCDF.from_samples(q), 1.0) == pytest.approx(0.005, abs=1e-12)


def test_distance_against_scipy(rng):
    v = rng.normal(0, 1.2, 5000)
    ours = kolmogorov_distance(EmpiricalCDF.from_samples(v), 1.0)
    assert ours == pytest.approx(sst.kstest(v, "norm").statistic, abs=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=200), st.integers(0, 1000))
def test_distance_order_invariant_and_positive(values, seed):
    v = np.array(values)
    perm = np.random.default_rng(seed).permutation(v.size)
    a = kolmogorov_distance(EmpiricalCDF.from_samples(v), 1.0)
    b = kolmogorov_distance(EmpiricalCDF.from_samples(v[perm]), 1.0)
    assert a == b
    assert 0 < a <= 1


def test_gaussian_draws_under_band(rng):
    v = rng.normal(size=100_000)
    assert kolmogorov_distance(EmpiricalCDF.from_samples(v), 1.0) < dkw_half_width(100_000)


def test_min_over_sigma(rng):
    v = rng.normal(0, 3.0, 50_000)
    d, s = min_distance_over_sigma(EmpiricalCDF.from_samples(v))
    assert s == pytest.approx(3.0, rel=0.03)
    assert d <= kolmogorov_distance(EmpiricalCDF.from_samples(v), 3.0) + 1e-12
    c = rng.standard_cauchy(50_000)
    d, _ = min_distance_over_sigma(EmpiricalCDF.from_samples(c))
    assert d > 0.05


def test_theorem2_params():
    p = Theorem2Params()
    c_max = (1 - 2 * alpha_p(3)) / 3
    assert p.c == pytest.approx(0.9 * c_max)
    assert p.B1 == pytest.approx(0.5 * p.c * 3) and p.B1 > 0
    assert p.B2 == pytest.approx(1 - 2 * alpha_p(3) - 3 * p.c) and p.B2 > 0
    for kwargs in [{"a": 0}, {"a": 1}, {"p": 2}, {"c": c_max}, {"c": -0.01}, {"delta": 1.5}]:
        with pytest.raises(DomainError):
            Theorem2Params(**kwargs)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(2.05, 12.0), st.floats(0.01, 0.99))
def test_params_positive_rates(a, p, frac):
    c_max = (1 - 2 * alpha_p(p)) / p
    par = Theorem2Params(a=a, p=p, c=frac * c_max)
    assert par.B1 > 0 and par.B2 > 0


def test_m_rademacher():
    par = Theorem2Params()
    law = parse_law("rademacher:1")
    assert threshold_t0(law, par) == 0.0
    for t in [0.5, 3.0, 20.0]:
        radius = par.x_t(t) ** (par.a - 1)
        expect = max(1.0 if radius < 1 else 0.0, math.exp(-par.B1 * t), math.exp(-par.B2 * t))
        assert m_of_t(t, law, par) == expect
        assert m_of_t(t, law, par) == max(math.exp(-par.B1 * t), math.exp(-par.B2 * t))


def test_m_monotone_to_zero():
    for spec in ["gaussian:1", "laplace:1", "uniform:1", "rademacher:1"]:
        t0 = threshold_t0(spec, Theorem2Params())
        ts = np.linspace(t0 + 1, t0 + 400, 60)
        vals = [m_of_t(t, spec) for t in ts]
        assert all(b <= a for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 0.01


def test_m_below_threshold():
    with pytest.raises(DomainError) as exc:
        m_of_t(0.1, "student:3")
    assert exc.value.info["t0"] > 0.1
    with pytest.raises(DomainError):
        threshold_t0("cauchy:1", Theorem2Params())


def test_constant_A():
    assert ESSEEN_CONSTANT == pytest.approx(24 / math.sqrt(2 * math.pi ** 3))
    assert constant_A(1.0) == pytest.approx((2 / math.pi) * (0.5 + 5 / 3) + ESSEEN_CONSTANT)
    assert constant_A(1.0) == pytest.approx(4.42704, abs=1e-5)


@pytest.mark.parametrize("spec,t", [("rademacher:1", 8.0), ("gaussian:1", 30.0), ("laplace:1", 60.0)])
def test_esseen_chain_dominated_by_A(spec, t):
    law = parse_law(spec)
    M = m_of_t(t, law)
    chain = esseen_chain(t, law)
    assert 0 < chain <= constant_A(law.sigma) * M ** 0.2


def test_general_bound_symmetric_and_asymmetric():
    t = 8.0
    b = theorem2_bound_general(t, "rademacher:1")
    assert b == pytest.approx(constant_A(1.0) * m_of_t(t, "rademacher:1") ** 0.2)
    law = parse_law("twopoint:0,2,0.5")
    t0 = threshold_t0(law, Theorem2Params())
    t = t0 + 5
    expected = constant_A(law.sigma) * m_of_t(t, law) ** 0.2 + 0.25 * math.exp(-t)
    assert theorem2_bound_general(t, law) == pytest.approx(expected, rel=1e-14)


def test_general_bound_nonincreasing():
    vals = [theorem2_bound_general(t, "rademacher:1") for t in np.linspace(0, 100, 51)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_berry_esseen_rademacher():
    for t in [0.0, 2.0, 8.0]:
        expected = BERRY_ESSEEN_C1 * math.exp(-t * (1 - 8 / (3 * math.pi)))
        assert theorem2_bound_berry_esseen(t, "rademacher:1") == pytest.approx(expected, rel=1e-12)
    assert 1 - 2 * alpha_p(3) == pytest.approx(0.15117, abs=1e-5)
    assert 1 - 2 * alpha_p(3) == pytest.approx(1 - 8 / (3 * math.pi), abs=1e-14)


@pytest.mark.parametrize("spec", ["gaussian:1", "uniform:2", "laplace:1", "student:5", "twopoint:0,2,0.5"])
def test_berry_esseen_lyapunov_at_zero(spec):
    assert theorem2_bound_berry_esseen(0.0, spec) >= BERRY_ESSEEN_C1 - 1e-12


def test_berry_esseen_errors():
    with pytest.raises(DomainError):
        theorem2_bound_berry_esseen(1.0, "student:3")
    with pytest.raises(DomainError):
        theorem2_bound_berry_esseen(1.0, "gaussian:1", delta=0.5)
    assert theorem2_bound_berry_esseen(1.0, "gaussian:1", delta=0.5, C_delta=1.0) > 0
    with pytest.raises(DomainError):
        theorem2_bound_berry_esseen(1.0, "gaussian:1", delta=0.0, C_delta=1.0)


def test_depth_moment_time_examples():
    for t in [0.0, 1.0, 7.5]:
        assert depth_moment_time(0.5, t) == 1.0
        assert depth_moment_time(1.0, t) == pytest.approx(math.exp(t))
    a1 = alpha_p(1.0)
    assert a1 == pytest.approx(2 / math.pi)
    assert depth_moment_time(a1, 3.0) == pytest.approx(math.exp(3 * (4 / math.pi - 1)))
    assert depth_moment_time(a1, 3.0) > depth_moment_time(a1, 1.0) > 1
    with pytest.raises(ArgumentError):
        depth_moment_time(0.0, 1.0)


@pytest.mark.parametrize("x", [3 / 8, 0.5, 2 / math.pi, 1.0])
@pytest.mark.parametrize("t", [0.3, 1.0, 3.0])
def test_depth_moment_time_is_nu_average(x, t):
    assert depth_moment_time_series(x, t) == pytest.approx(depth_moment_time(x, t), rel=1e-10)


@pytest.mark.parametrize("t", [1.0, 3.0])
def test_depth_moment_time_monte_carlo(t, rng):
    from kacwild import _kernels
    from kacwild.simulator import sample_nu

    xs = np.array([3 / 8, 0.5, 2 / math.pi])
    size = 100_000
    nus = sample_nu(t, rng, size)
    out = np.empty((size, xs.size))
    _kernels.walk_depth_powers(nus, rng.random(int(nus.sum()) - size), xs, out)
    for k, x in enumerate(xs):
        se = out[:, k].std(ddof=1) / math.sqrt(size)
        exact = depth_moment_time(x, t)
        assert abs(out[:, k].mean() - exact) <= 3 * se + 1e-12


def test_fit_log_slope():
    t = [1.0, 2.0, 3.0, 4.0]
    d = [math.exp(-0.3 * s) for s in t]
    slope, used = fit_log_slope(t, d, 0.0)
    assert slope == pytest.approx(-0.3) and used == 4
    assert fit_log_slope(t, d, 10.0) == (None, 0)


def test_rate_study_gaussian():
    rep = rate_study("gaussian:1", [0.5, 2.0], 20_000, 5)
    assert rep.status == "converged below resolution"
    assert rep.fitted_log_slope is None
    assert all(d < 2 * rep.dkw_half_width for d in rep.distances)
    assert rep.dkw_half_width == dkw_half_width(20_000)


def test_rate_study_rademacher_small():
    rep = rate_study("rademacher:1", [1.0, 2.0, 3.0], 20_000, 9)
    assert rep.status == "ok"
    assert rep.fitted_log_slope < 0
    assert rep.theoretical_exponent == pytest.approx(1 - 8 / (3 * math.pi))
    for d, b in zip(rep.distances, rep.bound_curve):
        assert d <= b + rep.dkw_half_width
    data = json.loads(rep.to_json())
    assert data["t_grid"] == [1.0, 2.0, 3.0]
    lines = rep.to_csv().splitlines()
    assert lines[0] == "# kacwild rate report v1"
    assert lines[1] == "t,distance,dkw,bound_general,bound_be"
    assert len(lines) == 5


def test_rate_study_reproducible_and_threads():
    a = rate_study("rademacher:1", [1.0, 2.0], 5000, 3)
    b = rate_study("rademacher:1", [1.0, 2.0], 5000, 3, threads=2)
    assert a.distances == b.distances


def test_rate_study_infinite_variance_minimises():
    rep = rate_study("cauchy:1", [1.0], 5000, 3)
    assert rep.sigma_used[0] > 0
    assert math.isnan(rep.bound_curve[0]) and math.isnan(rep.bound_general[0])
    assert rep.theoretical_exponent is None


def test_rate_study_grid_must_increase():
    with pytest.raises(ArgumentError):
        rate_study("gaussian:1", [2.0, 1.0], 100, 1)


def test_rate_report_empty_csv():
    rep = RateReport("gaussian:1", [], [], 0.01, None, None, [])
    assert rep.to_csv().splitlines()[1] == "t,distance,dkw,bound_general,bound_be"


@pytest.mark.parametrize("t", [2.0, 4.0, 8.0])
def test_general_bound_holds_for_builtin_laws(t):
    size = 10_000
    seeds = np.random.SeedSequence(int(t)).generate_state(7, dtype=np.uint64)
    for spec, seed in zip(finite_variance_laws(), seeds):
        law = parse_law(spec)
        try:
            bound = theorem2_bound_general(t, law)
        except DomainError:
            continue  # outside the validity regime
        v = simulate_batch(t, law, size, int(seed)).values
        d = kolmogorov_distance(EmpiricalCDF.from_samples(v), law.sigma)
        assert d <= bound + dkw_half_width(size)
