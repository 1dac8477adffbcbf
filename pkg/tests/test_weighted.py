import math
from decimal import Decimal, getcontext

import numpy as np
import pytest
from hypothesis import given, strategies as st

from polyva.arnoldi import build_basis, fit_1d
from polyva.diagnostics import ortho_defect, sup_error
from polyva.geometry import Interval, SampleSet, equispaced_points, named_domain, rejection_sample
from polyva.indexing import make_index_set, total_degree_indices
from polyva.weighted import (
    LeverageDistribution,
    compute_pi,
    expected_gram,
    gram_report,
    mhat_rule_count,
    min_subsample_count,
    qr_weight_fit,
    select_and_scale,
    stability_constant,
    va_weight_fit,
)


def _decimal_count(N, eps, delta, alpha):
    getcontext().prec = 40
    val = 4 * N * (1 + Decimal(str(eps))) / Decimal(str(delta)) ** 2 * (2 * N / Decimal(str(alpha))).ln()
    return int(val.to_integral_value(rounding="ROUND_CEILING"))


def test_min_subsample_count_examples():
    assert min_subsample_count(10, 0.0, 0.5, 0.01) == 1217
    assert min_subsample_count(1, 0.0, 0.5, 0.4) == 26
    # 404 / 0.09 * ln(4000) = 37231.07..., rounded up
    assert min_subsample_count(100, 0.01, 0.3, 0.05) == _decimal_count(100, 0.01, 0.3, 0.05) == 37232


@given(st.integers(1, 500), st.floats(0, 0.3), st.floats(0.05, 0.6), st.floats(0.001, 0.49))
def test_min_subsample_count_matches_decimal_oracle(N, eps, delta, alpha):
    assert min_subsample_count(N, eps, delta, alpha) == _decimal_count(N, eps, delta, alpha)


@pytest.mark.parametrize("args", [(0, 0, 0.5, 0.1), (5, 1.0, 0.5, 0.1), (5, 0.2, 0.8, 0.1), (5, 0, 0.5, 0.5)])
def test_min_subsample_count_ranges(args):
    with pytest.raises(ValueError):
        min_subsample_count(*args)


def test_mhat_rule():
    assert mhat_rule_count("NlogN", 100) == math.ceil(400 * math.log(100))
    assert mhat_rule_count("N", 17) == 17
    assert mhat_rule_count(55, 10) == 55
    with pytest.raises(ValueError):
        mhat_rule_count("NsqrtN", 10)


def _three_point_basis():
    return build_basis(np.array([-1.0, 0.0, 1.0]), total_degree_indices(1, 1))


def test_pi_three_point_example():
    pi = compute_pi(_three_point_basis())
    np.testing.assert_allclose(pi.pi, [5 / 12, 1 / 6, 5 / 12], atol=1e-15)


def test_pi_constant_basis_is_uniform():
    X = np.linspace(0, 1, 7)
    basis = build_basis(X, total_degree_indices(1, 0))
    np.testing.assert_allclose(compute_pi(basis).pi, np.full(7, 1 / 7), atol=1e-15)


@given(st.integers(0, 10_000))
def test_pi_normalised_and_positive(seed):
    X = rejection_sample(named_domain("domain3"), 60, seed=seed)
    pi = compute_pi(build_basis(X, make_index_set("total", 2, 4))).pi
    assert abs(pi.sum() - 1) <= 1e-12 and np.all(pi > 0)


def test_leverage_distribution_validation():
    with pytest.raises(ValueError):
        LeverageDistribution(np.array([0.5, 0.5, 0.0]))
    with pytest.raises(ValueError):
        LeverageDistribution(np.array([0.5, 0.6]))


def test_expected_gram_three_point_enumeration():
    basis = _three_point_basis()
    G = expected_gram(basis.Q, compute_pi(basis))
    np.testing.assert_allclose(G, np.eye(2), atol=1e-12)


@given(st.integers(3, 20), st.integers(0, 1000))
def test_expected_gram_identity_small_instances(M, seed):
    X = rejection_sample(Interval(-1, 2), M, seed=seed)
    n = min(M - 2, 4)
    basis = build_basis(X, total_degree_indices(1, n))
    G = expected_gram(basis.Q, compute_pi(basis))
    np.testing.assert_allclose(G, basis.Q.T @ basis.Q / M, atol=1e-12)
    assert np.max(np.abs(G - np.eye(basis.N))) <= ortho_defect(basis) + 1e-12


def test_selection_scaling_invariant():
    X = rejection_sample(named_domain("domain2"), 300, seed=2)
    basis = build_basis(X, make_index_set("total", 2, 4))
    f = np.cos(X.points[:, 0])
    pi = compute_pi(basis)
    sel = select_and_scale(basis.Q, f, pi, 40, seed=5)
    scale = 1 / np.sqrt(40 * 300 * pi.pi[sel.k])
    np.testing.assert_allclose(sel.Qhat, basis.Q[sel.k] * scale[:, None], rtol=1e-15)
    np.testing.assert_allclose(sel.fhat, f[sel.k] * scale, rtol=1e-15)
    again = select_and_scale(basis.Q, f, pi, 40, seed=5)
    np.testing.assert_array_equal(sel.k, again.k)
    with pytest.raises(ValueError):
        select_and_scale(basis.Q, f, pi, 10, seed=5)


def test_uniform_selection_covering_each_row_once():
    X = np.linspace(-1, 1, 12)
    basis = build_basis(X, total_degree_indices(1, 0))
    pi = compute_pi(basis)
    sel = select_and_scale(basis.Q, None, pi, 12, seed=0)
    # with the constant basis every scaled row is 1/sqrt(M_hat)
    np.testing.assert_allclose(sel.Qhat, np.full((12, 1), 1 / np.sqrt(12)))


def test_stability_constant():
    assert stability_constant(0.5, 0.0) == pytest.approx(math.sqrt(1.5) / 0.5)
    assert stability_constant(0.6, 0.4) == math.inf


def test_gram_report_fields():
    X = rejection_sample(named_domain("domain2"), 3000, seed=0)
    basis = build_basis(X, make_index_set("total", 2, 6))
    sel = select_and_scale(basis.Q, None, compute_pi(basis), mhat_rule_count("NlogN", basis.N), seed=1)
    rep = gram_report(sel, 0.5, ortho_defect(basis))
    ev = np.linalg.eigvalsh(sel.Qhat.T @ sel.Qhat)
    assert rep.kappa2 == pytest.approx(ev[-1] / ev[0], rel=1e-10)
    assert rep.spectral_deviation == pytest.approx(np.linalg.norm(sel.Qhat.T @ sel.Qhat - np.eye(basis.N), 2), rel=1e-10)
    assert rep.kappa2 >= 1


def test_exact_subsample_has_small_gram_deviation():
    # full uniform coverage of an orthonormal Q: G = Q^T Q / M
    X = equispaced_points(Interval(-1, 1), 200)
    basis = build_basis(X, total_degree_indices(1, 5))
    eps = ortho_defect(basis)
    M = basis.M
    from polyva.weighted import WeightedSelection

    sel = WeightedSelection(np.arange(M), basis.Q / np.sqrt(M))
    assert gram_report(sel).spectral_deviation <= eps + 1e-15


def test_stability_bound_on_coefficients():
    dom = named_domain("domain2")
    iset = make_index_set("total", 2, 8)
    N = len(iset)
    for seed in range(5):
        res = va_weight_fit(dom, lambda Z: np.exp(Z[:, 0]) * np.sin(2 * Z[:, 1]), iset,
                            M=math.ceil(N * N * math.log(N)), M_hat=mhat_rule_count("NlogN", N), seed=seed)
        rep = res.report
        if rep.spectral_deviation <= rep.delta_hat + rep.eps_m:
            d = res.approximant.d
            assert np.linalg.norm(d) <= rep.stability_constant * np.linalg.norm(res.selection.fhat)


def test_full_selection_approaches_unweighted_fit():
    x = np.linspace(-1, 1, 400)
    f = np.exp(x)
    basis, approx = fit_1d(x, f, 8)
    res = va_weight_fit(Interval(-1, 1), lambda Z: np.exp(Z[:, 0]), total_degree_indices(1, 8), 400, 400,
                        seed=0, samples=SampleSet(x.reshape(-1, 1)))
    Y = np.linspace(-1, 1, 3000)
    assert np.max(np.abs(res.approximant(Y) - approx(Y))) < 1e-6


def test_weighted_fit_uses_full_sample_recurrence():
    dom = named_domain("domain1")
    iset = make_index_set("total", 2, 5)
    res = va_weight_fit(dom, lambda Z: Z[:, 0] * Z[:, 1], iset, 2000, 200, seed=4)
    np.testing.assert_array_equal(res.approximant.H, res.basis.H)
    approx, report = res
    assert approx is res.approximant and report is res.report


def test_weighted_error_tracks_unweighted_1d():
    N = 40
    f = lambda Z: np.sin(5 * np.cos(5 * Z[:, 0]))  # noqa: E731
    dom = Interval(-1, 1)
    M = math.ceil(N * N * math.log(N))
    Y = equispaced_points(dom, 10 * M)
    res = va_weight_fit(dom, f, total_degree_indices(1, N - 1), M, mhat_rule_count("NlogN", N), seed=0)
    X = rejection_sample(dom, M, seed=0)
    _, p = fit_1d(X, f(X.points), N - 1)
    assert sup_error(res.approximant, f, Y) <= 10 * sup_error(p, f, Y)


def test_qr_weight_low_degree_agrees_with_va_weight():
    N = 15
    f = lambda Z: np.exp(np.sin(3 * Z[:, 0]))  # noqa: E731
    dom = Interval(-1, 1)
    M = math.ceil(N * N * math.log(N))
    Y = equispaced_points(dom, 10 * M)
    a = va_weight_fit(dom, f, total_degree_indices(1, N - 1), M, mhat_rule_count("NlogN", N), seed=2)
    b = qr_weight_fit(dom, f, total_degree_indices(1, N - 1), M, mhat_rule_count("NlogN", N), seed=2)
    ea, eb = sup_error(a.approximant, f, Y), sup_error(b.approximant, f, Y)
    assert 0.1 < ea / eb < 10


def test_weighted_argument_checks():
    iset = total_degree_indices(1, 9)
    with pytest.raises(ValueError):
        va_weight_fit(Interval(0, 1), np.sin, iset, 50, 5, seed=0)
    with pytest.raises(ValueError):
        qr_weight_fit(Interval(0, 1), np.sin, iset, 50, 60, seed=0)
