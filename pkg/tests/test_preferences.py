import logging
import math

import numpy as np
import pandas as pd
import pytest

from esg_merton.core import PreferenceManager
from esg_merton.data import DataManager
from esg_merton.data.default_configs import RATING_LETTER_MAP
from esg_merton.errors import DomainError, RatingParseError
from esg_merton.models import EsgScoreTable, RiskAversionProfile

POINT = (1.2, 0.9, 1.1)


def test_utility_and_log_utility_agree(preferences, profile):
    u = preferences.utility_eval(profile, *POINT)
    log_abs, sign = preferences.log_abs_utility(profile, *np.log(POINT))
    assert sign == -1.0
    assert u < 0
    assert math.log(abs(u)) == pytest.approx(float(log_abs), rel=1e-13)


def test_utility_rejects_bad_inputs(preferences, profile):
    with pytest.raises(DomainError):
        preferences.utility_eval(profile, 1.0, 0.0, 1.0)
    with pytest.raises(DomainError):
        preferences.utility_eval(RiskAversionProfile(-1.0, 0.0, -1.0), 1.0, 1.0, 1.0)


def test_gradient_and_hessian_match_finite_differences(preferences, profile):
    h = 1e-6
    x = np.array(POINT)
    grad = preferences.utility_gradient(profile, x)
    hess = preferences.utility_hessian(profile, x)
    fd_grad = np.empty(3)
    fd_hess = np.empty((3, 3))
    for i in range(3):
        step = np.zeros(3)
        step[i] = h
        fd_grad[i] = (preferences.utility_eval(profile, *(x + step))
                      - preferences.utility_eval(profile, *(x - step))) / (2 * h)
        fd_hess[i] = (preferences.utility_gradient(profile, x + step)
                      - preferences.utility_gradient(profile, x - step)) / (2 * h)
    np.testing.assert_allclose(grad, fd_grad, rtol=1e-6)
    np.testing.assert_allclose(hess, fd_hess, rtol=1e-5, atol=1e-9)
    np.testing.assert_allclose(hess, hess.T, rtol=1e-14)


def test_third_cross_partial_is_positive(preferences, profile):
    assert preferences.third_cross_partial(profile, POINT) > 0


def _hessian_nsd(hessian: np.ndarray) -> bool:
    eigenvalues = np.linalg.eigvalsh(hessian)
    return bool(eigenvalues.max() <= 1e-12 * max(1.0, np.abs(eigenvalues).max()))


def test_risk_aversion_report_on_random_profiles(preferences):
    rng = np.random.default_rng(2024)
    checked = 0
    for k in range(100):
        if k % 2 == 0:
            alphas = rng.uniform(-5.0, -0.1, size=3)
        else:
            alphas = rng.uniform(0.05, 0.6, size=3)
        if abs(alphas.sum() - 1.0) < 1e-6:
            continue
        profile = RiskAversionProfile(*(float(a) for a in alphas))
        x = rng.uniform(0.5, 2.0, size=3)
        report = preferences.risk_aversion_report(profile, x)

        assert report.km == _hessian_nsd(preferences.utility_hessian(profile, x))
        gradient = preferences.utility_gradient(profile, x)
        assert report.monotonic == bool(np.all(gradient > 0))
        assert report.fr == bool(np.all(alphas < 0))
        assert report.s
        np.testing.assert_allclose(report.rra, 1.0 - alphas)
        np.testing.assert_allclose(report.ara, (1.0 - alphas) / x)
        checked += 1
    assert checked >= 95


def test_mixed_sign_profile_is_not_monotonic(preferences):
    report = preferences.risk_aversion_report(RiskAversionProfile(-2.0, 0.5, -1.0))
    assert not report.monotonic
    assert not report.fr
    assert report.km_conditions["alpha_m+alpha_g<1"]


def test_kappa_map(preferences, idt_scores):
    flat = preferences.kappa_map(-3.0, 0.0, idt_scores)
    assert flat == RiskAversionProfile.uniform(-3.0)

    profile = preferences.kappa_map(-3.0, 0.4, idt_scores)
    assert profile.is_admissible
    assert profile.alpha_g == pytest.approx(-3.0 * math.exp(0.4 * (7.3 - 9.386363636)))
    assert profile.alpha_b == pytest.approx(-3.0 * math.exp(0.4 * (7.3 - 3.431818182)))

    with pytest.raises(DomainError):
        preferences.kappa_map(1.0, 0.4, idt_scores)
    with pytest.raises(DomainError):
        preferences.kappa_map(-3.0, -0.1, idt_scores)


def test_kappa_map_warns_on_unordered_scores(preferences, caplog):
    caplog.set_level(logging.WARNING, logger="esg_merton")
    scores = EsgScoreTable(e_market=5.0, e_green=4.0, e_brown=6.0)
    preferences.kappa_map(-2.0, 0.3, scores)
    assert any("E_b <= E_m <= E_g" in record.getMessage() for record in caplog.records)


def test_implied_kappa_round_trip(preferences, shen_scores):
    profile = preferences.kappa_map(-2.5, 0.37, shen_scores)
    assert preferences.implied_kappa(profile, shen_scores, "g") == pytest.approx(0.37, rel=1e-12)
    assert preferences.implied_kappa(profile, shen_scores, "b") == pytest.approx(0.37, rel=1e-12)
    with pytest.raises(DomainError):
        preferences.implied_kappa(profile, shen_scores, "m")


def test_rra_score_sensitivity_recovers_kappa():
    alpha_i = -3.0 * math.exp(0.5 * (7.3 - 9.0))
    assert PreferenceManager.rra_score_sensitivity(0.5, alpha_i) / alpha_i == pytest.approx(0.5)


def test_mrs_matches_gradient_ratio(preferences, profile):
    x = np.array(POINT)
    gradient = preferences.utility_gradient(profile, x)
    result = preferences.mrs_prs(profile, "g", "b", x[1], x[2])
    assert result["mrs"] == pytest.approx(gradient[1] / gradient[2], rel=1e-12)
    assert result["prs"] == pytest.approx(profile.alpha_b / profile.alpha_g)

    symmetric = preferences.mrs_prs(RiskAversionProfile.uniform(-2.0), "m", "g", 1.5, 1.5)
    assert symmetric == {"mrs": 1.0, "prs": 1.0}
    with pytest.raises(DomainError):
        preferences.mrs_prs(profile, "g", "g", 1.0, 1.0)


def test_prs_under_kappa_map(preferences):
    scores = EsgScoreTable(e_market=7.3, e_green=9.4, e_brown=3.4)
    profile = preferences.kappa_map(-3.0, 1.0, scores)
    assert preferences.mrs_prs(profile, "m", "b", 1.0, 1.0)["prs"] == pytest.approx(math.exp(3.9), rel=1e-12)
    assert preferences.mrs_prs(profile, "m", "g", 1.0, 1.0)["prs"] == pytest.approx(math.exp(-2.1), rel=1e-12)

    previous = math.inf
    for kappa in (0.0, 0.2, 0.5, 1.0):
        prs_bg = preferences.mrs_prs(preferences.kappa_map(-3.0, kappa, scores), "b", "g", 1.0, 1.0)["prs"]
        assert prs_bg == pytest.approx(math.exp(kappa * (3.4 - 9.4)), rel=1e-12)
        assert prs_bg < previous
        previous = prs_bg


def test_indifference_curve_hits_level(preferences, idt_scores):
    base = RiskAversionProfile.uniform(-3.0)
    curve = preferences.indifference_curve_level(base, -0.064, xm=1.2, kappa=0.1, scores=idt_scores)
    mapped = preferences.kappa_map(-3.0, 0.1, idt_scores)
    for xg in (0.6, 1.0, 1.7):
        xb = float(curve.xb_for(xg))
        assert preferences.utility_eval(mapped, 1.2, xg, xb) == pytest.approx(-0.064, rel=1e-10)

    xg, h = 1.1, 1e-6
    fd_slope = (float(curve.xb_for(xg + h)) - float(curve.xb_for(xg - h))) / (2 * h)
    assert curve.slope_at(xg) == pytest.approx(fd_slope, rel=1e-6)
    assert curve.slope_at(xg) < 0


def test_indifference_curve_rejects_positive_level(preferences, profile):
    with pytest.raises(DomainError):
        preferences.indifference_curve_level(profile, 0.5)
    with pytest.raises(DomainError):
        preferences.indifference_curve_level(profile, -0.1, kappa=0.2)


def test_scores_from_ratings_file(preferences, ratings_csv):
    ratings = DataManager().read_ratings(ratings_csv)
    company_scores, market = preferences.esg_scores_from_ratings(ratings, RATING_LETTER_MAP)
    assert company_scores["IDT"] == pytest.approx(310 / 33, rel=1e-12)
    assert company_scores["WMT"] == 6.0
    assert company_scores["KO"] == 8.0
    assert market == pytest.approx((310 / 33 + 6.0 + 8.0) / 3, rel=1e-12)

    table = preferences.score_table_for(company_scores, market, "IDT", "WMT")
    assert table.is_ordered

    green, brown = preferences.rank_companies(company_scores, top=2)
    assert list(green.index) == ["IDT", "KO"]
    assert list(brown.index) == ["KO", "WMT"]


def test_scores_with_explicit_market(preferences):
    ratings = pd.DataFrame({"company": ["SPX", "SPX", "A1", "B1"], "rating": ["BBB", "BB", "AA", "C"]})
    company_scores, market = preferences.esg_scores_from_ratings(ratings, RATING_LETTER_MAP, market_company="SPX")
    assert market == 6.5
    assert "SPX" not in company_scores.index
    with pytest.raises(DomainError):
        preferences.esg_scores_from_ratings(ratings, RATING_LETTER_MAP, market_company="NOPE")


def test_unknown_rating_letter_reports_row(preferences):
    ratings = pd.DataFrame({"company": ["X", "Y", "Z"], "rating": ["AA", "A+", "B"]})
    with pytest.raises(RatingParseError) as info:
        preferences.esg_scores_from_ratings(ratings, RATING_LETTER_MAP)
    assert info.value.row == 2
    with pytest.raises(DomainError):
        preferences.score_table_for(pd.Series({"X": 9.0}), 7.0, "X", "missing")
