import math

import pytest

from errors import ConfigurationError
from growth_model import GrowthSchedule
from monte_carlo import MISS_GIVEN_LEFT_FLOOR
from theorem_suite import (CATALOG, CERTIFICATE_HEADER, Certificate, CertificateRow, default_case,
                           fit_exponent, measure_ladder, round_profile, run_case, run_cases,
                           scaling_table)


def test_catalog_ids():
    for theorem_id in ("T1.1-1", "T1.1-2", "T1.1-3", "T1.1-4", "T1.2-1", "T1.2-2", "T1.3",
                       "T1.3-gen", "T1.4", "T1.5", "T1.6", "C1.7", "C-simpleKn", "C-expander",
                       "C-lollipop", "C-Metro", "T-moderate", "A-initial", "X-below-hit"):
        assert theorem_id in CATALOG
    assert CATALOG["X-below-hit"].exploratory


def test_unknown_theorem():
    with pytest.raises(ConfigurationError):
        default_case("T9.9")


def test_default_case_fills_catalog():
    case = default_case("T1.2-1", params={"C": 3.0})
    assert case.family == "path"
    assert case.walk == "lazy_simple"
    assert case.params["C"] == 3.0
    assert case.ladder == (8, 16, 32, 64)


def test_round_profile_complete_uniform():
    profile = round_profile("complete", "uniform", 5)
    assert [r.t_hit for r in profile] == pytest.approx([0.0, 2.0, 3.0, 4.0, 5.0])
    assert profile[4].r == pytest.approx(5 / 4)
    assert profile[2].edges == 3


def test_round_profile_lazy_complete_ratio():
    assert round_profile("complete", "lazy_simple", 3)[2].r == pytest.approx(1.5)


def test_measure_ladder_engines_agree():
    schedule = GrowthSchedule(kind="linear", horizon=20, C=1.0)
    closed = measure_ladder(schedule, "complete", "uniform_complete", [5, 20], engine="closed")
    exact = measure_ladder(schedule, "complete", "uniform_complete", [5, 20], engine="exact")
    assert closed[5] == pytest.approx(exact[5], rel=1e-10)
    assert closed[20] == pytest.approx(exact[20], rel=1e-10)


def test_measure_ladder_closed_needs_complete():
    schedule = GrowthSchedule(kind="linear", horizon=5)
    with pytest.raises(ConfigurationError):
        measure_ladder(schedule, "path", "lazy_simple", [5], engine="closed")


def test_fit_exponent():
    slope, residual = fit_exponent([1, 2, 4, 8], [3, 6, 12, 24])
    assert slope == pytest.approx(1.0)
    assert residual == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ConfigurationError):
        fit_exponent([2, 4], [1.0, 0.0])


def test_certificate_row_margin():
    assert CertificateRow("a", 4, 1.0, 3.0, "<=").margin == 2.0
    assert CertificateRow("b", 4, 5.0, 3.0, ">=").margin == 2.0
    assert CertificateRow("c", 4, 5.0, 3.0, "info").margin is None


def test_linear_complete_passes():
    certificate = run_case(default_case("T1.1-1"))
    assert certificate.verdict == "pass"
    bound = 1 / math.expm1(1.0)
    assert all(row.bound == pytest.approx(bound) for row in certificate.rows)
    assert [row.n for row in certificate.rows] == [10, 100, 1000]


@pytest.mark.parametrize("theorem_id", ["T1.1-2", "T1.1-3", "T1.1-4", "C-simpleKn"])
def test_complete_graph_theorems_pass(theorem_id):
    assert run_case(default_case(theorem_id)).verdict == "pass"


def test_hitting_linear_on_path():
    certificate = run_case(default_case("T1.2-1", ladder=(8, 16)))
    assert certificate.verdict == "pass"
    assert certificate.audit[0].label.startswith("hypothesis:")
    assert all(row.measured <= 1.0 for row in certificate.rows)


def test_violated_hypothesis_is_inapplicable():
    certificate = run_case(default_case("T1.2-1", params={"C": 0.5}, ladder=(8,)))
    assert certificate.verdict == "inapplicable"
    assert certificate.violated == "C > 1"
    rows = list(certificate.csv_rows())
    assert rows[-1][1] == "hypothesis:C > 1"
    assert rows[-1][-1] == "inapplicable"


def test_user_schedule_too_slow_is_inapplicable():
    case = default_case("T1.1-1", params={"C": 2.0, "schedule": "linear:C=1"}, ladder=(10,))
    certificate = run_case(case)
    assert certificate.verdict == "inapplicable"
    assert certificate.violated == "f(i) >= C i"


def test_wrong_family_is_inapplicable():
    certificate = run_case(default_case("T1.1-1", family="complete", walk="lazy_simple",
                                        ladder=(10,)))
    assert certificate.verdict == "inapplicable"


def test_exploratory_never_fails():
    certificate = run_case(default_case("X-below-hit", ladder=(8, 16)))
    assert certificate.verdict == "exploratory"
    assert not certificate.failed


def test_initial_clique_case():
    certificate = run_case(default_case("A-initial", ladder=(20, 50)))
    assert certificate.verdict == "pass"


@pytest.mark.parametrize("theorem_id,ladder", [
    ("T1.3", (8, 16)),
    ("T1.3-gen", (8, 16)),
    ("T1.4", (8, 16)),
    ("T1.5", (8, 16)),
    ("C-lollipop", (8, 16)),
    ("C-Metro", (8, 16)),
    ("T-moderate", (8, 16)),
    ("C-expander", (16, 32)),
])
def test_small_ladders_hold(theorem_id, ladder):
    assert run_case(default_case(theorem_id, ladder=ladder)).verdict == "pass"


def test_run_cases_result_dict():
    cases = [default_case("T1.1-1", ladder=(10,)),
             default_case("T1.2-1", params={"C": 0.5}, ladder=(8,))]
    outcome = run_cases(cases)
    assert outcome["total"] == 2
    assert outcome["executed"] == 2
    assert outcome["failed"] == 0
    assert outcome["success"]
    verdicts = [r["value"].verdict for r in outcome["results"]]
    assert verdicts == ["pass", "inapplicable"]


def test_failed_certificate_counts_as_failure():
    rows = [CertificateRow("E[U] <= 0", 5, 1.0, 0.0, "<=", ok=False)]
    certificate = Certificate("T1.1-1", rows, "fail")
    assert certificate.failed
    row = next(certificate.csv_rows())
    assert len(row) == len(CERTIFICATE_HEADER)
    assert row[5] == -1.0


def test_scaling_table_complete():
    table = scaling_table("complete", "uniform_complete", [0.0, 0.5], [10, 100, 1000, 10000],
                          C=1.0)
    assert len(table) == 8
    slopes = {row.gamma: row.slope for row in table}
    assert slopes[0.5] == pytest.approx(0.5, abs=0.15)
    with pytest.raises(ConfigurationError):
        scaling_table("complete", "uniform_complete", [0.5], [10, 100], C=1.0)


@pytest.mark.slow
@pytest.mark.parametrize("theorem_id", ["T1.2-1", "T1.2-2", "T1.3", "T1.4", "T1.5", "C1.7",
                                        "C-expander", "C-lollipop", "C-Metro", "T-moderate",
                                        "T1.3-gen"])
def test_default_ladders(theorem_id):
    assert run_case(default_case(theorem_id)).verdict == "pass"


@pytest.mark.slow
def test_path_lower_bound_certificate():
    certificate = run_case(default_case("T1.6", trials=2000))
    assert certificate.verdict == "pass"


def test_sublinear_schedule_grows_and_certifies_both_sides():
    certificate = run_case(default_case("T1.1-3", ladder=(100, 1000)))
    assert certificate.verdict == "pass"
    growth = certificate.audit[-1]
    assert growth.label == "hypothesis:f nondecreasing and unbounded"
    # f = ceil(sqrt(i)) for C = 1, gamma = 1/2
    assert growth.measured == 32.0
    assert growth.bound == 1.0
    upper = [r for r in certificate.rows if r.label == "E[U] <= n/phi(n)"]
    assert [r.bound for r in upper] == pytest.approx([10.0, 1000 / math.sqrt(1000)])


def test_sublinear_rejects_schedule_below_target():
    case = default_case("T1.1-3", params={"schedule": "constant:c=3"}, ladder=(10,))
    certificate = run_case(case)
    assert certificate.verdict == "inapplicable"
    assert certificate.violated == "f(i) >= C i^(1-gamma)"


@pytest.mark.parametrize("walk", ["lazy_simple", "lazy_metropolis"])
@pytest.mark.parametrize("gamma", [pytest.param(0.0, marks=pytest.mark.slow), 0.5, 1.0])
def test_path_scaling_exponent(walk, gamma):
    case = default_case("C1.7", walk=walk, params={"gamma": gamma}, ladder=(16, 32, 64, 128))
    certificate = run_case(case)
    assert certificate.verdict == "pass"
    fit = [r for r in certificate.rows if r.label.startswith("fit exponent")]
    assert fit[0].measured == pytest.approx(gamma, abs=0.15)


@pytest.mark.parametrize("n0,Delta", [(5, 1.0), (20, 5.0)])
def test_initial_clique_at_two_hundred(n0, Delta):
    certificate = run_case(default_case("A-initial", params={"n0": n0, "Delta": Delta},
                                        ladder=(50, 200)))
    assert certificate.verdict == "pass"
    assert all(r.bound == 2 * n0 + Delta for r in certificate.rows)


def test_path_lower_bound_reports_miss_floor():
    certificate = run_case(default_case("T1.6", trials=300))
    floor = [r for r in certificate.rows
             if r.label == f"Pr[v_R missed | v_L at round R] >= {MISS_GIVEN_LEFT_FLOOR:g}"]
    assert len(floor) == 1
    assert floor[0].ok
    assert floor[0].bound == MISS_GIVEN_LEFT_FLOOR
    assert floor[0].measured >= MISS_GIVEN_LEFT_FLOOR
