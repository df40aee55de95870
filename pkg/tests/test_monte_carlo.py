import math

import numpy as np
import pytest

from errors import ConfigurationError, RangeError
from exact_engine import complete_closed_form, exact_expected_unvisited
from growth_model import GrowthSchedule, grow, parse_schedule
from monte_carlo import (SimulationPlan, _AliasSampler, _BranchSampler, _sampler_for,
                         estimate_cover_time, estimate_unvisited, estimate_unvisited_ladder,
                         lowerbound_construction, path_lowerbound_experiment, simulate_once,
                         summarize, trial_generator)
from transition_kernels import (lazy_metropolis_kernel, lazy_simple_kernel, path_chain_kernel,
                                uniform_complete_kernel)


def plan_for(family="path", walk="lazy_simple", n=12, C=1.0, trials=400, seed=3, **kwargs):
    schedule = GrowthSchedule(kind="linear", horizon=n, C=C,
                              initial_order=kwargs.pop("initial_order", 1))
    return SimulationPlan(schedule=schedule, family=family, walk=walk, n=n, trials=trials,
                          seed=seed, **kwargs)


def test_trial_generator_is_deterministic():
    a = trial_generator(7, 3).random(5)
    b = trial_generator(7, 3).random(5)
    c = trial_generator(7, 4).random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_simulate_once_visits_first_vertex():
    outcome = simulate_once(plan_for(), 0)
    assert 1 in outcome.visited
    assert outcome.unvisited == 12 - len([v for v in outcome.visited if v <= 12])


def test_simulate_once_matches_batched_trial():
    plan = plan_for(trials=50)
    batched = estimate_unvisited(plan, batch_size=16)
    assert simulate_once(plan, 17).unvisited == batched.values[17]


def test_results_independent_of_batching_and_jobs():
    plan = plan_for(family="lollipop", trials=300)
    a = estimate_unvisited(plan, batch_size=300)
    b = estimate_unvisited(plan, batch_size=7)
    c = estimate_unvisited(plan, jobs=2, batch_size=64)
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.values, c.values)
    assert a.mean == b.mean == c.mean


def test_seed_changes_values():
    a = estimate_unvisited(plan_for(seed=1))
    b = estimate_unvisited(plan_for(seed=2))
    assert not np.array_equal(a.values, b.values)


def test_trajectory_trace():
    plan = plan_for(n=4, trials=1, record_trajectory=True)
    outcome = simulate_once(plan, 0)
    times, rounds, values = outcome.trace
    assert list(rounds) == [1, 1, 2, 2, 2, 3, 3, 3, 3, 4, 4, 4, 4, 4]
    assert times[0] == 0 and times[-1] == 10
    assert values[-1] == outcome.unvisited


def test_estimate_agrees_with_closed_form():
    schedule = GrowthSchedule(kind="constant", horizon=40, C=2)
    plan = SimulationPlan(schedule=schedule, family="complete", walk="uniform_complete", n=40,
                          trials=4000, seed=11)
    record = estimate_unvisited(plan)
    exact = complete_closed_form(schedule)
    assert abs(record.mean - exact) <= 4 * record.standard_error
    assert record.interval_valid


def test_estimate_agrees_with_exact_engine():
    plan = plan_for(family="lollipop", n=10, trials=4000, seed=5)
    record = estimate_unvisited(plan)
    exact = exact_expected_unvisited(plan.schedule, "lollipop", "lazy_simple").expected_unvisited
    assert abs(record.mean - exact) <= 4 * record.standard_error + 1e-12


def test_initial_clique_start_not_counted():
    plan = plan_for(family="complete", walk="uniform", n=6, trials=3000, seed=2, initial_order=4)
    record = estimate_unvisited(plan)
    exact = complete_closed_form(plan.schedule)
    assert abs(record.mean - exact) <= 4 * record.standard_error


def test_ladder_reads_every_round():
    plan = plan_for(n=16, trials=200)
    ladder = estimate_unvisited_ladder(plan, [4, 8, 16])
    assert set(ladder) == {4, 8, 16}
    assert ladder[16].mean == estimate_unvisited(plan).mean
    with pytest.raises(RangeError):
        estimate_unvisited_ladder(plan, [20])


def test_summarize_single_trial():
    record = summarize([3.0], seed=0)
    assert record.sd is None
    assert record.half_width is None
    assert not record.interval_valid
    assert record.summary_row() == [3.0, "", "", 1, 0]


def test_summarize_half_width():
    record = summarize([0.0, 2.0] * 50, seed=9)
    assert record.mean == 1.0
    assert record.half_width == pytest.approx(1.96 * record.sd / math.sqrt(100))


def test_plan_validation():
    with pytest.raises(ConfigurationError):
        plan_for(trials=0)
    with pytest.raises(ConfigurationError):
        plan_for(family="path", walk="uniform_complete")
    with pytest.raises(RangeError):
        SimulationPlan(schedule=GrowthSchedule(kind="linear", horizon=3), family="path",
                       walk="lazy_simple", n=5)


def test_cover_time_two_vertices():
    record = estimate_cover_time(lazy_simple_kernel(grow("path", 2)), trials=4000, seed=1)
    assert record.mean == pytest.approx(2.0, abs=4 * record.standard_error)
    assert not record.capped


def test_cover_time_complete_coupon_collector():
    n = 6
    record = estimate_cover_time(uniform_complete_kernel(n), trials=3000, seed=4)
    # every start is equivalent; remaining n-1 coupons with success (n-j)/n
    expected = sum(n / j for j in range(1, n))
    assert record.mean == pytest.approx(expected, abs=4 * record.standard_error)


def test_cover_time_cap():
    record = estimate_cover_time(lazy_simple_kernel(grow("path", 10)), trials=20, seed=0, cap=5)
    assert record.capped
    assert record.mean == 5.0


def test_lowerbound_construction():
    epsilon, R, L = lowerbound_construction(1.0, 1.0, 100)
    assert epsilon == pytest.approx(0.099)
    assert R == 91
    assert L == 31
    with pytest.raises(ConfigurationError):
        lowerbound_construction(1.0, 1.0, 100, epsilon=0.5)
    with pytest.raises(ConfigurationError):
        lowerbound_construction(1.0, 1.0, 7)


def test_path_lowerbound_parameters():
    with pytest.raises(ConfigurationError):
        path_lowerbound_experiment(1.0, 1.0, 100, trials=10, p=0.9, q=0.25)


@pytest.mark.slow
def test_path_lowerbound_experiment():
    result = path_lowerbound_experiment(1.0, 1.0, 100, trials=2000, seed=0)
    assert result.T == sum(range(91, 101))
    assert result.start_left_bound == pytest.approx(30.5 / 99)
    assert result.exact_unvisited is not None
    assert result.holds
    assert result.miss_given_left >= result.miss_given_left_bound
    assert result.exact_start_left_mass >= result.start_left_bound


CALIBRATION_FAMILIES = ["complete", "path", "lollipop", "expander_like"]
CALIBRATION_SCHEDULES = ["constant:c=1", "constant:c=3", "linear:C=1", "linear:C=2",
                         "power:C=1,gamma=0.5"]


def calibration_hits(count, n_max, trials, seed=2024):
    """Cases whose MC mean lands within 4 standard errors of the exact E[U]."""
    rng = np.random.default_rng(seed)
    hits = 0
    for case in range(count):
        family = CALIBRATION_FAMILIES[rng.integers(len(CALIBRATION_FAMILIES))]
        text = CALIBRATION_SCHEDULES[rng.integers(len(CALIBRATION_SCHEDULES))]
        n = int(rng.integers(5, n_max + 1))
        schedule = parse_schedule(text, n, family)
        exact = exact_expected_unvisited(schedule, family, "lazy_simple").expected_unvisited
        record = estimate_unvisited(SimulationPlan(schedule=schedule, family=family,
                                                   walk="lazy_simple", n=n, trials=trials,
                                                   seed=case))
        hits += abs(record.mean - exact) <= 4 * record.standard_error + 1e-9
    return hits


def test_calibration_small_cases():
    assert calibration_hits(6, 25, 3000) >= 5


@pytest.mark.slow
def test_calibration_against_exact():
    assert calibration_hits(20, 100, 10_000) >= 19


@pytest.mark.parametrize("kernel,sampler_type", [
    (uniform_complete_kernel(6), _AliasSampler),
    (lazy_simple_kernel(grow("lollipop", 9)), _AliasSampler),
    (lazy_metropolis_kernel(grow("expander_like", 12)), _AliasSampler),
    (lazy_simple_kernel(grow("path", 7)), _BranchSampler),
    (path_chain_kernel(7, 0.6, 0.3), _BranchSampler),
])
def test_row_sampler_matches_kernel_rows(kernel, sampler_type):
    sampler = _sampler_for(kernel)
    assert isinstance(sampler, sampler_type)
    draws = 40000
    rng = trial_generator(11, 0)
    n = kernel.order
    for row in range(n):
        positions = np.full(draws, row, dtype=np.int64)
        moves = sampler.sample(positions, rng.random(draws))
        assert moves.min() >= 0 and moves.max() < n
        assert np.all(kernel.entries[row, moves] > 0)
        freq = np.bincount(moves, minlength=n) / draws
        se = np.sqrt(kernel.entries[row] * (1 - kernel.entries[row]) / draws)
        assert np.all(np.abs(freq - kernel.entries[row]) <= 5 * se + 1e-12)


def test_branch_sampler_stays_inside_path_ends():
    sampler = _sampler_for(lazy_simple_kernel(grow("path", 4)))
    u = np.array([0.0, 0.999999999, 0.0, 0.999999999])
    moves = sampler.sample(np.array([0, 0, 3, 3]), u)
    assert moves.tolist() == [0, 1, 2, 3]
