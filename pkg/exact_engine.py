"""
Exact expected number of unvisited vertices.

The forward engine keeps one matrix whose first row is the occupancy vector
nu (where the walker is) and whose other rows are survival vectors, one per
arrived target v_k: entry u is Pr[walker at u now and v_k not hit since it
arrived]. Every step multiplies the whole matrix by P^(i) and zeroes each
target's own column; every round boundary pads one zero column and adds the
newcomer's row as a copy of nu. The remaining survival masses are the miss
probabilities Pr[E(v_k)].

The complete-graph closed form, the Kn certificate and the realizations of
the hitting-product, split, l2-recurrence and mu-norm bounds live here too.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from chain_analysis import (INVARIANT_SLACK, InvariantCheck, hitting_time, mixing_time,
                            pi_norm, pi_ratio, second_eigenvalue, survival_matrix)
from errors import CapacityError, ConfigurationError, NumericalError, RangeError
from transition_kernels import DEFAULT_P, DEFAULT_Q, round_kernels

DEFAULT_DENSE_CAP = 400
TRUNCATION_MASS = 1e-15
MASS_TOL = 1e-10

TRAJECTORY_HEADER = ["t", "round", "expected_unvisited"]
MISS_HEADER = ["k", "miss_probability"]


@dataclass
class OccupancyState:
    round: int
    t: int
    vector: np.ndarray
    stationary: np.ndarray = field(default=None, repr=False)

    @property
    def density(self):
        """nu / pi, the occupancy relative to the stationary vector of its round."""
        return self.vector / self.stationary


@dataclass
class SurvivalState:
    target: int
    round: int
    vector: np.ndarray

    @property
    def miss_mass(self):
        return float(self.vector.sum())


@dataclass
class ExactResult:
    n: int
    expected_unvisited: float
    miss_probabilities: np.ndarray
    unvisited_by_round: np.ndarray
    trajectory: tuple = None
    start_occupancy: list = field(default=None, repr=False)
    end_occupancy: list = field(default=None, repr=False)
    truncated: int = 0
    survivors: list = field(default=None, repr=False)

    def miss_rows(self):
        return [[k, float(p)] for k, p in enumerate(self.miss_probabilities, 1)]

    def trajectory_rows(self):
        if self.trajectory is None:
            return []
        times, rounds, values = self.trajectory
        return [[int(t), int(i), float(v)] for t, i, v in zip(times, rounds, values)]


def _check_request(schedule, n, dense_cap):
    if n < 1:
        raise RangeError(f"n must be >= 1, got {n}")
    if n > schedule.horizon:
        raise RangeError(f"n={n} beyond schedule horizon {schedule.horizon}")
    if schedule.order_at(n) > dense_cap:
        raise CapacityError(f"order {schedule.order_at(n)} exceeds the dense cap {dense_cap}; "
                            f"use the Monte Carlo engine")


def _initial_occupancy(schedule, order):
    nu = np.zeros(order)
    if schedule.initial_order == 1:
        nu[0] = 1.0
    else:
        nu[:schedule.initial_order] = 1.0 / schedule.initial_order
    return nu


def exact_expected_unvisited(schedule, family, walk, n=None, p=DEFAULT_P, q=DEFAULT_Q,
                             dense_cap=DEFAULT_DENSE_CAP, record_trajectory=False,
                             record_occupancy=False, **graph_kwargs):
    """
    Propagate occupancy and survival vectors through rounds 1..n.

    Args:
        schedule (GrowthSchedule): durations and initial order
        family (str): graph family
        walk (str): walk tag or alias
        n (int): final round (defaults to the schedule horizon)
        record_trajectory (bool): keep (t, round, E[U_t]) for every step
        record_occupancy (bool): keep nu at the start and end of every round

    Returns:
        ExactResult
    """
    n = schedule.horizon if n is None else n
    _check_request(schedule, n, dense_cap)

    final_order = schedule.order_at(n)
    miss = np.zeros(final_order)
    by_round = np.zeros(n)
    starts, ends = ([], []) if record_occupancy else (None, None)
    times, rounds, values = [], [], []
    truncated = 0

    state = None
    targets = []
    clock = 0
    for i, snapshot, kernel in round_kernels(schedule, family, walk, n, p, q, **graph_kwargs):
        m = kernel.order
        if state is None:
            nu = _initial_occupancy(schedule, m)
            targets = [] if schedule.initial_order == 1 else list(range(1, m + 1))
            state = np.vstack([nu] + [nu] * len(targets))
        else:
            state = np.hstack([state, np.zeros((state.shape[0], 1))])
            state = np.vstack([state, state[0]])
            targets.append(m)

        if record_occupancy:
            starts.append(OccupancyState(round=i, t=0, vector=state[0].copy(),
                                         stationary=kernel.stationary))
        rows = np.arange(1, len(targets) + 1)
        cols = np.array(targets, dtype=np.int64) - 1
        if record_trajectory:
            times.append(clock)
            rounds.append(i)
            values.append(float(state[1:].sum()))

        for s in range(1, schedule.duration(i) + 1):
            state = kernel.step(state)
            state[rows, cols] = 0.0
            if record_trajectory:
                times.append(clock + s)
                rounds.append(i)
                values.append(float(state[1:].sum()))
        clock += schedule.duration(i)

        drift = abs(float(state[0].sum()) - 1.0)
        if drift > MASS_TOL:
            raise NumericalError(f"occupancy mass drifted by {drift:.3g} in round {i}",
                                 residual=drift)
        if record_occupancy:
            ends.append(OccupancyState(round=i, t=schedule.duration(i), vector=state[0].copy(),
                                       stationary=kernel.stationary))

        masses = state[1:].sum(axis=1)
        by_round[i - 1] = math.fsum(masses)
        dead = masses < TRUNCATION_MASS
        if dead.any():
            truncated += int(dead.sum())
            keep = np.concatenate(([True], ~dead))
            state = state[keep]
            targets = [w for w, d in zip(targets, dead) if not d]

    survivors = [SurvivalState(target=w, round=n, vector=state[r].copy())
                 for r, w in enumerate(targets, 1)]
    for s in survivors:
        miss[s.target - 1] = s.miss_mass

    trajectory = None
    if record_trajectory:
        trajectory = (np.array(times, dtype=np.int64), np.array(rounds, dtype=np.int64),
                      np.array(values))
    return ExactResult(
        n=n,
        expected_unvisited=math.fsum(miss),
        miss_probabilities=miss,
        unvisited_by_round=by_round,
        trajectory=trajectory,
        start_occupancy=starts,
        end_occupancy=ends,
        truncated=truncated,
        survivors=survivors,
    )


def exact_trajectory(schedule, family, walk, n=None, **kwargs):
    """E[U_t] for every step; round i contributes rows (T_i + s, i, value), s = 0..f(i)."""
    kwargs["record_trajectory"] = True
    return exact_expected_unvisited(schedule, family, walk, n, **kwargs)


def _complete_factors(schedule, n):
    """a_i = (1 - 1/order_i)^f(i) for rounds 1..n."""
    factors = np.empty(n)
    for i in range(1, n + 1):
        order = schedule.order_at(i)
        if order == 1:
            factors[i - 1] = 0.0
        else:
            factors[i - 1] = math.exp(schedule.duration(i) * math.log1p(-1.0 / order))
    return factors


def complete_closed_form_series(schedule, n=None):
    """S(m) for m = 1..n via S(m) = a_m (S(m-1) + 1), plus the n0 * prod a_i term."""
    n = schedule.horizon if n is None else n
    if n < 1:
        raise RangeError(f"n must be >= 1, got {n}")
    n0 = schedule.initial_order
    series = np.empty(n)
    total, product = 0.0, 1.0
    for i, a in enumerate(_complete_factors(schedule, n), 1):
        total = a * (total + 1.0)
        product *= a
        series[i - 1] = total + (n0 * product if n0 > 1 else 0.0)
    return series


def complete_closed_form(schedule, n=None):
    """Expected unvisited count on growing complete graphs under the uniform kernel."""
    n = schedule.horizon if n is None else n
    return float(complete_closed_form_series(schedule, n)[-1])


def complete_miss_probabilities(schedule, n=None):
    """Per-vertex Pr[E(v_k)] on growing complete graphs."""
    n = schedule.horizon if n is None else n
    suffix = np.cumprod(_complete_factors(schedule, n)[::-1])[::-1]
    if schedule.initial_order == 1:
        miss = suffix.copy()
        miss[0] = 0.0
        return miss
    return np.concatenate((np.full(schedule.initial_order, suffix[0]), suffix))


@dataclass(frozen=True)
class BoundCheck:
    name: str
    value: float
    hypothesis_met: bool
    holds: bool
    sense: str = "<="


def complete_bounds(schedule, n=None):
    """The complete-graph bounds on S(n), each with its hypothesis status."""
    n = schedule.horizon if n is None else n
    if schedule.initial_order != 1:
        raise ConfigurationError("complete-graph bounds are stated for n0 = 1", field="n0")
    s = complete_closed_form(schedule, n)
    f = schedule.durations(n)
    i = np.arange(1, n + 1)
    ratio = f / i
    checks = []

    C = float(ratio.min())
    value = 1.0 / math.expm1(C)
    checks.append(BoundCheck("linear_upper", value, True, s <= value + INVARIANT_SLACK))

    met = bool(np.all(np.diff(f) >= 0))
    value = n / (f[-1] + 1.0) * (1.0 - 1.0 / n) ** f[-1]
    checks.append(BoundCheck("nondecreasing_lower", value, met,
                             s >= value - INVARIANT_SLACK, ">="))

    met = bool(np.all(np.diff(ratio) <= 1e-15))
    value = n / float(f[-1])
    checks.append(BoundCheck("ratio_upper", value, met, s <= value + INVARIANT_SLACK))

    met = bool(np.all(f == f[0]))
    value = n / (f[0] + 1.0)
    checks.append(BoundCheck("constant_upper", value, met, s <= value + INVARIANT_SLACK))
    return checks


@dataclass(frozen=True)
class KnCertificate:
    total: float
    delta: float
    hypothesis_met: bool
    holds: bool
    violations: tuple = ()

    @property
    def status(self):
        if not self.hypothesis_met:
            return "hypothesis-unmet"
        return "certified" if self.holds else "violated"


def kn_bound(schedule, h, n, delta):
    """
    Evaluate sum_k prod_{i=k}^n (1 - 1/h(i))^f(i) and test it against delta.

    Args:
        schedule (GrowthSchedule): supplies f
        h (callable or sequence): h(i) >= 1 for i = 1..n
        n (int): horizon of the sum
        delta (float): target bound

    Returns:
        KnCertificate: the sum is always reported, even when f(i) >= h(i)/delta fails
    """
    if delta <= 0:
        raise ConfigurationError("delta must be > 0", field="delta")
    values = [float(h(i)) if callable(h) else float(h[i - 1]) for i in range(1, n + 1)]
    if min(values) < 1.0:
        raise RangeError("h(i) must be >= 1")
    total = 0.0
    violations = []
    for i, h_i in enumerate(values, 1):
        f_i = schedule.duration(i)
        a = 0.0 if h_i == 1.0 else math.exp(f_i * math.log1p(-1.0 / h_i))
        total = a * (total + 1.0)
        if f_i < h_i / delta - 1e-12:
            violations.append(i)
    return KnCertificate(total=total, delta=delta, hypothesis_met=not violations,
                         holds=total <= delta + 1e-12, violations=tuple(violations))


def _standard_only(schedule):
    if schedule.initial_order != 1:
        raise ConfigurationError("bound realizations are stated for n0 = 1", field="n0")


def hitting_product_bound(schedule, family, walk, n=None, p=DEFAULT_P, q=DEFAULT_Q,
                          **graph_kwargs):
    """
    B(m) = sum_{k=2}^m prod_{i=k}^m max_v Pr[tau_{v_k} > f(i) | X_0 = v] for m = 1..n.

    Returns:
        np.ndarray: B(1..n)
    """
    n = schedule.horizon if n is None else n
    _standard_only(schedule)
    series = np.zeros(n)
    products = np.zeros(0)
    for i, _, kernel in round_kernels(schedule, family, walk, n, p, q, **graph_kwargs):
        if i == 1:
            continue
        worst = survival_matrix(kernel, schedule.duration(i)).max(axis=1)
        products = np.append(products, 1.0) * worst[1:i]
        series[i - 1] = math.fsum(products)
    return series


def split_bound(schedule, family, walk, n=None, p=DEFAULT_P, q=DEFAULT_Q, t_cap=10**6,
                **graph_kwargs):
    """
    Same sum with per-round factor max_u sum_v P^s(u,v) Pr[tau_{v_k} > f(i) - s | v],
    s = 2 t_mix(i) when f(i) > s, else s = 0.
    """
    n = schedule.horizon if n is None else n
    _standard_only(schedule)
    series = np.zeros(n)
    products = np.zeros(0)
    for i, _, kernel in round_kernels(schedule, family, walk, n, p, q, **graph_kwargs):
        if i == 1:
            continue
        f_i = schedule.duration(i)
        s = 2 * mixing_time(kernel, t_cap).steps
        if f_i <= s:
            s = 0
        G = survival_matrix(kernel, f_i - s)
        for _ in range(s):
            G = kernel.step_back(G)
        products = np.append(products, 1.0) * G.max(axis=1)[1:i]
        series[i - 1] = math.fsum(products)
    return series


def _kernels(schedule, family, walk, n, p, q, graph_kwargs):
    return [k for _, _, k in round_kernels(schedule, family, walk, n, p, q, **graph_kwargs)]


def l2_recurrence_check(schedule, family, walk, n=None, p=DEFAULT_P, q=DEFAULT_Q,
                        **graph_kwargs):
    """x_l <= r_l lambda2^{2f(l)} x_{l-1} + (r_l - 1) lambda2^{2f(l)} for every round l >= 2."""
    n = schedule.horizon if n is None else n
    _standard_only(schedule)
    result = exact_expected_unvisited(schedule, family, walk, n, p, q,
                                      record_occupancy=True, **graph_kwargs)
    kernels = _kernels(schedule, family, walk, n, p, q, graph_kwargs)
    checks = []
    x_prev = pi_norm(result.end_occupancy[0].vector, kernels[0].stationary)
    for ell in range(2, n + 1):
        prev, kernel = kernels[ell - 2], kernels[ell - 1]
        x = pi_norm(result.end_occupancy[ell - 1].vector, kernel.stationary)
        r = pi_ratio(prev, kernel)
        decay = second_eigenvalue(kernel) ** (2 * schedule.duration(ell))
        rhs = r * decay * x_prev + (r - 1.0) * decay
        checks.append(InvariantCheck("l2_recurrence", x <= rhs + INVARIANT_SLACK, x, rhs,
                                     f"round={ell}"))
        x_prev = x
    return checks


def mu_vectors(schedule, family, walk, n=None, p=DEFAULT_P, q=DEFAULT_Q, **graph_kwargs):
    """
    mu^(k-1)_{v_k} for k = 2..n: probability of avoiding v_k through rounds k..n as a
    function of the position at the end of round k-1. Computed backwards.
    """
    n = schedule.horizon if n is None else n
    _standard_only(schedule)
    kernels = _kernels(schedule, family, walk, n, p, q, graph_kwargs)
    mus = {}
    G = np.ones((n - 1, n))
    live = list(range(2, n + 1))
    cols = np.array(live) - 1
    G[np.arange(len(live)), cols] = 0.0
    for i in range(n, 1, -1):
        kernel = kernels[i - 1]
        rows = np.arange(len(live))
        for _ in range(schedule.duration(i)):
            G = kernel.step_back(G)
            G[rows, cols] = 0.0
        mus[i] = G[-1, :i - 1].copy()
        G = G[:-1, :i - 1]
        live = live[:-1]
        cols = cols[:-1]
    return mus


def mu_norm_bound(schedule, family, walk, n=None, p=DEFAULT_P, q=DEFAULT_Q, **graph_kwargs):
    """||mu^(k-1)_{v_k}||_{2,pi} <= prod_{i=k}^n sqrt(r_i) (1 - 1/t_hit(i))^f(i)."""
    n = schedule.horizon if n is None else n
    mus = mu_vectors(schedule, family, walk, n, p, q, **graph_kwargs)
    kernels = _kernels(schedule, family, walk, n, p, q, graph_kwargs)
    factors = {}
    for i in range(2, n + 1):
        t_hit, _ = hitting_time(kernels[i - 1])
        r = pi_ratio(kernels[i - 2], kernels[i - 1])
        factors[i] = math.sqrt(r) * (1.0 - 1.0 / t_hit) ** schedule.duration(i)
    checks = []
    for k in range(2, n + 1):
        pi = kernels[k - 2].stationary
        lhs = math.sqrt(float(np.sum(pi * mus[k] ** 2)))
        rhs = math.prod(factors[i] for i in range(k, n + 1))
        checks.append(InvariantCheck("mu_norm", lhs <= rhs + INVARIANT_SLACK, lhs, rhs, f"k={k}"))
    return checks


def decomposition_check(schedule, family, walk, n=None, p=DEFAULT_P, q=DEFAULT_Q,
                        **graph_kwargs):
    """E[U] = sum_k <nu^(k-1)_{f(k-1)}, mu^(k-1)_{v_k}>, forward against backward."""
    n = schedule.horizon if n is None else n
    result = exact_expected_unvisited(schedule, family, walk, n, p, q,
                                      record_occupancy=True, **graph_kwargs)
    mus = mu_vectors(schedule, family, walk, n, p, q, **graph_kwargs)
    backward = math.fsum(float(result.end_occupancy[k - 2].vector @ mus[k]) for k in range(2, n + 1))
    gap = abs(backward - result.expected_unvisited)
    return InvariantCheck("decomposition", gap <= 1e-10 * max(1.0, backward),
                          result.expected_unvisited, backward, f"n={n}")


def check_monotone_occupancy(result, tol=1e-12):
    """
    Start-of-round density nu/pi is nonincreasing in vertex index.

    Holds on growing path chains with p >= 1/2, p >= q and q <= min(1/2, 1 - p); nu
    itself need not be monotone when the endpoint weight q/(1-p) is below 1.
    """
    if result.start_occupancy is None:
        raise ConfigurationError("run the engine with record_occupancy=True", field="engine")
    for state in result.start_occupancy:
        i, h = state.round, state.density
        jumps = np.diff(h)
        if (jumps > tol * max(1.0, float(h.max()))).any():
            j = int(np.argmax(jumps)) + 1
            return InvariantCheck("monotone", False, float(h[j - 1]), float(h[j]),
                                  f"round={i} v{j} < v{j + 1}")
    return InvariantCheck("monotone", True, 0.0, 0.0, f"rounds={len(result.start_occupancy)}")
