"""
Seeded Monte Carlo simulation of walks on growing graphs.

Every trial owns a Philox stream derived from (master seed, trial index), so
a trial's path never depends on how trials are batched or spread over
workers. Within a batch the walkers advance together on one uniform per step:
a left/stay/right branch on path-like kernels, an alias-table draw otherwise.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from errors import ConfigurationError, RangeError
from exact_engine import DEFAULT_DENSE_CAP, exact_expected_unvisited
from growth_model import GrowthSchedule
from transition_kernels import DEFAULT_P, DEFAULT_Q, check_walk_family, path_chain_kernel, round_kernels
from utils import parallel_map

DEFAULT_TRIALS = 1000
DEFAULT_SEED = 0
DEFAULT_BATCH = 2048
COVER_CAP = 10**9
Z95 = 1.96
MIN_TRIALS_FOR_INTERVAL = 30
# constant floor on Pr[v_R missed | walker at v_L when round R opens]
MISS_GIVEN_LEFT_FLOOR = 0.3
_BUFFER_DOUBLES = 2**22

ESTIMATE_HEADER = ["mean", "sd", "half_width", "trials", "seed"]
PER_TRIAL_HEADER = ["trial", "U"]


def trial_generator(seed, trial_index, *key):
    """Independent stream for one trial."""
    sequence = np.random.SeedSequence(seed, spawn_key=(trial_index,) + tuple(key))
    return np.random.Generator(np.random.Philox(sequence))


@dataclass(frozen=True)
class SimulationPlan:
    schedule: GrowthSchedule
    family: str
    walk: str
    n: int
    trials: int = 1
    seed: int = DEFAULT_SEED
    record_trajectory: bool = False
    p: float = DEFAULT_P
    q: float = DEFAULT_Q
    degree: int = 5
    graph_seed: int = 0
    edges: tuple = None

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1", field="trials")
        if not 1 <= self.n <= self.schedule.horizon:
            raise RangeError(f"n={self.n} outside [1, {self.schedule.horizon}]")
        check_walk_family(self.walk, self.family)

    @property
    def graph_kwargs(self):
        kwargs = {"degree": self.degree, "graph_seed": self.graph_seed}
        if self.edges:
            kwargs["edges"] = self.edges
        return kwargs


@dataclass(frozen=True)
class EstimateRecord:
    mean: float
    sd: float
    trials: int
    half_width: float
    seed: int
    capped: bool = False
    start: int = None
    values: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def interval_valid(self):
        return self.trials >= MIN_TRIALS_FOR_INTERVAL

    @property
    def standard_error(self):
        return None if self.sd is None else self.sd / math.sqrt(self.trials)

    def summary_row(self):
        return [self.mean, "" if self.sd is None else self.sd,
                "" if self.half_width is None else self.half_width, self.trials, self.seed]


@dataclass
class TrialOutcome:
    trial_index: int
    visited: frozenset
    unvisited: int
    trace: tuple = None


def summarize(values, seed, capped=False, start=None):
    values = np.asarray(values, dtype=float)
    trials = len(values)
    mean = math.fsum(values) / trials
    if trials > 1:
        sd = float(np.std(values, ddof=1))
        half_width = Z95 * sd / math.sqrt(trials)
    else:
        sd = half_width = None
    return EstimateRecord(mean=mean, sd=sd, trials=trials, half_width=half_width, seed=seed,
                          capped=capped, start=start, values=values)


def _vose(p):
    """Alias table (prob, alias) over the indices of p."""
    k = len(p)
    q = p * (k / p.sum())
    prob = np.ones(k)
    alias = np.arange(k)
    small = [i for i in range(k) if q[i] < 1.0]
    large = [i for i in range(k) if q[i] >= 1.0]
    while small and large:
        s, l = small.pop(), large.pop()
        prob[s] = q[s]
        alias[s] = l
        q[l] -= 1.0 - q[s]
        (small if q[l] < 1.0 else large).append(l)
    return prob, alias


class _AliasSampler:
    """Alias tables over each row's support, many walkers at once, one uniform per step."""

    def __init__(self, kernel):
        P = np.asarray(kernel.entries, dtype=float)
        n = kernel.order
        self.counts = np.count_nonzero(P > 0, axis=1)
        width = int(self.counts.max())
        # support first, largest mass first; rows sharing a sorted pattern share one table
        self.columns = np.argsort(-P, axis=1, kind="stable")[:, :width]
        values = np.take_along_axis(P, self.columns, axis=1)
        self.prob = np.ones((n, width))
        self.alias = np.zeros((n, width), dtype=np.int64)
        tables = {}
        for r in range(n):
            k = int(self.counts[r])
            key = values[r, :k].tobytes()
            if key not in tables:
                tables[key] = _vose(values[r, :k])
            prob, alias = tables[key]
            self.prob[r, :k] = prob
            self.alias[r, :k] = self.columns[r, alias]

    def sample(self, positions, u):
        k = self.counts[positions]
        x = u * k
        j = np.minimum(x.astype(np.int64), k - 1)
        keep = (x - j) < self.prob[positions, j]
        return np.where(keep, self.columns[positions, j], self.alias[positions, j])


class _BranchSampler:
    """Left, stay or right for tridiagonal kernels."""

    def __init__(self, kernel):
        P = np.asarray(kernel.entries, dtype=float)
        n = kernel.order
        idx = np.arange(n)
        self.left = np.zeros(n)
        self.left[1:] = P[idx[1:], idx[1:] - 1]
        right = np.zeros(n)
        right[:-1] = P[idx[:-1], idx[:-1] + 1]
        self.stay = self.left + P[idx, idx]
        self.stay[right == 0.0] = 2.0

    def sample(self, positions, u):
        step = (u >= self.left[positions]).astype(np.int64) + (u >= self.stay[positions])
        return positions - 1 + step


def _sampler_for(kernel):
    rows, cols = np.nonzero(np.asarray(kernel.entries))
    if np.all(np.abs(rows - cols) <= 1):
        return _BranchSampler(kernel)
    return _AliasSampler(kernel)


class _UniformStream:
    """Per-trial uniforms served in (trials, k) blocks; each row reads its own stream."""

    def __init__(self, generators):
        self.generators = generators
        self.chunk = max(1, _BUFFER_DOUBLES // max(1, len(generators)))
        self.buffer = np.empty((len(generators), 0))
        self.offset = 0

    def take(self, k):
        if self.offset + k > self.buffer.shape[1]:
            rest = self.buffer[:, self.offset:]
            fresh = max(self.chunk, k - rest.shape[1])
            self.buffer = np.hstack([rest, np.stack([g.random(fresh) for g in self.generators])])
            self.offset = 0
        block = self.buffer[:, self.offset:self.offset + k]
        self.offset += k
        return block


@dataclass
class _BatchWalk:
    unvisited_by_round: np.ndarray
    visited: np.ndarray
    start_positions: np.ndarray = None
    trace: tuple = None


def _walk_batch(plan, trial_indices, start_round=1, start_vertex=None, stream_key=(),
                record_starts=False, record_trace=False):
    """Walk one batch of trials through rounds start_round..n."""
    stream = _UniformStream([trial_generator(plan.seed, t, *stream_key) for t in trial_indices])
    batch = len(trial_indices)
    schedule = plan.schedule
    ar = np.arange(batch)
    visited = np.zeros((batch, schedule.order_at(plan.n)), dtype=bool)
    by_round = np.zeros((batch, plan.n), dtype=np.int64)
    starts = np.zeros((batch, plan.n), dtype=np.int64) if record_starts else None
    times, rounds, values = [], [], []

    pos = None
    clock = 0
    for i, _, kernel in round_kernels(schedule, plan.family, plan.walk, plan.n, plan.p, plan.q,
                                      **plan.graph_kwargs):
        f_i = schedule.duration(i)
        if i < start_round:
            clock += f_i
            continue
        m = kernel.order
        sampler = _sampler_for(kernel)
        if pos is None:
            if start_vertex is not None:
                pos = np.full(batch, start_vertex - 1, dtype=np.int64)
                visited[ar, pos] = True
            elif schedule.initial_order == 1:
                pos = np.zeros(batch, dtype=np.int64)
                visited[:, 0] = True
            else:
                n0 = schedule.initial_order
                pos = np.minimum((stream.take(1)[:, 0] * n0).astype(np.int64), n0 - 1)
        if record_starts:
            starts[:, i - 1] = pos
        if record_trace:
            times.append(clock)
            rounds.append(i)
            values.append(int(m - visited[0, :m].sum()))

        done = 0
        while done < f_i:
            k = min(stream.chunk, f_i - done)
            block = stream.take(k)
            for s in range(k):
                pos = sampler.sample(pos, block[:, s])
                visited[ar, pos] = True
                if record_trace:
                    times.append(clock + done + s + 1)
                    rounds.append(i)
                    values.append(int(m - visited[0, :m].sum()))
            done += k
        clock += f_i
        by_round[:, i - 1] = m - visited[:, :m].sum(axis=1)

    trace = (np.array(times), np.array(rounds), np.array(values)) if record_trace else None
    return _BatchWalk(unvisited_by_round=by_round, visited=visited, start_positions=starts,
                      trace=trace)


def simulate_once(plan, trial_index):
    """One trial: visited labels, U(n) and, when requested, the (t, round, U_t) trace."""
    walk = _walk_batch(plan, [trial_index], record_trace=plan.record_trajectory)
    visited = frozenset(int(v) + 1 for v in np.flatnonzero(walk.visited[0]))
    return TrialOutcome(trial_index=trial_index, visited=visited,
                        unvisited=int(walk.unvisited_by_round[0, -1]), trace=walk.trace)


def _batches(trials, batch_size):
    return [list(range(start, min(trials, start + batch_size)))
            for start in range(0, trials, batch_size)]


def _batch_job(packed):
    plan, indices = packed
    return _walk_batch(plan, indices).unvisited_by_round


def _per_round_counts(plan, jobs=1, batch_size=DEFAULT_BATCH):
    chunks = parallel_map(_batch_job, [(plan, b) for b in _batches(plan.trials, batch_size)], jobs)
    return np.vstack(chunks)


def estimate_unvisited(plan, jobs=1, batch_size=DEFAULT_BATCH):
    """Mean of U(n) over plan.trials trials with a 95% normal half-width."""
    counts = _per_round_counts(plan, jobs, batch_size)
    return summarize(counts[:, plan.n - 1], plan.seed)


def estimate_unvisited_ladder(plan, ladder, jobs=1, batch_size=DEFAULT_BATCH):
    """{m: EstimateRecord} for every m in ladder from one batch of walks to plan.n."""
    ladder = sorted(set(ladder))
    if not ladder or ladder[0] < 1 or ladder[-1] > plan.n:
        raise RangeError(f"ladder must lie in [1, {plan.n}]")
    counts = _per_round_counts(plan, jobs, batch_size)
    return {m: summarize(counts[:, m - 1], plan.seed) for m in ladder}


def estimate_cover_time(kernel, trials, seed=DEFAULT_SEED, cap=COVER_CAP):
    """
    Cover time of a static kernel, worst start taken over all start vertices.

    Returns:
        EstimateRecord: for the start with the largest mean; capped is set when a
        trial reached cap steps without covering
    """
    n = kernel.order
    if trials < 1:
        raise ConfigurationError("trials must be >= 1", field="trials")
    if n == 1:
        return summarize(np.zeros(trials), seed, start=1)

    sampler = _sampler_for(kernel)
    ar = np.arange(trials)
    best = None
    for start in range(1, n + 1):
        stream = _UniformStream([trial_generator(seed, t, start) for t in range(trials)])
        pos = np.full(trials, start - 1, dtype=np.int64)
        visited = np.zeros((trials, n), dtype=bool)
        visited[:, start - 1] = True
        seen = np.ones(trials, dtype=np.int64)
        cover = np.full(trials, -1, dtype=np.int64)
        t = 0
        while (cover < 0).any() and t < cap:
            k = min(stream.chunk, cap - t)
            block = stream.take(k)
            for s in range(k):
                pos = sampler.sample(pos, block[:, s])
                fresh = ~visited[ar, pos]
                visited[ar, pos] = True
                seen += fresh
                cover[(seen == n) & (cover < 0)] = t + s + 1
                if s % 64 == 63 and not (cover < 0).any():
                    break
            t += k
        capped = bool((cover < 0).any())
        cover[cover < 0] = cap
        record = summarize(cover, seed, capped=capped, start=start)
        if best is None or record.mean > best.mean:
            best = record
    return best


@dataclass
class PathLowerBoundResult:
    C: float
    gamma: float
    n: int
    epsilon: float
    R: int
    L: int
    T: int
    measured: EstimateRecord
    bound: float
    nominal_bound: float
    miss_given_left: float
    miss_given_left_bound: float
    start_left_mass: float
    start_left_bound: float
    exact_unvisited: float = None
    exact_start_left_mass: float = None

    @property
    def holds(self):
        value = self.measured.mean if self.exact_unvisited is None else self.exact_unvisited
        return value >= self.bound

    @property
    def miss_floor_holds(self):
        return self.miss_given_left >= MISS_GIVEN_LEFT_FLOOR


def lowerbound_construction(C, gamma, n, epsilon=None):
    """(epsilon, R, L) for the path lower bound; raises naming any violated inequality."""
    if not C > 0:
        raise ConfigurationError("requires C > 0", field="C")
    if not 0.0 <= gamma <= 1.0:
        raise ConfigurationError("requires 0 <= gamma <= 1", field="gamma")
    limit = min(1.0 / C, 0.1)
    epsilon = 0.99 * limit if epsilon is None else epsilon
    if not 0 < epsilon < limit:
        raise ConfigurationError(f"requires 0 < epsilon < min(1/C, 0.1) = {limit:g}",
                                 field="epsilon")
    R = n - int(math.floor(epsilon * n ** gamma))
    L = R - int(math.ceil(0.6 * n))
    if not 0.3 * n <= L <= 0.4 * n or L < 1:
        raise ConfigurationError(f"L = R - 0.6n = {L} outside [0.3n, 0.4n] for n={n}",
                                 field="n")
    return epsilon, R, L


def path_lowerbound_experiment(C, gamma, n, trials, seed=DEFAULT_SEED, epsilon=None,
                               p=DEFAULT_P, q=DEFAULT_Q, jobs=1, dense_cap=DEFAULT_DENSE_CAP):
    """
    Measured E[U] on the growing path under f(i) = ceil(C i^(2-gamma)) against the
    lower-bound construction.

    The certified bound is (n - R) * Pr[v_R missed | start v_L at round R] * Pr[start of
    round k at or left of v_L], each factor replaced by its guaranteed value: 1 - T/(4(R-L)^2)
    and the stationary mass of v_1..v_L minimized over rounds R..n (the start density
    nu/pi is nonincreasing along the path). nominal_bound is 0.18 eps n^gamma.
    """
    epsilon, R, L = lowerbound_construction(C, gamma, n, epsilon)
    if not (p >= 0.5 and p >= q and q <= min(0.5, 1.0 - p)):
        raise ConfigurationError("requires p >= 1/2, p >= q and q <= min(1/2, 1-p)", field="p")
    schedule = GrowthSchedule(kind="power", horizon=n, C=C, exponent=2.0 - gamma, gamma=gamma)
    plan = SimulationPlan(schedule=schedule, family="path", walk="path_chain", n=n,
                          trials=trials, seed=seed, p=p, q=q)

    main = _walk_batch(plan, list(range(trials)), record_starts=True)
    measured = summarize(main.unvisited_by_round[:, -1], seed)
    start_left = min(float(np.mean(main.start_positions[:, k - 1] <= L - 1))
                     for k in range(R, n + 1))

    left = _walk_batch(plan, list(range(trials)), start_round=R, start_vertex=L, stream_key=(1,))
    miss_left = float(np.mean(~left.visited[:, R - 1]))
    T = int(sum(schedule.duration(i) for i in range(R, n + 1)))
    miss_bound = 1.0 - T / (4.0 * (R - L) ** 2)
    left_mass = min(float(path_chain_kernel(k, p, q).stationary[:L].sum()) for k in range(R, n + 1))

    result = PathLowerBoundResult(
        C=C, gamma=gamma, n=n, epsilon=epsilon, R=R, L=L, T=T,
        measured=measured,
        bound=(n - R) * max(0.0, miss_bound) * left_mass,
        nominal_bound=0.18 * epsilon * n ** gamma,
        miss_given_left=miss_left,
        miss_given_left_bound=miss_bound,
        start_left_mass=start_left,
        start_left_bound=left_mass,
    )
    if n <= dense_cap:
        exact = exact_expected_unvisited(schedule, "path", "path_chain", n, p, q,
                                         dense_cap=dense_cap, record_occupancy=True)
        result.exact_unvisited = exact.expected_unvisited
        result.exact_start_left_mass = min(float(exact.start_occupancy[k - 1].vector[:L].sum())
                                           for k in range(R, n + 1))
    return result
