"""
Theorem catalog: each entry instantiates a bound's hypotheses on a concrete
growing-graph family, audits them against measured chain quantities, runs an
engine over a ladder of n and compares E[U] with the bound recomputed from its
formula.

Verdicts: "pass" when every row holds, "fail" otherwise, "inapplicable" when
the hypothesis audit fails, "exploratory" for sweeps that certify nothing.
"""

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from chain_analysis import DEFAULT_T_CAP, INVARIANT_SLACK, hitting_time, mixing_time, pi_ratio, second_eigenvalue
from errors import ConfigurationError, HypothesisError
from exact_engine import DEFAULT_DENSE_CAP, complete_bounds, complete_closed_form_series, exact_expected_unvisited
from growth_model import (FAMILY_EXPONENT, GrowthSchedule, ceil_steps, degree_profile,
                          edge_growth_constant, growing_sequence, parse_schedule)
from monte_carlo import (DEFAULT_SEED, MISS_GIVEN_LEFT_FLOOR, SimulationPlan, estimate_unvisited_ladder,
                         path_lowerbound_experiment)
from transition_kernels import DEFAULT_P, DEFAULT_Q, check_walk_family, kernel_for, resolve_walk
from utils import log, run_jobs

DEFAULT_DELTA = 0.1
DEFAULT_TRIALS = 2000
EXPONENT_TOL = 0.15
MIN_SCALING_POINTS = 4
ENGINES = ("auto", "closed", "exact", "mc")
VERDICTS = ("pass", "fail", "inapplicable", "exploratory")

CERTIFICATE_HEADER = ["theorem", "label", "n", "measured", "bound", "margin", "sense", "ok",
                      "verdict"]
SCALING_HEADER = ["gamma", "n", "expected_unvisited", "fit_exponent", "residual"]
PROFILE_HEADER = ["i", "order", "edges", "t_hit", "t_mix", "lambda2", "pi_min", "r",
                  "d_ave", "d_min", "d_max"]


@dataclass(frozen=True)
class RoundProfile:
    i: int
    order: int
    edges: int
    t_hit: float
    t_mix: int
    t_mix_capped: bool
    lambda2: float
    pi_min: float
    r: float
    d_ave: float
    d_min: int
    d_max: int
    lazy: bool
    reversible: bool
    symmetric: bool
    simple: bool

    def row(self):
        return [self.i, self.order, self.edges, self.t_hit, self.t_mix, self.lambda2, self.pi_min,
                self.r, self.d_ave, self.d_min, self.d_max]


@lru_cache(maxsize=32)
def _profile(family, walk, n, p, q, t_cap, degree, graph_seed, edges):
    graph = {"degree": degree, "graph_seed": graph_seed}
    if edges:
        graph["edges"] = edges
    rounds = []
    prev = None
    for snapshot in growing_sequence(family, n, **graph):
        kernel = kernel_for(walk, snapshot, p, q)
        t_hit, _ = hitting_time(kernel)
        mix = mixing_time(kernel, t_cap)
        d_ave, d_min, d_max = degree_profile(snapshot)
        rounds.append(RoundProfile(
            i=snapshot.order, order=snapshot.order, edges=len(snapshot.edges),
            t_hit=t_hit, t_mix=mix.steps, t_mix_capped=mix.capped,
            lambda2=second_eigenvalue(kernel), pi_min=kernel.pi_min,
            r=1.0 if prev is None else pi_ratio(prev, kernel),
            d_ave=d_ave, d_min=d_min, d_max=d_max,
            lazy=kernel.lazy, reversible=kernel.reversible,
            symmetric=kernel.symmetric, simple=kernel.simple,
        ))
        prev = kernel
    return tuple(rounds)


def round_profile(family, walk, n, p=DEFAULT_P, q=DEFAULT_Q, t_cap=DEFAULT_T_CAP,
                  degree=5, graph_seed=0, edges=None):
    """
    Measured chain quantities of every round 1..n of a standard growing family.

    Returns:
        tuple: RoundProfile per round, index i-1
    """
    tag = check_walk_family(walk, family)
    return _profile(family, tag, n, float(p), float(q), t_cap, degree, graph_seed,
                    tuple(sorted(edges)) if edges else None)


def measure_ladder(schedule, family, walk, ladder, engine="auto", trials=DEFAULT_TRIALS,
                   seed=DEFAULT_SEED, dense_cap=DEFAULT_DENSE_CAP, p=DEFAULT_P, q=DEFAULT_Q,
                   jobs=1, **graph_kwargs):
    """E[U(m)] for every m in ladder from a single engine run to max(ladder)."""
    ladder = sorted(set(int(m) for m in ladder))
    top = ladder[-1]
    tag = resolve_walk(walk)
    closed = family == "complete" and tag == "uniform_complete"
    if engine == "auto":
        engine = "closed" if closed else ("exact" if top <= dense_cap else "mc")
    if engine == "closed":
        if not closed:
            raise ConfigurationError("closed form needs the uniform walk on complete graphs",
                                     field="engine")
        series = complete_closed_form_series(schedule, top)
        return {m: float(series[m - 1]) for m in ladder}
    if engine == "exact":
        result = exact_expected_unvisited(schedule, family, tag, top, p, q, dense_cap=dense_cap,
                                          **graph_kwargs)
        return {m: float(result.unvisited_by_round[m - 1]) for m in ladder}
    if engine == "mc":
        edges = graph_kwargs.get("edges")
        plan = SimulationPlan(schedule=schedule, family=family, walk=tag, n=top, trials=trials,
                              seed=seed, p=p, q=q,
                              degree=graph_kwargs.get("degree", 5),
                              graph_seed=graph_kwargs.get("graph_seed", 0),
                              edges=tuple(edges) if edges else None)
        records = estimate_unvisited_ladder(plan, ladder, jobs=jobs)
        return {m: records[m].mean for m in ladder}
    raise ConfigurationError(f"unknown engine '{engine}'", field="engine")


def fit_exponent(ns, values):
    """Least-squares slope of log value against log n, with the RMS residual."""
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(ns) < 2 or len(set(ns)) != len(ns):
        raise ConfigurationError("need at least two distinct n to fit", field="ladder")
    if (values <= 0).any():
        raise ConfigurationError("E[U] must be positive at every ladder point to fit",
                                 field="ladder")
    x, y = np.log(ns), np.log(values)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return float(slope), residual


@dataclass(frozen=True)
class CertificateRow:
    label: str
    n: int
    measured: float
    bound: float
    sense: str
    ok: bool = True

    @property
    def margin(self):
        if self.sense == "<=":
            return self.bound - self.measured
        if self.sense == ">=":
            return self.measured - self.bound
        if self.sense == "~":
            return -abs(self.measured - self.bound)
        return None


def _row(label, n, measured, bound, sense, ok=None):
    if ok is None:
        if sense == "<=":
            ok = measured <= bound + INVARIANT_SLACK * max(1.0, abs(bound))
        elif sense == ">=":
            ok = measured >= bound - INVARIANT_SLACK * max(1.0, abs(bound))
        else:
            ok = True
    return CertificateRow(label, int(n), float(measured), float(bound), sense, bool(ok))


@dataclass
class Certificate:
    theorem_id: str
    rows: list
    verdict: str
    audit: list = field(default_factory=list)
    violated: str = None

    @property
    def failed(self):
        return self.verdict == "fail"

    def csv_rows(self):
        for row in self.audit + self.rows:
            margin = row.margin
            yield [self.theorem_id, row.label, row.n, row.measured, row.bound,
                   "" if margin is None else margin, row.sense, row.ok, self.verdict]
        if self.verdict == "inapplicable":
            yield [self.theorem_id, f"hypothesis:{self.violated}", "", "", "", "", "", False,
                   self.verdict]


@dataclass(frozen=True)
class CatalogEntry:
    runner: object
    title: str
    family: str
    walk: str
    ladder: tuple
    defaults: dict
    exploratory: bool = False


@dataclass(frozen=True)
class TheoremCase:
    theorem_id: str
    params: dict = field(default_factory=dict)
    ladder: tuple = ()
    engine: str = "auto"
    family: str = None
    walk: str = None
    trials: int = DEFAULT_TRIALS
    seed: int = DEFAULT_SEED
    dense_cap: int = DEFAULT_DENSE_CAP
    t_cap: int = DEFAULT_T_CAP
    delta: float = DEFAULT_DELTA
    graph: dict = field(default_factory=dict)
    jobs: int = 1

    def __post_init__(self):
        if self.theorem_id not in CATALOG:
            raise ConfigurationError(f"unknown theorem id '{self.theorem_id}'", field="theorem")
        if self.engine not in ENGINES:
            raise ConfigurationError(f"unknown engine '{self.engine}'", field="engine")
        if any(int(m) < 1 for m in self.ladder):
            raise ConfigurationError("ladder values must be >= 1", field="ladder")
        if self.delta <= 0:
            raise ConfigurationError("delta must be > 0", field="delta")

    @property
    def entry(self):
        return CATALOG[self.theorem_id]

    def resolved(self):
        """Copy with the catalog defaults filled in."""
        entry = self.entry
        params = dict(entry.defaults)
        params.update(self.params)
        return replace(
            self,
            params=params,
            ladder=tuple(sorted(set(int(m) for m in (self.ladder or entry.ladder)))),
            family=self.family or entry.family,
            walk=resolve_walk(self.walk or entry.walk),
        )

    def param(self, name):
        try:
            return self.params[name]
        except KeyError:
            raise ConfigurationError(f"{self.theorem_id} has no parameter '{name}'", field=name)

    @property
    def top(self):
        return self.ladder[-1]

    @property
    def graph_kwargs(self):
        return {k: v for k, v in self.graph.items() if v is not None}

    def profile(self, n=None):
        return round_profile(self.family, self.walk, self.top if n is None else n,
                             self.params.get("p", DEFAULT_P), self.params.get("q", DEFAULT_Q),
                             self.t_cap, **self.graph_kwargs)

    def measure(self, schedule):
        return measure_ladder(schedule, self.family, self.walk, self.ladder, self.engine,
                              self.trials, self.seed, self.dense_cap,
                              self.params.get("p", DEFAULT_P), self.params.get("q", DEFAULT_Q),
                              self.jobs, **self.graph_kwargs)


def default_case(theorem_id, **overrides):
    """A case with catalog defaults; overrides may carry any TheoremCase field."""
    params = overrides.pop("params", {}) or {}
    return TheoremCase(theorem_id=theorem_id, params=dict(params), **overrides).resolved()


# hypothesis audit

def _require(condition, message, inequality):
    if not condition:
        raise HypothesisError(message, inequality=inequality)


def _require_walk(case, family=None, walk=None):
    if family is not None:
        _require(case.family == family, f"needs the {family} family, got {case.family}",
                 f"family = {family}")
    if walk is not None:
        _require(case.walk == walk, f"needs the {walk} walk, got {case.walk}", f"walk = {walk}")


def _audit_flags(case, profile, *flags):
    name = " and ".join(flags)
    for r in profile:
        for flag in flags:
            _require(getattr(r, flag), f"P^({r.i}) is not {flag}", f"P^(i) {name}")
    return _row(f"hypothesis:P^(i) {name}", profile[-1].i, 1.0, 1.0, "info")


def _audit_durations(schedule, required, inequality):
    """Check f(i) >= required[i] for every listed round; report min f(i)/required[i]."""
    if not required:
        return _row(f"hypothesis:{inequality}", 1, 1.0, 1.0, "info")
    worst = math.inf
    for i, need in required.items():
        f_i = schedule.duration(i)
        _require(f_i >= need - 1e-9 * max(1.0, need),
                 f"f({i}) = {f_i} < {need:.6g}", inequality)
        if need > 0:
            worst = min(worst, f_i / need)
    return _row(f"hypothesis:{inequality}", max(required), worst if math.isfinite(worst) else 1.0,
                1.0, ">=")


def _schedule(case, rule, initial_order=1):
    """The case's schedule: the user's schedule text when given, else ceil(rule(i)) per round."""
    text = case.params.get("schedule")
    if text:
        return parse_schedule(text, case.top, case.family, initial_order)
    durations = [ceil_steps(rule(i)) for i in range(1, case.top + 1)]
    return GrowthSchedule.from_durations(durations, initial_order=initial_order)


def _trend_row(case, values):
    first, final = values[case.ladder[0]], values[case.top]
    return _row("trend:final <= first and final < delta", case.top, final, case.delta, "<",
                ok=final <= first + INVARIANT_SLACK and final < case.delta)


def _complete_uniform(case):
    _require_walk(case, "complete", "uniform_complete")


# runners; each returns (rows, audit)

def _run_linear(case):
    _complete_uniform(case)
    C = case.param("C")
    _require(C > 0, f"C = {C}", "C > 0")
    schedule = _schedule(case, lambda i: C * i)
    audit = [_audit_durations(schedule, {i: C * i for i in range(1, case.top + 1)}, "f(i) >= C i")]
    values = case.measure(schedule)
    bound = 1.0 / math.expm1(C)
    return [_row("E[U] <= 1/(e^C - 1)", m, values[m], bound, "<=") for m in case.ladder], audit


def _run_superlinear(case):
    _complete_uniform(case)
    a = case.param("a")
    _require(a > 0, f"a = {a}", "a > 0")
    schedule = _schedule(case, lambda i: i ** (1.0 + a))
    ratios = [schedule.duration(m) / m for m in case.ladder]
    _require(all(y >= x for x, y in zip(ratios, ratios[1:])) and ratios[-1] > ratios[0],
             "f(i)/i does not grow along the ladder", "f(i)/i -> infinity")
    audit = [_row("hypothesis:f(n)/n growth", case.top, ratios[-1], ratios[0], ">=")]
    values = case.measure(schedule)
    rows = [_row("E[U]", m, values[m], 0.0, "info") for m in case.ladder]
    rows.append(_trend_row(case, values))
    return rows, audit


def _run_sublinear(case):
    """
    Integer f cannot be unbounded, sublinear and keep f(i)/i nonincreasing at once: past
    f(i) < i the ratio condition pins f. So f = ceil(phi) with phi(i) = C i^(1-gamma) real.
    f nondecreasing gives the lower bound; f >= phi with phi(i)/i nonincreasing gives
    E[U] <= n/phi(n), since E[U] only decreases as f grows.
    """
    _complete_uniform(case)
    C, gamma = case.param("C"), case.param("gamma")
    _require(C > 0 and 0.0 <= gamma < 1.0, f"C = {C}, gamma = {gamma}", "C > 0, 0 <= gamma < 1")
    phi = lambda i: C * i ** (1.0 - gamma)
    schedule = _schedule(case, phi)
    f = schedule.durations(case.top)
    _require(bool(np.all(np.diff(f) >= 0)), "f decreases somewhere", "f(i) <= f(i+1)")
    audit = [_audit_durations(schedule, {i: phi(i) for i in range(1, case.top + 1)},
                              "f(i) >= C i^(1-gamma)")]
    _require(f[-1] > f[0], "f is constant on the ladder", "f unbounded")
    audit.append(_row("hypothesis:f nondecreasing and unbounded", case.top,
                      float(f[-1]), float(f[0]), ">="))
    values = case.measure(schedule)
    rows = []
    for m in case.ladder:
        checks = {c.name: c for c in complete_bounds(schedule.with_horizon(m), m)}
        f_m = schedule.duration(m)
        rows.append(_row("E[U] >= n/(f(n)+1) (1-1/n)^f(n)", m, values[m],
                         checks["nondecreasing_lower"].value, ">="))
        rows.append(_row("E[U] <= n/phi(n)", m, values[m], m / phi(m), "<="))
        rows.append(_row("E[U] (f(n)+1)/n", m, values[m] * (f_m + 1) / m, 1.0, "info"))
    return rows, audit


def _run_constant(case):
    _complete_uniform(case)
    c = case.param("c")
    _require(int(c) == c and c >= 1, f"c = {c}", "c a positive integer")
    c = int(c)
    schedule = _schedule(case, lambda i: c)
    f = schedule.durations(case.top)
    _require(bool(np.all(f == f[0])), "f is not constant", "f(i) = c")
    c = int(f[0])
    audit = [_row("hypothesis:f(i) = c", case.top, float(c), float(c), "info")]
    values = case.measure(schedule)
    rows = []
    for m in case.ladder:
        normalized = values[m] * (c + 1) / m
        rows.append(_row("E[U] (c+1)/n <= 1", m, normalized, 1.0, "<="))
        rows.append(_row("E[U] (c+1)/n >= (1-1/n)^c", m, normalized, (1.0 - 1.0 / m) ** c, ">="))
    return rows, audit


def _run_hitting_linear(case):
    C = case.param("C")
    _require(C > 1, f"C = {C}", "C > 1")
    profile = case.profile()
    schedule = _schedule(case, lambda i: C * profile[i - 1].t_hit)
    audit = [_audit_durations(schedule, {r.i: C * r.t_hit for r in profile}, "f(i) >= C t_hit(i)")]
    values = case.measure(schedule)
    bound = 1.0 / (C - 1.0)
    return [_row("E[U] <= 1/(C-1)", m, values[m], bound, "<=") for m in case.ladder], audit


def _run_hitting_superlinear(case):
    a = case.param("a")
    _require(a > 0, f"a = {a}", "a > 0")
    profile = case.profile()
    schedule = _schedule(case, lambda i: profile[i - 1].t_hit * i ** a)
    ratios = [schedule.duration(m) / profile[m - 1].t_hit for m in case.ladder if m > 1]
    _require(len(ratios) >= 2 and all(y >= x for x, y in zip(ratios, ratios[1:]))
             and ratios[-1] > ratios[0],
             "f(i)/t_hit(i) does not grow along the ladder", "f(i)/t_hit(i) -> infinity")
    audit = [_row("hypothesis:f(n)/t_hit(n) growth", case.top, ratios[-1], ratios[0], ">=")]
    values = case.measure(schedule)
    rows = [_row("E[U]", m, values[m], 0.0, "info") for m in case.ladder]
    rows.append(_trend_row(case, values))
    return rows, audit


def _run_mix_power(case):
    C, gamma = case.param("C"), case.param("gamma")
    _require(C > 0 and 0.0 <= gamma <= 1.0, f"C = {C}, gamma = {gamma}", "C > 0, 0 <= gamma <= 1")
    profile = case.profile()
    audit = [_audit_flags(case, profile, "lazy", "reversible")]
    worst = math.inf
    for r in profile[1:]:
        need = r.i ** gamma / C
        ratio = r.t_hit / r.t_mix
        _require(ratio >= need, f"t_hit({r.i})/t_mix({r.i}) = {ratio:.6g} < {need:.6g}",
                 "t_hit(i)/t_mix(i) >= i^gamma/C")
        worst = min(worst, ratio / need)
    audit.append(_row("hypothesis:t_hit(i)/t_mix(i) >= i^gamma/C", case.top, worst, 1.0, ">="))
    schedule = _schedule(case, lambda i: 3.0 * C * profile[i - 1].t_hit / i ** gamma)
    audit.append(_audit_durations(
        schedule, {r.i: 3.0 * C * r.t_hit / r.i ** gamma for r in profile[1:]},
        "f(i) >= 3C t_hit(i)/i^gamma"))
    values = case.measure(schedule)
    return [_row("E[U] <= 8 n^gamma/C + 32", m, values[m], 8.0 * m ** gamma / C + 32.0, "<=")
            for m in case.ladder], audit


def _run_mix_general(case):
    delta = case.param("Delta")
    _require(delta > 0, f"Delta = {delta}", "Delta > 0")
    profile = case.profile()
    audit = [_audit_flags(case, profile, "lazy", "reversible")]
    need = {r.i: r.t_hit / delta + 2.0 * r.t_mix for r in profile}
    schedule = _schedule(case, lambda i: need[i])
    audit.append(_audit_durations(schedule, need, "f(i) >= t_hit(i)/Delta + 2 t_mix(i)"))
    values = case.measure(schedule)
    return [_row("E[U] <= 8 Delta + 32", m, values[m], 8.0 * delta + 32.0, "<=")
            for m in case.ladder], audit


def _edge_growth(case, n):
    return edge_growth_constant(growing_sequence(case.family, n, **case.graph_kwargs))


def _run_simple(case):
    C, gamma = case.param("C"), case.param("gamma")
    _require(C > 0 and 0.0 <= gamma <= 1.0, f"C = {C}, gamma = {gamma}", "C > 0, 0 <= gamma <= 1")
    profile = case.profile()
    audit = [_audit_flags(case, profile, "lazy", "simple")]
    L = _edge_growth(case, case.top)
    audit.append(_row("hypothesis:|E(i)|/|E(i-1)| <= 1 + L/i, L measured", case.top, L, L, "info"))
    need = {r.i: (C / r.i ** gamma + (L + 1.0) / (2.0 * r.i)) * r.t_hit for r in profile[1:]}
    schedule = _schedule(case, lambda i: need.get(i, 1.0))
    audit.append(_audit_durations(schedule, need, "f(i) >= (C/i^gamma + (L+1)/(2i)) t_hit(i)"))
    values = case.measure(schedule)
    rows = []
    for m in case.ladder:
        bound = math.sqrt(_edge_growth(case, m) + 1.0) * m ** gamma / C
        rows.append(_row("E[U] <= sqrt(L+1) n^gamma/C", m, values[m], bound, "<="))
    return rows, audit


def _run_symmetric(case):
    C, gamma = case.param("C"), case.param("gamma")
    _require(C > 0 and 0.0 <= gamma <= 1.0, f"C = {C}, gamma = {gamma}", "C > 0, 0 <= gamma <= 1")
    profile = case.profile()
    audit = [_audit_flags(case, profile, "lazy", "symmetric")]
    need = {r.i: (C / r.i ** gamma + 2.0 / r.i) * r.t_hit for r in profile[1:]}
    schedule = _schedule(case, lambda i: need.get(i, 1.0))
    audit.append(_audit_durations(schedule, need, "f(i) >= (C/i^gamma + 2/i) t_hit(i)"))
    values = case.measure(schedule)
    return [_row("E[U] <= sqrt(3) n^gamma/C", m, values[m], math.sqrt(3.0) * m ** gamma / C, "<=")
            for m in case.ladder], audit


def _run_metropolis(case):
    _require_walk(case, walk="lazy_metropolis")
    return _run_symmetric(case)


def _run_moderate(case):
    delta = case.param("Delta")
    _require(delta > 0, f"Delta = {delta}", "Delta > 0")
    profile = case.profile()
    audit = [_audit_flags(case, profile, "lazy", "reversible")]
    growth = {r.i: r.i * (r.r - 1.0) + 1.0 for r in profile[1:]}
    need = {i: (1.0 / delta + g / (2.0 * i)) * profile[i - 1].t_hit for i, g in growth.items()}
    schedule = _schedule(case, lambda i: need.get(i, 1.0))
    audit.append(_audit_durations(schedule, need,
                                  "f(i) >= (1/Delta + (i(r_i-1)+1)/(2i)) t_hit(i)"))
    values = case.measure(schedule)
    rows = []
    for m in case.ladder:
        worst = max((g for i, g in growth.items() if i <= m), default=1.0)
        rows.append(_row("E[U] <= Delta sqrt(max i(r_i-1)+1)", m, values[m],
                         delta * math.sqrt(worst), "<="))
    return rows, audit


def _run_path_lower(case):
    _require_walk(case, "path", "path_chain")
    C, gamma = case.param("C"), case.param("gamma")
    p, q = case.params.get("p", DEFAULT_P), case.params.get("q", DEFAULT_Q)
    rows, audit = [], []
    for m in case.ladder:
        try:
            res = path_lowerbound_experiment(C, gamma, m, case.trials, case.seed,
                                             case.params.get("epsilon"), p, q,
                                             jobs=case.jobs, dense_cap=case.dense_cap)
        except ConfigurationError as e:
            raise HypothesisError(str(e), inequality=str(e))
        audit.append(_row("hypothesis:L = R - ceil(0.6n) in [0.3n, 0.4n]", m, res.L / m, 0.3, ">="))
        value = res.measured.mean if res.exact_unvisited is None else res.exact_unvisited
        start_left = (res.start_left_mass if res.exact_start_left_mass is None
                      else res.exact_start_left_mass)
        rows.append(_row("E[U] >= (n-R) (1-T/(4(R-L)^2)) pi(v_1..v_L)", m, value, res.bound, ">="))
        rows.append(_row("E[U] vs 0.18 eps n^gamma", m, value, res.nominal_bound, "info"))
        rows.append(_row("Pr[v_R missed | v_L at round R] >= 1-T/(4(R-L)^2)", m,
                         res.miss_given_left, res.miss_given_left_bound, ">="))
        rows.append(_row(f"Pr[v_R missed | v_L at round R] >= {MISS_GIVEN_LEFT_FLOOR:g}", m,
                         res.miss_given_left, MISS_GIVEN_LEFT_FLOOR, ">=", ok=res.miss_floor_holds))
        rows.append(_row("min_k Pr[X_0^(k) <= v_L] >= min_k pi(v_1..v_L)", m, start_left,
                         res.start_left_bound, ">="))
    return rows, audit


def _run_path_scaling(case):
    _require_walk(case, "path")
    _require(case.walk in ("lazy_simple", "lazy_metropolis"), f"walk {case.walk}",
             "lazy simple or lazy Metropolis walk")
    C, gamma = case.param("C"), case.param("gamma")
    if len(case.ladder) < MIN_SCALING_POINTS:
        raise ConfigurationError(f"scaling needs >= {MIN_SCALING_POINTS} ladder points",
                                 field="ladder")
    schedule = _schedule(case, lambda i: C * i ** (2.0 - gamma))
    values = case.measure(schedule)
    slope, residual = fit_exponent(case.ladder, [values[m] for m in case.ladder])
    rows = [_row("E[U]", m, values[m], m ** gamma / C, "info") for m in case.ladder]
    rows.append(_row(f"fit exponent within {EXPONENT_TOL:g} of gamma", case.top, slope, gamma, "~",
                     ok=abs(slope - gamma) <= EXPONENT_TOL))
    rows.append(_row("fit residual", case.top, residual, 0.0, "info"))
    return rows, []


def _run_complete_power(case):
    _complete_uniform(case)
    C, gamma = case.param("C"), case.param("gamma")
    _require(C > 0 and 0.0 <= gamma <= 1.0, f"C = {C}, gamma = {gamma}", "C > 0, 0 <= gamma <= 1")
    upper = _schedule(case, lambda i: C * i ** (1.0 - gamma))
    audit = [_audit_durations(upper, {i: C * i ** (1.0 - gamma) for i in range(1, case.top + 1)},
                              "f(i) >= C i^(1-gamma)")]
    values = case.measure(upper)
    rows = [_row("E[U] <= n^gamma/C", m, values[m], m ** gamma / C, "<=") for m in case.ladder]
    if C >= 1.0:
        lower = GrowthSchedule.from_durations(
            [int(math.floor(C * i ** (1.0 - gamma) + 1e-12)) for i in range(1, case.top + 1)])
        lower_values = case.measure(lower)
        for m in case.ladder:
            bound = m ** gamma / (C + m ** (gamma - 1.0)) * (1.0 - 1.0 / m) ** (C * m ** (1.0 - gamma))
            rows.append(_row("E[U] >= n^gamma/(C+n^(gamma-1)) (1-1/n)^(C n^(1-gamma))", m,
                             lower_values[m], bound, ">="))
    else:
        audit.append(_row("hypothesis:lower part needs C >= 1", case.top, C, 1.0, "info"))
    return rows, audit


def _run_expander(case):
    _require_walk(case, "expander_like", "lazy_simple")
    C, gamma = case.param("C"), case.param("gamma")
    _require(C > 0 and 0.0 <= gamma <= 1.0, f"C = {C}, gamma = {gamma}", "C > 0, 0 <= gamma <= 1")
    profile = case.profile()
    audit = [_audit_flags(case, profile, "lazy", "reversible")]
    K1 = max(r.t_hit / r.i for r in profile[1:])
    K2 = max(2.0 * r.t_mix / math.log(r.i) for r in profile[1:])
    last = profile[-1]
    audit.append(_row("hypothesis:K1 = max t_hit(i)/i", case.top, K1, K1, "info"))
    audit.append(_row("hypothesis:K2 = max 2 t_mix(i)/log i", case.top, K2, K2, "info"))
    audit.append(_row("hypothesis:d_max/d_min", case.top, last.d_max / max(1, last.d_min),
                      last.d_ave, "info"))
    schedule = _schedule(case, lambda i: C * K1 * i ** (1.0 - gamma) + K2 * math.log(i))
    audit.append(_audit_durations(
        schedule, {r.i: C * r.t_hit / r.i ** gamma + 2.0 * r.t_mix for r in profile[1:]},
        "f(i) >= t_hit(i)/(i^gamma/C) + 2 t_mix(i)"))
    values = case.measure(schedule)
    return [_row("E[U] <= 8 n^gamma/C + 32", m, values[m], 8.0 * m ** gamma / C + 32.0, "<=")
            for m in case.ladder], audit


def _run_lollipop(case):
    _require_walk(case, "lollipop", "lazy_simple")
    C, gamma = case.param("C"), case.param("gamma")
    _require(C > 0 and 0.0 <= gamma <= 1.0, f"C = {C}, gamma = {gamma}", "C > 0, 0 <= gamma <= 1")
    profile = case.profile()
    audit = [_audit_flags(case, profile, "lazy", "simple")]
    L = _edge_growth(case, case.top)
    K2 = max(r.t_hit / r.i ** 3 for r in profile[1:])
    C1 = K2 * (C + (L + 1.0) / 2.0)
    C2 = math.sqrt(L + 1.0) / C
    audit.append(_row("hypothesis:C1 = K2 (C + (L+1)/2)", case.top, C1, C1, "info"))
    schedule = _schedule(case, lambda i: C1 * i ** (3.0 - gamma))
    need = {r.i: (C / r.i ** gamma + (L + 1.0) / (2.0 * r.i)) * r.t_hit for r in profile[1:]}
    audit.append(_audit_durations(schedule, need, "f(i) >= (C/i^gamma + (L+1)/(2i)) t_hit(i)"))
    values = case.measure(schedule)
    return [_row("E[U] <= C2 n^gamma", m, values[m], C2 * m ** gamma, "<=")
            for m in case.ladder], audit


def _run_initial(case):
    _complete_uniform(case)
    n0, delta = int(case.param("n0")), case.param("Delta")
    _require(n0 >= 1 and delta > 0, f"n0 = {n0}, Delta = {delta}", "n0 >= 1, Delta > 0")
    schedule = _schedule(case, lambda i: 2.0 * i / delta, initial_order=n0)
    audit = [_audit_durations(schedule, {i: 2.0 * i / delta for i in range(1, case.top + 1)},
                              "f(i) >= 2i/Delta")]
    values = case.measure(schedule)
    return [_row("E[U(n)] <= 2 n0 + Delta", m, values[m], 2.0 * n0 + delta, "<=")
            for m in case.ladder], audit


def _run_below_hit(case):
    a = case.param("a")
    _require(0 < a < 1, f"a = {a}", "0 < a < 1")
    profile = case.profile()
    schedule = _schedule(case, lambda i: a * profile[i - 1].t_hit)
    values = case.measure(schedule)
    rows = [_row("E[U]", m, values[m], 0.0, "info") for m in case.ladder]
    rows += [_row("E[U]/n", m, values[m] / m, 0.0, "info") for m in case.ladder]
    return rows, []


CATALOG = {
    "T1.1-1": CatalogEntry(_run_linear, "f(i) >= C i on complete graphs: E[U] bounded",
                           "complete", "uniform_complete", (10, 100, 1000), {"C": 1.0}),
    "T1.1-2": CatalogEntry(_run_superlinear, "f(i)/i -> infinity: E[U] -> 0",
                           "complete", "uniform_complete", (10, 20, 40, 80, 160), {"a": 0.5}),
    "T1.1-3": CatalogEntry(_run_sublinear, "unbounded sublinear f: E[U] ~ n/(f(n)+1)",
                           "complete", "uniform_complete", (10, 100, 1000, 5000),
                           {"C": 1.0, "gamma": 0.5}),
    "T1.1-4": CatalogEntry(_run_constant, "constant f = c: E[U] ~ n/(c+1)",
                           "complete", "uniform_complete", (10, 100, 2000), {"c": 1}),
    "T1.2-1": CatalogEntry(_run_hitting_linear, "f(i) >= C t_hit(i), C > 1: E[U] <= 1/(C-1)",
                           "path", "lazy_simple", (8, 16, 32, 64), {"C": 2.0}),
    "T1.2-2": CatalogEntry(_run_hitting_superlinear, "f(i)/t_hit(i) -> infinity: E[U] -> 0",
                           "complete", "lazy_simple", (8, 16, 32, 64), {"a": 0.5}),
    "T1.3": CatalogEntry(_run_mix_power, "t_mix << t_hit: E[U] <= 8 n^gamma/C + 32",
                         "complete", "lazy_simple", (8, 16, 32, 64), {"C": 1.0, "gamma": 0.5}),
    "T1.3-gen": CatalogEntry(_run_mix_general, "f >= t_hit/Delta + 2 t_mix: E[U] <= 8 Delta + 32",
                             "path", "lazy_simple", (8, 16, 32), {"Delta": 1.0}),
    "T1.4": CatalogEntry(_run_simple, "lazy simple walks: E[U] <= sqrt(L+1) n^gamma/C",
                         "path", "lazy_simple", (8, 16, 32, 64), {"C": 1.0, "gamma": 0.5}),
    "T1.5": CatalogEntry(_run_symmetric, "lazy symmetric walks: E[U] <= sqrt(3) n^gamma/C",
                         "path", "lazy_metropolis", (8, 16, 32, 64), {"C": 1.0, "gamma": 0.5}),
    "T1.6": CatalogEntry(_run_path_lower, "growing path, f <= C i^(2-gamma): E[U] lower bound",
                         "path", "path_chain", (100,),
                         {"C": 1.0, "gamma": 1.0, "epsilon": None, "p": DEFAULT_P, "q": DEFAULT_Q}),
    "C1.7": CatalogEntry(_run_path_scaling, "growing path: E[U] scales as n^gamma",
                         "path", "lazy_simple", (25, 50, 100, 200), {"C": 1.0, "gamma": 0.5}),
    "C-simpleKn": CatalogEntry(_run_complete_power, "complete graphs, f ~ C i^(1-gamma)",
                               "complete", "uniform_complete", (10, 100, 1000),
                               {"C": 1.0, "gamma": 0.5}),
    "C-expander": CatalogEntry(_run_expander, "bounded-degree expanders: E[U] <= 8 n^gamma/C + 32",
                               "expander_like", "lazy_simple", (16, 32, 64),
                               {"C": 1.0, "gamma": 0.5}),
    "C-lollipop": CatalogEntry(_run_lollipop, "lollipop graphs: E[U] <= C2 n^gamma",
                               "lollipop", "lazy_simple", (8, 16, 32), {"C": 1.0, "gamma": 0.5}),
    "C-Metro": CatalogEntry(_run_metropolis, "lazy Metropolis: E[U] <= sqrt(3) n^gamma/C",
                            "lollipop", "lazy_metropolis", (8, 16, 32), {"C": 1.0, "gamma": 0.5}),
    "T-moderate": CatalogEntry(_run_moderate, "moderate pi growth: E[U] <= Delta sqrt(max i(r_i-1)+1)",
                               "lollipop", "lazy_simple", (8, 16, 32), {"Delta": 1.0}),
    "A-initial": CatalogEntry(_run_initial, "n0 initial vertices: E[U(n)] <= 2 n0 + Delta",
                              "complete", "uniform_complete", (50, 200), {"n0": 5, "Delta": 1.0}),
    "X-below-hit": CatalogEntry(_run_below_hit, "f = a t_hit with a < 1 (exploratory)",
                                "path", "lazy_simple", (8, 16, 32, 64), {"a": 0.5},
                                exploratory=True),
}


def run_case(case):
    """
    Run one theorem case.

    Args:
        case (TheoremCase): unresolved cases get the catalog defaults

    Returns:
        Certificate: "inapplicable" with the violated inequality when the audit fails
    """
    case = case.resolved()
    log(f"{case.theorem_id}: {case.entry.title} ({case.family}, {case.walk}, n={list(case.ladder)})")
    try:
        rows, audit = case.entry.runner(case)
    except HypothesisError as e:
        log(f"{case.theorem_id}: inapplicable, {e} [{e.inequality}]", "!")
        return Certificate(case.theorem_id, [], "inapplicable", violated=e.inequality)

    if case.entry.exploratory:
        verdict = "exploratory"
    else:
        verdict = "pass" if all(row.ok for row in rows) else "fail"
    level = "!" if verdict == "fail" else "+"
    log(f"{case.theorem_id}: {verdict}", level)
    return Certificate(case.theorem_id, rows, verdict, audit=audit)


def run_cases(cases, jobs=1):
    """
    Run independent cases, up to jobs at a time.

    Returns:
        dict: Execution results
            {
                "success": True/False,
                "total": int,
                "executed": int,
                "failed": int,
                "results": [{"job": str, "success": bool, "value": Certificate, "error": str}, ...]
            }
    """
    outcome = run_jobs(run_case, cases, jobs, describe=lambda c: c.theorem_id)
    for result in outcome["results"]:
        certificate = result["value"]
        if certificate is not None and certificate.failed:
            result["success"] = False
            result["error"] = "certificate failed"
            outcome["failed"] += 1
    outcome["success"] = outcome["total"] > 0 and outcome["failed"] == 0
    return outcome


@dataclass(frozen=True)
class ScalingRow:
    gamma: float
    n: int
    value: float
    slope: float
    residual: float

    def row(self):
        return [self.gamma, self.n, self.value, self.slope, self.residual]


def scaling_table(family, walk, gammas, ladder, C=1.0, engine="auto", trials=DEFAULT_TRIALS,
                  seed=DEFAULT_SEED, dense_cap=DEFAULT_DENSE_CAP, p=DEFAULT_P, q=DEFAULT_Q,
                  jobs=1, **graph_kwargs):
    """
    E[U] over a gamma grid under f(i) = ceil(C i^(family exponent - gamma)), with the
    log-log slope per gamma.
    """
    ladder = sorted(set(int(m) for m in ladder))
    if len(ladder) < MIN_SCALING_POINTS:
        raise ConfigurationError(f"scaling needs >= {MIN_SCALING_POINTS} ladder points",
                                 field="ladder")
    if ladder[-1] < 10 * ladder[0]:
        log(f"ladder {ladder} spans less than a decade", "!")
    if family not in FAMILY_EXPONENT:
        raise ConfigurationError(f"unknown family '{family}'", field="family")
    table = []
    for gamma in gammas:
        schedule = GrowthSchedule(kind="power", horizon=ladder[-1], C=C,
                                  exponent=FAMILY_EXPONENT[family] - gamma, gamma=gamma)
        values = measure_ladder(schedule, family, walk, ladder, engine, trials, seed, dense_cap,
                                p, q, jobs, **graph_kwargs)
        slope, residual = fit_exponent(ladder, [values[m] for m in ladder])
        log(f"gamma={gamma:g}: fitted exponent {slope:.4f} (residual {residual:.3g})", "+")
        table.extend(ScalingRow(gamma, m, values[m], slope, residual) for m in ladder)
    return table
