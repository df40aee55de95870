"""
Vertex-arrival schedules and growing graph families.

A schedule fixes how many walk steps f(i) are taken while the graph has its
i-th order; the graph families add exactly one vertex per round and never
remove anything, so snapshot n-1 is always a subgraph of snapshot n.

Vertex labels are 1-based and follow arrival order (v_1, v_2, ...).
"""

import math
from dataclasses import dataclass, field, replace

import networkx as nx
import numpy as np

from errors import ConfigurationError, RangeError, StructuralError

FAMILIES = ("complete", "path", "lollipop", "expander_like", "custom")
SCHEDULE_KINDS = ("constant", "linear", "power", "table")

# exponent of i in f(i) = C * i^(exponent - gamma) when a power schedule omits exp=
FAMILY_EXPONENT = {
    "complete": 1.0,
    "expander_like": 1.0,
    "path": 2.0,
    "lollipop": 3.0,
    "custom": 2.0,
}

DEFAULT_EXPANDER_DEGREE = 5
DEFAULT_GRAPH_SEED = 0
_CEIL_SLACK = 1e-9


def ceil_steps(x):
    """Round a real duration up to an integer step count >= 1."""
    return max(1, math.ceil(x - _CEIL_SLACK * max(1.0, abs(x))))


@dataclass(frozen=True)
class GrowthSchedule:
    """
    Duration function f over rounds 1..horizon.

    Args:
        kind (str): one of SCHEDULE_KINDS
        horizon (int): final round n
        C (float): constant c, slope C, or power prefactor C
        exponent (float): power-law exponent E in f(i) = ceil(C * i^E)
        table (tuple): explicit durations f(1), f(2), ... for kind "table"
        initial_order (int): n0; 1 is the standard model, >1 the initial-clique variant
        gamma (float): recorded for power schedules built from a gamma
    """
    kind: str
    horizon: int
    C: float = 1.0
    exponent: float = 1.0
    table: tuple = field(default=())
    initial_order: int = 1
    gamma: float = None

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ConfigurationError(f"unknown schedule kind '{self.kind}'", field="schedule")
        if self.horizon < 1:
            raise RangeError(f"horizon must be >= 1, got {self.horizon}")
        if self.initial_order < 1:
            raise ConfigurationError("initial order n0 must be >= 1", field="n0")
        if self.kind == "table":
            if len(self.table) < self.horizon:
                raise ConfigurationError(
                    f"table defines {len(self.table)} rounds, horizon is {self.horizon}",
                    field="schedule")
            if any(int(v) < 1 for v in self.table):
                raise ConfigurationError("table durations must be >= 1", field="schedule")
        elif not self.C > 0:
            raise ConfigurationError(f"C must be > 0, got {self.C}", field="schedule")
        if self.gamma is not None and not 0.0 <= self.gamma <= 1.0:
            raise ConfigurationError(f"gamma must lie in [0, 1], got {self.gamma}", field="gamma")

    @classmethod
    def from_durations(cls, values, initial_order=1):
        values = tuple(int(v) for v in values)
        return cls(kind="table", horizon=len(values), table=values, initial_order=initial_order)

    def with_horizon(self, horizon):
        return replace(self, horizon=horizon)

    def duration(self, i):
        if not 1 <= i <= self.horizon:
            raise RangeError(f"round {i} outside [1, {self.horizon}]")
        if self.kind == "constant":
            return ceil_steps(self.C)
        if self.kind == "linear":
            return ceil_steps(self.C * i)
        if self.kind == "power":
            return ceil_steps(self.C * float(i) ** self.exponent)
        return int(self.table[i - 1])

    def durations(self, n=None):
        n = self.horizon if n is None else n
        return np.array([self.duration(i) for i in range(1, n + 1)], dtype=np.int64)

    @property
    def offset(self):
        """Vertices present before round 1 beyond the standard single start vertex."""
        return 0 if self.initial_order == 1 else self.initial_order

    def order_at(self, i):
        """Graph order during round i."""
        return self.offset + i

    def total_steps(self, n=None):
        return round_boundaries(self, (self.horizon if n is None else n) + 1)

    def describe(self):
        if self.kind == "constant":
            text = f"constant:c={self.C:g}"
        elif self.kind == "linear":
            text = f"linear:C={self.C:g}"
        elif self.kind == "power":
            text = f"power:C={self.C:g},exp={self.exponent:g}"
            if self.gamma is not None:
                text += f",gamma={self.gamma:g}"
        else:
            text = f"table:{len(self.table)} rounds"
        if self.initial_order > 1:
            text += f";n0={self.initial_order}"
        return text


def round_boundaries(schedule, n):
    """T_n = f(1) + ... + f(n-1), the global time at which round n starts."""
    if not 1 <= n <= schedule.horizon + 1:
        raise RangeError(f"round boundary {n} outside [1, {schedule.horizon + 1}]")
    return sum(schedule.duration(i) for i in range(1, n))


def boundaries(schedule, n=None):
    """Array T_1..T_{n+1} (length n+1)."""
    durations = schedule.durations(n)
    return np.concatenate(([0], np.cumsum(durations))).astype(np.int64)


def parse_schedule(text, horizon, family="complete", initial_order=1):
    """
    Parse the schedule mini-grammar.

    constant:c=K | linear:C=K | power:C=K,gamma=G[,exp=E] | table:PATH

    Without exp=, a power schedule uses E = FAMILY_EXPONENT[family] - gamma.
    """
    if not text or ":" not in text:
        raise ConfigurationError(f"malformed schedule spec '{text}'", field="schedule")
    kind, _, body = text.partition(":")
    kind = kind.strip().lower()

    if kind == "table":
        values = load_schedule_table(body.strip())
        return GrowthSchedule(kind="table", horizon=horizon, table=values,
                              initial_order=initial_order)

    params = {}
    for part in filter(None, (p.strip() for p in body.split(","))):
        key, sep, value = part.partition("=")
        if not sep:
            raise ConfigurationError(f"expected key=value, got '{part}'", field="schedule")
        try:
            params[key.strip()] = float(value)
        except ValueError:
            raise ConfigurationError(f"non-numeric value in '{part}'", field="schedule")

    if kind == "constant":
        c = params.get("c", params.get("C"))
        if c is None:
            raise ConfigurationError("constant schedule needs c=", field="schedule")
        return GrowthSchedule(kind="constant", horizon=horizon, C=c, initial_order=initial_order)
    if kind == "linear":
        return GrowthSchedule(kind="linear", horizon=horizon, C=params.get("C", 1.0),
                              initial_order=initial_order)
    if kind == "power":
        gamma = params.get("gamma")
        if "exp" in params:
            exponent = params["exp"]
        elif gamma is not None:
            if family not in FAMILY_EXPONENT:
                raise ConfigurationError(f"unknown family '{family}'", field="family")
            exponent = FAMILY_EXPONENT[family] - gamma
        else:
            raise ConfigurationError("power schedule needs gamma= or exp=", field="schedule")
        return GrowthSchedule(kind="power", horizon=horizon, C=params.get("C", 1.0),
                              exponent=exponent, gamma=gamma, initial_order=initial_order)
    raise ConfigurationError(f"unknown schedule kind '{kind}'", field="schedule")


def load_schedule_table(path):
    """Read `n <TAB> f(n)` lines; rounds must be consecutive from 1."""
    values = []
    try:
        with open(path, 'r', encoding='utf-8') as f:
            for lineno, line in enumerate(f, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split()
                if len(parts) != 2:
                    raise ConfigurationError(f"{path}:{lineno}: expected 'n f(n)'", field="schedule")
                n, f_n = int(parts[0]), int(parts[1])
                if n != len(values) + 1:
                    raise ConfigurationError(f"{path}:{lineno}: round {n} out of sequence",
                                             field="schedule")
                if f_n < 1:
                    raise ConfigurationError(f"{path}:{lineno}: f({n}) must be >= 1",
                                             field="schedule")
                values.append(f_n)
    except OSError as e:
        raise ConfigurationError(f"cannot read schedule table: {e}", field="schedule")
    except ValueError as e:
        if isinstance(e, ConfigurationError):
            raise
        raise ConfigurationError(f"non-integer entry in {path}: {e}", field="schedule")
    return tuple(values)


def load_edge_list(path):
    """Read `u v` edge lines for a custom family."""
    edges = []
    try:
        with open(path, 'r', encoding='utf-8') as f:
            for lineno, line in enumerate(f, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split()
                if len(parts) != 2:
                    raise ConfigurationError(f"{path}:{lineno}: expected 'u v'", field="edges")
                edges.append((int(parts[0]), int(parts[1])))
    except OSError as e:
        raise ConfigurationError(f"cannot read edge list: {e}", field="edges")
    except ValueError as e:
        if isinstance(e, ConfigurationError):
            raise
        raise ConfigurationError(f"non-integer vertex in {path}: {e}", field="edges")
    return edges


@dataclass(frozen=True)
class GraphSnapshot:
    order: int
    edges: frozenset
    family_tag: str

    @property
    def vertices(self):
        return tuple(range(1, self.order + 1))

    def edge_list(self):
        return sorted(self.edges)

    def degrees(self):
        deg = np.zeros(self.order, dtype=np.int64)
        for u, v in self.edges:
            deg[u - 1] += 1
            deg[v - 1] += 1
        return deg

    def adjacency(self):
        a = np.zeros((self.order, self.order))
        for u, v in self.edges:
            a[u - 1, v - 1] = a[v - 1, u - 1] = 1.0
        return a

    def neighbors(self):
        """Adjacency lists indexed by label - 1."""
        adj = [[] for _ in range(self.order)]
        for u, v in sorted(self.edges):
            adj[u - 1].append(v)
            adj[v - 1].append(u)
        return adj

    def to_networkx(self):
        g = nx.Graph()
        g.add_nodes_from(self.vertices)
        g.add_edges_from(self.edges)
        return g

    def is_connected(self):
        return self.order == 1 or nx.is_connected(self.to_networkx())


def _arrival_edges(family, k, degree, graph_seed, custom):
    """Edges that vertex v_k brings along."""
    if k == 1:
        return set()
    if family == "complete":
        return {(j, k) for j in range(1, k)}
    if family == "path":
        return {(k - 1, k)}
    if family == "lollipop":
        if k == 2:
            return {(1, 2)}
        if k % 2 == 1:
            return {(j, k) for j in range(1, k, 2)}
        return {(k - 2, k)}
    if family == "expander_like":
        rng = np.random.default_rng([graph_seed, k])
        chosen = rng.choice(k - 1, size=min(degree, k - 1), replace=False) + 1
        return {(int(j), k) for j in chosen}
    if family == "custom":
        new = custom.get(k, set())
        if not new:
            raise StructuralError(f"custom graph: vertex {k} has no edge to an earlier vertex")
        return new
    raise ConfigurationError(f"unknown family '{family}'", field="family")


def _index_custom(edges):
    by_vertex = {}
    for u, v in edges or ():
        if u == v:
            raise StructuralError(f"custom graph: self-loop at {u}")
        if min(u, v) < 1:
            raise StructuralError(f"custom graph: labels are 1-based, got ({u}, {v})")
        a, b = min(u, v), max(u, v)
        by_vertex.setdefault(b, set()).add((a, b))
    return by_vertex


def growing_sequence(family, n, degree=DEFAULT_EXPANDER_DEGREE, graph_seed=DEFAULT_GRAPH_SEED,
                     edges=None, start=1):
    """Yield snapshots of order start..n, sharing the incremental construction."""
    if n < 1:
        raise RangeError(f"order must be >= 1, got {n}")
    if family not in FAMILIES:
        raise ConfigurationError(f"unknown family '{family}'", field="family")
    if family == "custom" and not edges:
        raise ConfigurationError("custom family needs an edge list", field="edges")
    if family == "expander_like" and degree < 1:
        raise ConfigurationError("expander degree must be >= 1", field="degree")

    custom = _index_custom(edges) if family == "custom" else None
    current = set()
    for k in range(1, n + 1):
        current |= _arrival_edges(family, k, degree, graph_seed, custom)
        if k >= start:
            yield GraphSnapshot(order=k, edges=frozenset(current), family_tag=family)


def grow(family, n, degree=DEFAULT_EXPANDER_DEGREE, graph_seed=DEFAULT_GRAPH_SEED, edges=None):
    """Snapshot G^(n) of a family."""
    snapshot = None
    for snapshot in growing_sequence(family, n, degree, graph_seed, edges, start=n):
        pass
    return snapshot


def initial_snapshot(family, n0, **kwargs):
    """The graph present before round 1 in the initial-clique variant."""
    return grow(family, n0, **kwargs)


def validate_growth(prev, nxt):
    """Raise StructuralError unless nxt extends prev by exactly one connected vertex."""
    if nxt.order != prev.order + 1:
        raise StructuralError(f"order jumps from {prev.order} to {nxt.order}")
    if not prev.edges <= nxt.edges:
        raise StructuralError(f"snapshot {nxt.order} drops edges of snapshot {prev.order}")
    new_vertex = nxt.order
    for u, v in nxt.edges - prev.edges:
        if new_vertex not in (u, v):
            raise StructuralError(f"edge ({u}, {v}) appears without its arrival")
    if not any(new_vertex in e for e in nxt.edges - prev.edges):
        raise StructuralError(f"vertex {new_vertex} arrives without an edge")
    if not nxt.is_connected():
        raise StructuralError(f"snapshot {nxt.order} is disconnected")


def edge_growth_constant(snapshots):
    """L = max over 2 < i <= n of i * (|E^(i)| / |E^(i-1)| - 1)."""
    snapshots = list(snapshots)
    best = 0.0
    for prev, nxt in zip(snapshots, snapshots[1:]):
        if nxt.order <= 2 or not prev.edges:
            continue
        best = max(best, nxt.order * (len(nxt.edges) / len(prev.edges) - 1.0))
    return best


def degree_profile(snapshot):
    """(d_ave, d_min, d_max) of a snapshot; zeros for a single vertex."""
    if snapshot.order == 1:
        return 0.0, 0, 0
    deg = snapshot.degrees()
    return float(deg.mean()), int(deg.min()), int(deg.max())
