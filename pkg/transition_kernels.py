"""
Per-round transition kernels P^(n) for the supported walks.

Every builder returns an immutable TransitionKernel carrying its analytic
stationary distribution and the structural flags the theorem suite relies on.
`verify_kernel` checks those flags numerically.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse

from errors import ConfigurationError, NumericalError, RangeError
from growth_model import growing_sequence

WALKS = ("uniform_complete", "lazy_simple", "lazy_metropolis", "path_chain")
WALK_ALIASES = {
    "uniform": "uniform_complete",
    "complete": "uniform_complete",
    "simple": "lazy_simple",
    "lazy": "lazy_simple",
    "metropolis": "lazy_metropolis",
    "metro": "lazy_metropolis",
    "chain": "path_chain",
}

DEFAULT_P = 0.5
DEFAULT_Q = 0.25
KERNEL_TOL = 1e-12
_DENSE_FILL = 0.25


@dataclass(frozen=True, eq=False)
class TransitionKernel:
    order: int
    entries: np.ndarray
    stationary: np.ndarray
    walk_tag: str
    lazy: bool
    reversible: bool
    symmetric: bool
    simple: bool
    params: tuple = field(default=())

    @property
    def label(self):
        if self.walk_tag == "path_chain":
            p, q = self.params
            return f"path_chain({p:g},{q:g})"
        return self.walk_tag

    @property
    def pi_min(self):
        return float(self.stationary.min())

    @cached_property
    def _dense(self):
        return np.count_nonzero(self.entries) > _DENSE_FILL * self.order * self.order

    @cached_property
    def _csr(self):
        return sparse.csr_matrix(self.entries)

    @cached_property
    def _csr_t(self):
        return sparse.csr_matrix(self.entries.T)

    def step(self, rows):
        """One forward step of distributions: rows @ P (rows is (n,) or (m, n))."""
        if self.walk_tag == "uniform_complete":
            mass = rows.sum(axis=-1, keepdims=True) / self.order
            return mass * np.ones(self.order)
        if self._dense:
            return rows @ self.entries
        if rows.ndim == 1:
            return self._csr_t @ rows
        return (self._csr_t @ rows.T).T

    def step_back(self, rows):
        """One backward step of functions: rows @ P^T, i.e. P applied to each row."""
        if self.walk_tag == "uniform_complete":
            return self.step(rows)
        if self._dense:
            return rows @ self.entries.T
        if rows.ndim == 1:
            return self._csr @ rows
        return (self._csr @ rows.T).T


def resolve_walk(walk):
    tag = WALK_ALIASES.get(walk, walk)
    if tag not in WALKS:
        raise ConfigurationError(f"unknown walk '{walk}'", field="walk")
    return tag


def check_walk_family(walk, family):
    """uniform_complete lives on complete graphs, path_chain on paths."""
    tag = resolve_walk(walk)
    if tag == "uniform_complete" and family != "complete":
        raise ConfigurationError("uniform_complete walk needs the complete family", field="walk")
    if tag == "path_chain" and family != "path":
        raise ConfigurationError("path_chain walk needs the path family", field="walk")
    return tag


def _single_vertex(walk_tag, lazy, simple, params=()):
    return TransitionKernel(order=1, entries=np.ones((1, 1)), stationary=np.ones(1),
                            walk_tag=walk_tag, lazy=lazy, reversible=True, symmetric=True,
                            simple=simple, params=params)


def uniform_complete_kernel(n):
    """All entries 1/n, self-loop included; flagged non-lazy."""
    if n < 1:
        raise RangeError(f"order must be >= 1, got {n}")
    return TransitionKernel(
        order=n,
        entries=np.full((n, n), 1.0 / n),
        stationary=np.full(n, 1.0 / n),
        walk_tag="uniform_complete",
        lazy=False,
        reversible=True,
        symmetric=True,
        simple=False,
    )


def lazy_simple_kernel(g):
    """P(u,v) = 1/(2 d_u) on edges, P(u,u) = 1/2, pi(v) = d_v / 2|E|."""
    if g.order == 1:
        return _single_vertex("lazy_simple", lazy=True, simple=True)
    deg = g.degrees().astype(float)
    if (deg == 0).any():
        raise ConfigurationError(f"snapshot of order {g.order} has an isolated vertex",
                                 field="family")
    entries = 0.5 * g.adjacency() / deg[:, None]
    np.fill_diagonal(entries, 0.5)
    return TransitionKernel(
        order=g.order,
        entries=entries,
        stationary=deg / deg.sum(),
        walk_tag="lazy_simple",
        lazy=True,
        reversible=True,
        symmetric=bool(np.all(deg == deg[0])),
        simple=True,
    )


def lazy_metropolis_kernel(g):
    """P(u,v) = 1/(2 max(d_u, d_v)) on edges, diagonal the residual; pi uniform."""
    if g.order == 1:
        return _single_vertex("lazy_metropolis", lazy=True, simple=False)
    deg = g.degrees()
    entries = np.zeros((g.order, g.order))
    for u, v in g.edges:
        entries[u - 1, v - 1] = entries[v - 1, u - 1] = 1.0 / (2.0 * max(deg[u - 1], deg[v - 1]))
    np.fill_diagonal(entries, 1.0 - entries.sum(axis=1))
    return TransitionKernel(
        order=g.order,
        entries=entries,
        stationary=np.full(g.order, 1.0 / g.order),
        walk_tag="lazy_metropolis",
        lazy=True,
        reversible=True,
        symmetric=True,
        simple=False,
    )


def path_chain_kernel(n, p=DEFAULT_P, q=DEFAULT_Q):
    """
    Birth-death chain on a path: endpoints hold with p and step inward with 1-p,
    interior vertices step each way with q and hold with 1-2q.

    Args:
        n (int): order
        p (float): endpoint holding probability, p >= q
        q (float): interior step probability, q <= 1/2

    Returns:
        TransitionKernel: reversible chain; (1/2, 1/4) is the lazy simple walk,
        (3/4, 1/4) the lazy Metropolis walk (for n >= 3)
    """
    if n < 1:
        raise RangeError(f"order must be >= 1, got {n}")
    if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
        raise ConfigurationError(f"p and q must lie in [0, 1], got p={p}, q={q}", field="p")
    if p < q:
        raise ConfigurationError(f"requires p >= q, got p={p} < q={q}", field="p")
    if q > 0.5:
        raise ConfigurationError(f"requires q <= 1/2, got q={q}", field="q")
    params = (float(p), float(q))
    simple = params == (DEFAULT_P, DEFAULT_Q)
    if n == 1:
        return _single_vertex("path_chain", lazy=p >= 0.5, simple=simple, params=params)
    if p >= 1.0 or (n >= 3 and q <= 0.0):
        raise ConfigurationError("p = 1 or q = 0 makes the chain reducible", field="p")

    entries = np.zeros((n, n))
    entries[0, 0] = entries[-1, -1] = p
    entries[0, 1] = entries[-1, -2] = 1.0 - p
    for j in range(1, n - 1):
        entries[j, j - 1] = entries[j, j + 1] = q
        entries[j, j] = 1.0 - 2.0 * q

    weights = np.ones(n)
    if n >= 3:
        weights[0] = weights[-1] = q / (1.0 - p)
    stationary = weights / weights.sum()

    return TransitionKernel(
        order=n,
        entries=entries,
        stationary=stationary,
        walk_tag="path_chain",
        lazy=p >= 0.5 and (n < 3 or 1.0 - 2.0 * q >= 0.5),
        reversible=True,
        symmetric=n < 3 or abs(q - (1.0 - p)) <= KERNEL_TOL,
        simple=simple,
        params=params,
    )


def kernel_for(walk, snapshot, p=DEFAULT_P, q=DEFAULT_Q):
    tag = resolve_walk(walk)
    if tag == "uniform_complete":
        return uniform_complete_kernel(snapshot.order)
    if tag == "lazy_simple":
        return lazy_simple_kernel(snapshot)
    if tag == "lazy_metropolis":
        return lazy_metropolis_kernel(snapshot)
    return path_chain_kernel(snapshot.order, p, q)


def round_kernels(schedule, family, walk, n=None, p=DEFAULT_P, q=DEFAULT_Q, **graph_kwargs):
    """Yield (i, snapshot, kernel) for rounds i = 1..n."""
    n = schedule.horizon if n is None else n
    check_walk_family(walk, family)
    snapshots = growing_sequence(family, schedule.order_at(n), start=schedule.order_at(1),
                                 **graph_kwargs)
    for i, snapshot in enumerate(snapshots, 1):
        yield i, snapshot, kernel_for(walk, snapshot, p, q)


def verify_kernel(kernel, tol=KERNEL_TOL):
    """Check row sums, pi P = pi and every declared flag; raise NumericalError on failure."""
    P, pi = kernel.entries, kernel.stationary
    if (P < -tol).any():
        raise NumericalError(f"{kernel.label}: negative entry", residual=float(-P.min()))
    residual = float(np.abs(P.sum(axis=1) - 1.0).max())
    if residual > tol:
        raise NumericalError(f"{kernel.label}: rows do not sum to 1", residual=residual)
    residual = abs(float(pi.sum()) - 1.0)
    residual = max(residual, float(np.abs(pi @ P - pi).max()))
    if residual > tol:
        raise NumericalError(f"{kernel.label}: pi P != pi", residual=residual)
    if kernel.lazy:
        residual = float(0.5 - np.diag(P).min())
        if residual > tol:
            raise NumericalError(f"{kernel.label}: flagged lazy but a diagonal is < 1/2",
                                 residual=residual)
    if kernel.reversible:
        flow = pi[:, None] * P
        residual = float(np.abs(flow - flow.T).max())
        if residual > tol:
            raise NumericalError(f"{kernel.label}: detailed balance fails", residual=residual)
    if kernel.symmetric:
        residual = float(np.abs(P - P.T).max())
        if residual > tol:
            raise NumericalError(f"{kernel.label}: flagged symmetric but P != P^T",
                                 residual=residual)
    return True


def kernel_csv_rows(kernel):
    header = ["u"] + [f"v{j}" for j in range(1, kernel.order + 1)]
    rows = [[u] + [repr(float(x)) for x in kernel.entries[u - 1]]
            for u in range(1, kernel.order + 1)]
    return header, rows
