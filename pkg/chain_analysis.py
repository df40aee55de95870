"""
Scalar characteristics of a static kernel: hitting time, mixing time, second
eigenvalue, survival radius lambda(P_w) of the kernel with one vertex removed,
stationary-ratio r_i between consecutive rounds and l2(pi) geometry.

The check_* functions turn the classical inequalities between these
quantities into executable assertions returning InvariantCheck records.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import LinAlgError, eigh, solve

from errors import ConfigurationError, NumericalError, RangeError, StructuralError

DEFAULT_SOLVE_TOL = 1e-10
DEFAULT_EIGEN_TOL = 1e-10
INVARIANT_SLACK = 1e-9
SANDWICH_REL_SLACK = 1e-6
DEFAULT_T_CAP = 10**6
DEFAULT_POWER_MAX_ITER = 10**6
TV_THRESHOLD = 0.25
_POWER_SQUARINGS = 6
_HITTING_CEILING = 1e14

REPORT_HEADER = ["n", "t_hit", "t_mix", "lambda2", "pi_min", "max_survival_radius"]


@dataclass(frozen=True)
class MixingResult:
    steps: int
    capped: bool


@dataclass(frozen=True)
class InvariantCheck:
    name: str
    ok: bool
    lhs: float
    rhs: float
    detail: str = ""


@dataclass(frozen=True, eq=False)
class SubstochasticKernel:
    """P with the removed vertex's row and column zeroed."""
    base: object
    removed: int

    @cached_property
    def entries(self):
        e = self.base.entries.copy()
        e[self.removed - 1, :] = 0.0
        e[:, self.removed - 1] = 0.0
        return e


@dataclass
class AnalysisReport:
    order: int
    walk_tag: str
    t_hit: float
    t_mix: int
    t_mix_capped: bool
    lambda2: float
    pi_min: float
    survival_radius: dict = field(default_factory=dict)

    @property
    def max_survival_radius(self):
        return max(self.survival_radius.values()) if self.survival_radius else 0.0


def _vertex_index(kernel, w):
    if not 1 <= w <= kernel.order:
        raise RangeError(f"vertex {w} outside [1, {kernel.order}]")
    return w - 1


def substochastic(kernel, w):
    _vertex_index(kernel, w)
    return SubstochasticKernel(base=kernel, removed=w)


def hitting_times(kernel, target):
    """
    Expected hitting times E[tau_target | X_0 = u] for every start u.

    Solves (I - P) m = 1 off the target with m(target) = 0.
    """
    t = _vertex_index(kernel, target)
    dim = kernel.order
    A = np.eye(dim) - kernel.entries
    A[t, :] = 0.0
    A[t, t] = 1.0
    b = np.ones(dim)
    b[t] = 0.0
    try:
        m = solve(A, b)
    except LinAlgError as e:
        raise StructuralError(f"hitting system for target {target} is singular: {e}")
    if not np.isfinite(m).all() or float(np.abs(m).max()) > _HITTING_CEILING:
        raise StructuralError(f"hitting system for target {target} is singular; "
                              f"kernel is reducible")
    residual = float(np.abs(A @ m - b).max())
    if residual > DEFAULT_SOLVE_TOL * max(1.0, float(np.abs(m).max())) or m.min() < -DEFAULT_SOLVE_TOL:
        raise StructuralError(f"hitting system for target {target} is singular "
                              f"(residual {residual:.3g}); kernel is reducible")
    return m


def hitting_time(kernel):
    """
    Return (t_hit, H) with H[u-1, v-1] = E[tau_v | X_0 = u] and t_hit = max H.

    H comes from the fundamental matrix Z = (I - P + 1 pi^T)^-1 as
    (Z[v, v] - Z[u, v]) / pi(v); the last column is re-solved directly.
    """
    n = kernel.order
    if n == 1:
        return 0.0, np.zeros((1, 1))
    pi = kernel.stationary
    try:
        Z = solve(np.eye(n) - kernel.entries + pi[None, :], np.eye(n))
    except LinAlgError as e:
        raise StructuralError(f"fundamental matrix is singular: {e}")
    H = (np.diag(Z)[None, :] - Z) / pi[None, :]
    np.fill_diagonal(H, 0.0)
    if not np.isfinite(H).all() or float(np.abs(H).max()) > _HITTING_CEILING:
        raise StructuralError("fundamental matrix is singular; kernel is reducible")

    direct = hitting_times(kernel, n)
    scale = max(1.0, float(direct.max()))
    if float(np.abs(direct - H[:, -1]).max()) > 1e-8 * scale:
        raise StructuralError("hitting times disagree with the direct solve; "
                              "stationary vector does not match the kernel")
    H = np.maximum(H, 0.0)
    return float(H.max()), H


def _tv_distance(rows, pi):
    return 0.5 * float(np.abs(rows - pi).sum(axis=1).max())


def mixing_time(kernel, t_cap=DEFAULT_T_CAP):
    """
    Smallest t > 0 with worst-start total variation to pi at most 1/4.

    The worst-start distance is nonincreasing in t, so powers P^(2^k) are squared
    until the threshold is crossed and the exact t is found by binary descent.
    """
    pi = kernel.stationary
    threshold = TV_THRESHOLD + 1e-12
    powers = [kernel.entries]
    if _tv_distance(powers[0], pi) <= threshold:
        return MixingResult(steps=1, capped=False)
    reach = 1
    while True:
        if reach >= t_cap:
            return MixingResult(steps=t_cap, capped=True)
        powers.append(powers[-1] @ powers[-1])
        reach *= 2
        if _tv_distance(powers[-1], pi) <= threshold:
            break

    current = powers[-2]
    steps = reach // 2
    for j in range(len(powers) - 3, -1, -1):
        candidate = current @ powers[j]
        if _tv_distance(candidate, pi) > threshold:
            current = candidate
            steps += 2 ** j
    steps += 1
    if steps > t_cap:
        return MixingResult(steps=t_cap, capped=True)
    return MixingResult(steps=steps, capped=False)


def _symmetrized(kernel):
    """D^{1/2} P D^{-1/2} for a reversible kernel, made exactly symmetric."""
    s = np.sqrt(kernel.stationary)
    S = s[:, None] * kernel.entries / s[None, :]
    return 0.5 * (S + S.T)


def eigenvalues(kernel):
    if kernel.reversible:
        return eigh(_symmetrized(kernel), eigvals_only=True)
    return np.linalg.eigvals(kernel.entries)


def second_eigenvalue(kernel):
    """Second largest eigenvalue in absolute value."""
    if kernel.order == 1:
        return 0.0
    values = np.sort(np.abs(eigenvalues(kernel)))[::-1]
    return float(values[1])


def spectral_gap(kernel):
    return 1.0 - second_eigenvalue(kernel)


def survival_radius(kernel, w, tol=DEFAULT_EIGEN_TOL, max_iter=DEFAULT_POWER_MAX_ITER):
    """
    Largest eigenvalue of P_w (row and column w zeroed) by power iteration.

    Iterates on the pi-symmetrized block with a repeated-squaring accelerator
    and reads the eigenvalue as a Rayleigh quotient of the block itself.
    """
    idx = _vertex_index(kernel, w)
    if not kernel.reversible:
        raise ConfigurationError("survival radius needs a reversible kernel", field="walk")
    if kernel.order == 1:
        return 0.0

    keep = np.arange(kernel.order) != idx
    B = _symmetrized(kernel)[np.ix_(keep, keep)]
    M = B.copy()
    for _ in range(_POWER_SQUARINGS):
        M = M @ M
        scale = np.abs(M).max()
        if scale == 0.0:
            break
        M /= scale
    stride = 2 ** _POWER_SQUARINGS

    x = np.sqrt(kernel.stationary[keep])
    x /= np.linalg.norm(x)
    lam_prev = -1.0
    residual = math.inf
    for iteration in range(0, max_iter, stride):
        y = B @ x
        lam = float(x @ y)
        residual = float(np.linalg.norm(y - lam * x))
        if abs(lam - lam_prev) <= tol and residual <= math.sqrt(tol):
            return lam
        lam_prev = lam
        z = M @ x
        norm = np.linalg.norm(z)
        if norm == 0.0:
            return max(lam, 0.0)
        x = z / norm
    raise NumericalError(f"power iteration for vertex {w} did not converge", residual=residual)


def pi_ratio(prev, nxt):
    """r_i = max over old vertices of pi_prev(v) / pi_next(v)."""
    if nxt.order != prev.order + 1:
        raise RangeError(f"kernels of order {prev.order} and {nxt.order} are not consecutive")
    head = nxt.stationary[:prev.order]
    if (head <= 0).any() or (prev.stationary <= 0).any():
        raise StructuralError("zero stationary mass")
    return float((prev.stationary / head).max())


def pi_norm(xi, pi):
    """||xi/pi - 1||^2 in l2(pi)."""
    xi = np.asarray(xi, dtype=float)
    pi = np.asarray(pi, dtype=float)
    if xi.shape != pi.shape:
        raise RangeError(f"vector lengths differ: {xi.shape} vs {pi.shape}")
    if (pi <= 0).any():
        raise StructuralError("stationary vector has a zero entry")
    return float(np.sum(pi * (xi / pi - 1.0) ** 2))


def pi_inner(f, g, pi):
    return float(np.sum(np.asarray(pi) * np.asarray(f) * np.asarray(g)))


def analyze(kernel, t_cap=DEFAULT_T_CAP, radii=True):
    t_hit, _ = hitting_time(kernel)
    mix = mixing_time(kernel, t_cap)
    report = AnalysisReport(
        order=kernel.order,
        walk_tag=kernel.label,
        t_hit=t_hit,
        t_mix=mix.steps,
        t_mix_capped=mix.capped,
        lambda2=second_eigenvalue(kernel),
        pi_min=kernel.pi_min,
    )
    if radii and kernel.reversible:
        report.survival_radius = {w: survival_radius(kernel, w) for w in range(1, kernel.order + 1)}
    return report


def report_row(report):
    t_mix = "exceeded" if report.t_mix_capped else report.t_mix
    return [report.order, report.t_hit, t_mix, report.lambda2, report.pi_min,
            report.max_survival_radius]


def survival_matrix(kernel, steps):
    """G[w-1, u-1] = Pr[tau_w > steps | X_0 = u], time 0 included."""
    n = kernel.order
    G = np.ones((n, n))
    np.fill_diagonal(G, 0.0)
    for _ in range(steps):
        G = kernel.step_back(G)
        np.fill_diagonal(G, 0.0)
    return G


def check_sandwich(report):
    """1/(1 - lambda2) <= t_hit <= 2/(pi_min (1 - lambda2))."""
    if report.order < 2:
        return InvariantCheck("sandwich", True, 0.0, 0.0, "single vertex")
    gap = 1.0 - report.lambda2
    lower = 1.0 / gap
    upper = 2.0 / (report.pi_min * gap)
    ok = (lower <= report.t_hit * (1 + SANDWICH_REL_SLACK)
          and report.t_hit <= upper * (1 + SANDWICH_REL_SLACK))
    return InvariantCheck("sandwich", ok, lower, upper,
                          f"n={report.order} t_hit={report.t_hit:.6g}")


def check_eigen_bound(report):
    """max_w lambda(P_w) <= 1 - 1/t_hit."""
    if report.order < 2:
        return InvariantCheck("eigen_bound", True, 0.0, 0.0, "single vertex")
    lhs = report.max_survival_radius
    rhs = 1.0 - 1.0 / report.t_hit
    return InvariantCheck("eigen_bound", lhs <= rhs + INVARIANT_SLACK, lhs, rhs,
                          f"n={report.order}")


def check_opnorm(kernel, w, t_hit):
    """Operator norm of P_w in l2(pi) <= 1 - 1/t_hit, from a dense eigen-solve."""
    idx = _vertex_index(kernel, w)
    keep = np.arange(kernel.order) != idx
    block = _symmetrized(kernel)[np.ix_(keep, keep)]
    norm = float(np.abs(eigh(block, eigvals_only=True)).max()) if block.size else 0.0
    rhs = 1.0 - 1.0 / t_hit if t_hit > 0 else 0.0
    return InvariantCheck("opnorm", norm <= rhs + INVARIANT_SLACK, norm, rhs, f"w={w}")


def check_contraction(kernel, xi, steps=10):
    """||nu_{t+1}/pi - 1|| <= lambda2 ||nu_t/pi - 1|| for every step."""
    lam = second_eigenvalue(kernel)
    nu = np.asarray(xi, dtype=float)
    worst = -math.inf
    lhs = rhs = 0.0
    for _ in range(steps):
        before = math.sqrt(pi_norm(nu, kernel.stationary))
        nu = kernel.step(nu)
        after = math.sqrt(pi_norm(nu, kernel.stationary))
        if after - lam * before > worst:
            worst, lhs, rhs = after - lam * before, after, lam * before
    return InvariantCheck("contraction", worst <= INVARIANT_SLACK, lhs, rhs,
                          f"n={kernel.order} steps={steps}")


def check_tail_bound(kernel, v, times, t_hit=None):
    """Pr_pi[tau_v > t] <= (1 - 1/t_hit)^t at each requested t."""
    idx = _vertex_index(kernel, v)
    if t_hit is None:
        t_hit, _ = hitting_time(kernel)
    survive = kernel.stationary.copy()
    survive[idx] = 0.0
    worst = InvariantCheck("tail_bound", True, 0.0, 0.0, "no times")
    t = 0
    for target_t in sorted(times):
        while t < target_t:
            survive = kernel.step(survive)
            survive[idx] = 0.0
            t += 1
        lhs = float(survive.sum())
        rhs = (1.0 - 1.0 / t_hit) ** t if t_hit > 0 else 0.0
        if not lhs <= rhs + INVARIANT_SLACK:
            return InvariantCheck("tail_bound", False, lhs, rhs, f"v={v} t={t}")
        worst = InvariantCheck("tail_bound", True, lhs, rhs, f"v={v} t={t}")
    return worst


def check_static_decay(kernel, c, t_hit=None):
    """max_{u,w} Pr[tau_w > floor(c e t_hit) | X_0 = u] <= e^{-c}."""
    if t_hit is None:
        t_hit, _ = hitting_time(kernel)
    steps = int(math.floor(c * math.e * t_hit))
    lhs = float(survival_matrix(kernel, steps).max())
    rhs = math.exp(-c)
    return InvariantCheck("static_decay", lhs <= rhs + INVARIANT_SLACK, lhs, rhs,
                          f"n={kernel.order} c={c:g} steps={steps}")
