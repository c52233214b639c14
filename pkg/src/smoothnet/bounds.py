"""Matching matrices, the off-ones contraction norm, and discrepancy bound formulas.

All logarithms are base 2. ``lambda`` is implemented as the operator 2-norm of
a doubly stochastic matrix restricted to the complement of the all-ones
vector, i.e. the second singular value. For a single (symmetric) matching
matrix this is the second largest eigenvalue in absolute value; for products,
which need not be symmetric, it is the quantity the contraction argument uses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from fractions import Fraction
from typing import Sequence

import numpy as np

from .network import Matching, MatchingSchedule, ScheduleError, build_periodic

DENSE_MAX_N = 4096
SVD_MAX_N = 1024
STOCHASTIC_TOL = 1e-9


# --- matrices -------------------------------------------------------------------------


def matching_matrix(matching: Matching, n: int, exact: bool = False) -> np.ndarray:
    """P for one matching: 1/2 on matched pairs and their diagonals, 1 on unmatched diagonals."""
    if matching.max_vertex() >= n:
        raise ScheduleError(f"matching touches vertex {matching.max_vertex()} but n={n}")
    if exact:
        P = np.empty((n, n), dtype=object)
        P.fill(Fraction(0))
        for i in range(n):
            P[i, i] = Fraction(1)
        half = Fraction(1, 2)
    else:
        P = np.eye(n)
        half = 0.5
    for a, b in zip(matching.u.tolist(), matching.v.tolist()):
        P[a, a] = P[b, b] = P[a, b] = P[b, a] = half
    return P


def apply_matching(vector, matching: Matching) -> np.ndarray:
    """``vector @ P`` without forming P (also works on the rows of a 2-D array)."""
    x = np.array(vector, dtype=np.float64)
    mean = 0.5 * (x[..., matching.u] + x[..., matching.v])
    x[..., matching.u] = mean
    x[..., matching.v] = mean
    return x


def product_matrix(schedule: MatchingSchedule, start: int = 1, stop: int | None = None) -> np.ndarray:
    """Dense float product P(start) P(start+1) ... P(stop); identity when start > stop."""
    stop = schedule.T if stop is None else stop
    if schedule.n > DENSE_MAX_N:
        raise ValueError(f"dense products limited to n <= {DENSE_MAX_N}")
    A = np.eye(schedule.n)
    for i in range(start, stop + 1):
        # right-multiplying by a matching matrix averages column pairs
        m = schedule[i]
        mean = 0.5 * (A[:, m.u] + A[:, m.v])
        A[:, m.u] = mean
        A[:, m.v] = mean
    return A


def product_matrix_scaled(schedule: MatchingSchedule, start: int = 1, stop: int | None = None) -> tuple[np.ndarray, int]:
    """Exact product as ``(S, e)`` with P[start, stop] = S / 2**e, by integer matmul of 2P."""
    stop = schedule.T if stop is None else stop
    if stop - start + 1 > 60:
        raise ValueError("scaled exact products limited to 60 factors")
    n = schedule.n
    S = np.eye(n, dtype=np.int64)
    e = 0
    for i in range(start, stop + 1):
        twoP = 2 * np.eye(n, dtype=np.int64)
        m = schedule[i]
        twoP[m.u, m.u] = 1
        twoP[m.v, m.v] = 1
        twoP[m.u, m.v] = 1
        twoP[m.v, m.u] = 1
        S = S @ twoP
        e += 1
    return S, e


# --- the off-ones norm ----------------------------------------------------------------


def _check_doubly_stochastic(A: np.ndarray) -> None:
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    rows = np.abs(A.sum(axis=1) - 1.0).max()
    cols = np.abs(A.sum(axis=0) - 1.0).max()
    if rows > STOCHASTIC_TOL or cols > STOCHASTIC_TOL:
        raise ValueError(f"matrix is not doubly stochastic (row err {rows:.2e}, col err {cols:.2e})")


def _lambda_dense(A: np.ndarray) -> float:
    A = np.asarray(A, dtype=np.float64)
    _check_doubly_stochastic(A)
    n = A.shape[0]
    if n == 1:
        return 0.0
    return float(np.linalg.norm(A - 1.0 / n, 2))


def _lambda_power(schedule: MatchingSchedule, start: int, stop: int, seed: int = 0,
                  max_iter: int = 5000, tol: float = 1e-12) -> float:
    n = schedule.n
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    forward = [schedule[i] for i in range(start, stop + 1)]
    est = 0.0
    for _ in range(max_iter):
        x -= x.mean()
        norm = np.linalg.norm(x)
        if norm == 0.0:
            return 0.0
        x /= norm
        y = x
        for m in forward:
            y = apply_matching(y, m)
        sigma = float(np.linalg.norm(y))
        if sigma < 1e-15 or abs(sigma - est) <= tol * max(sigma, 1e-300):
            return sigma
        est = sigma
        for m in reversed(forward):
            y = apply_matching(y, m)
        x = y
    return est


def lambda_offones(obj, start: int = 1, stop: int | None = None) -> float:
    """Contraction factor of a doubly stochastic matrix on the complement of 1.

    ``obj`` is either a dense matrix or a schedule, in which case the product
    P[start, stop] is used (dense SVD up to n=1024, matrix-free power
    iteration on A A^T beyond).
    """
    if isinstance(obj, MatchingSchedule):
        stop = obj.T if stop is None else stop
        if not (1 <= start and stop <= obj.T):
            raise ValueError(f"invalid round range [{start}, {stop}]")
        if obj.n <= SVD_MAX_N:
            return _lambda_dense(product_matrix(obj, start, stop))
        return _lambda_power(obj, start, stop)
    return _lambda_dense(obj)


# --- discrepancy bounds ---------------------------------------------------------------


def compute_lambda1(schedule: MatchingSchedule, t1: int, t2: int, wire: int | None = None,
                    block: int = 256) -> float:
    """Indivisibility term: sqrt(log n * sum_{i<=t1} sum_{(u,v) in M_i} (c_u - c_v)^2),
    with c = P[i+1, t2] e_w, maximised over wires when ``wire`` is None.

    Uses a backward sweep per block of wires. CCC schedules are vertex-transitive
    under XOR translation, so wire 0 stands for all of them.
    """
    if not (0 <= t1 < t2 <= schedule.T):
        raise ValueError(f"need 0 <= t1 < t2 <= T, got t1={t1}, t2={t2}, T={schedule.T}")
    n = schedule.n
    if wire is not None:
        if not 0 <= wire < n:
            raise ValueError(f"wire {wire} out of range")
        wires = [wire]
    elif schedule.is_ccc:
        wires = [0]
    else:
        wires = list(range(n))
    if t1 == 0:
        return 0.0
    best = 0.0
    for lo in range(0, len(wires), block):
        chunk = wires[lo:lo + block]
        C = np.zeros((n, len(chunk)))
        C[chunk, np.arange(len(chunk))] = 1.0
        acc = np.zeros(len(chunk))
        for i in range(t2 - 1, 0, -1):
            nxt = schedule[i + 1]
            mean = 0.5 * (C[nxt.u] + C[nxt.v])
            C[nxt.u] = mean
            C[nxt.v] = mean
            if i <= t1:
                m = schedule[i]
                acc += np.sum((C[m.u] - C[m.v]) ** 2, axis=0)
        best = max(best, float(acc.max()))
    return math.sqrt(math.log2(n) * best)


@dataclass(frozen=True)
class BoundReport:
    n: int
    alpha: float
    K: float
    t1: int
    t2: int
    lambda_product: float
    lambda1_term: float
    lambda2_term: float
    main_terms: float
    total: float

    @classmethod
    def csv_header(cls) -> str:
        return ",".join(f.name for f in fields(cls))

    def to_csv_row(self) -> str:
        return ",".join(repr(getattr(self, f.name)) for f in fields(self))

    def to_kv(self) -> str:
        return " ".join(f"{f.name}={getattr(self, f.name)!r}" for f in fields(self))


def theorem1_bound(schedule: MatchingSchedule, alpha: float, t1: int, t2: int, K: float) -> BoundReport:
    """(t2 - t1) + 3 (1/2 - alpha) t1 + Lambda1 + Lambda2 for the given schedule."""
    if not (0 <= t1 < t2 <= schedule.T):
        raise ValueError(f"need 0 <= t1 < t2 <= T, got t1={t1}, t2={t2}, T={schedule.T}")
    if K < 0:
        raise ValueError("K must be nonnegative")
    lam1 = compute_lambda1(schedule, t1, t2)
    lam = lambda_offones(schedule, 1, t2)
    lam2 = lam * math.sqrt(schedule.n) * K
    main = (t2 - t1) + 3.0 * (0.5 - alpha) * t1
    return BoundReport(
        n=schedule.n, alpha=float(alpha), K=K, t1=t1, t2=t2, lambda_product=lam,
        lambda1_term=lam1, lambda2_term=lam2, main_terms=main, total=main + lam1 + lam2,
    )


@dataclass(frozen=True)
class PeriodicBound:
    report: BoundReport
    schedule: MatchingSchedule
    d: int
    periods: int
    lambda_q: float
    lambda1_cap: float
    lambda2_cap: float

    @property
    def T(self) -> int:
        return self.schedule.T

    def to_kv(self) -> str:
        return (
            f"d={self.d} periods={self.periods} T={self.T} lambda_q={self.lambda_q!r} "
            f"lambda1_cap={self.lambda1_cap!r} lambda2_cap={self.lambda2_cap!r} " + self.report.to_kv()
        )


def periodic_bound(round_: Sequence[Matching], alpha: float, K: float, n: int | None = None) -> PeriodicBound:
    """Evaluate the bound for a periodic circuit run for ~2 d log(Kn) / (1 - lambda(Q)) matchings.

    T is rounded up to whole periods; t1 = T - ceil(2 d log log n / (1 - lambda(Q))),
    clamped into [0, T - 1].
    """
    round_ = list(round_.matchings if isinstance(round_, MatchingSchedule) else round_)
    if not round_:
        raise ScheduleError("round must contain at least one matching")
    if n is None:
        n = max(m.max_vertex() for m in round_) + 1
    if n < 2:
        raise ValueError("need n >= 2")
    if K < 1:
        raise ValueError("K must be at least 1")
    d = len(round_)
    one = build_periodic(round_, 1, n)
    lam_q = lambda_offones(one)
    if lam_q >= 1.0 - 1e-9:
        raise ValueError(f"round does not connect the graph (lambda(Q) = {lam_q:.12f})")
    gap = 1.0 - lam_q
    T = math.ceil(2 * d * math.log2(K * n) / gap)
    T = max(d, -(-T // d) * d)
    loglog = math.log2(math.log2(n))
    t1 = T - math.ceil(2 * d * loglog / gap)
    t1 = min(max(t1, 0), T - 1)
    schedule = build_periodic(round_, T // d, n)
    report = theorem1_bound(schedule, alpha, t1, T, K)
    return PeriodicBound(
        report=report,
        schedule=schedule,
        d=d,
        periods=T // d,
        lambda_q=lam_q,
        lambda1_cap=2.0 * math.sqrt(d) / (math.log2(n) * gap),
        lambda2_cap=math.sqrt(n) * K / (K * n) ** 2,
    )


def ccc_lower_bound(log_n: int, alpha: float) -> float:
    """max{(1/2 - alpha) log n - 2 log log n, (log log n) / 2}, the (1 - o(1)) factor set to 1."""
    if log_n < 2:
        raise ValueError("need log_n >= 2")
    if not 0.0 <= alpha <= 0.5:
        raise ValueError("need 0 <= alpha <= 1/2")
    ll = math.log2(log_n)
    return max((0.5 - alpha) * log_n - 2.0 * ll, ll / 2.0)


def empirical_bounds(log_n: int, alpha: float) -> tuple[float, float]:
    """(lower, upper) corridor for the expected CCC discrepancy under uniform input."""
    if log_n < 2:
        raise ValueError("need log_n >= 2")
    ll = math.log2(log_n)
    n = 2.0 ** log_n
    upper = (0.5 - alpha) * (log_n - math.ceil(ll)) + math.ceil(ll) + 4
    lower = max((0.5 - alpha) * log_n, 0.5 * (1.0 - 1.0 / n) * (math.floor(ll) - 1))
    return lower, upper


def ccc_product_entry(log_n: int, k: int, u: int, v: int) -> Fraction:
    """Entry (u, v) of P[k, log n] on CCC: 2**(k-1)/n when u and v share their top k-1 bits."""
    n = 1 << log_n
    if not 1 <= k <= log_n + 1:
        raise ValueError(f"k must lie in [1, {log_n + 1}], got {k}")
    if not (0 <= u < n and 0 <= v < n):
        raise ValueError("wire out of range")
    shift = log_n - k + 1
    if u >> shift == v >> shift:
        return Fraction(1 << (k - 1), n)
    return Fraction(0)
