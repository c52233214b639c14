"""Statistical and exact checks of the structural claims about balancing networks.

Every statistical check uses a fixed sample size and a threshold of roughly
four standard deviations under the null; reports name the worst balancer or
pair so a failure can be chased down.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .bounds import ccc_product_entry, lambda_offones, product_matrix_scaled
from .dyadic import DyadicVector
from .engine import ideal_steps, run_discrete, run_discrete_batch, unfold_deviation
from .network import Matching, MatchingSchedule, affecting_sets, build_ccc, random_orientation
from .perturbation import effective_orientation, sample_plan

DEFAULT_BATCH = 2000


@dataclass
class VerificationReport:
    name: str
    passed: bool
    statistic: float
    threshold: float
    sample_size: int
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = (f"{status} {self.name} statistic={self.statistic:.6g} "
                f"threshold={self.threshold:.6g} samples={self.sample_size}")
        return f"{text} ({self.detail})" if self.detail else text


@dataclass
class OddStats:
    """Odd-indicator counts over ``trials`` inputs.

    ``odd_counts[l-1][k]`` counts inputs where balancer ``k`` of round ``l`` was
    odd. For pair statistics, ``pairs`` lists ((l, k), (l', k')) and ``joint``
    holds the matching 2x2 tables as rows (n11, n10, n01, n00).
    """

    schedule: MatchingSchedule
    trials: int
    odd_counts: list
    pairs: list = field(default_factory=list)
    joint: np.ndarray | None = None

    def probabilities(self) -> list[np.ndarray]:
        return [c / self.trials for c in self.odd_counts]

    def merge(self, other: "OddStats") -> "OddStats":
        if self.pairs != other.pairs:
            raise ValueError("cannot merge statistics over different pair sets")
        joint = None if self.joint is None else self.joint + other.joint
        return OddStats(self.schedule, self.trials + other.trials,
                        [a + b for a, b in zip(self.odd_counts, other.odd_counts)], self.pairs, joint)

    def write_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["balancer", "layer", "u", "v", "p_hat", "abs_dev"])
            gid = 0
            for layer, (m, p) in enumerate(zip(self.schedule, self.probabilities()), start=1):
                for k in range(len(m)):
                    w.writerow([gid, layer, int(m.u[k]), int(m.v[k]), f"{p[k]:.6f}", f"{abs(p[k] - 0.5):.6f}"])
                    gid += 1


def ccc_with_orientation(log_n: int, orientation="up", orientation_seed: int = 0) -> MatchingSchedule:
    """CCC network with ``"up"``, ``"down"`` or a ``"random"`` fixed orientation."""
    if isinstance(orientation, MatchingSchedule):
        return orientation
    if orientation == "random":
        return random_orientation(build_ccc(log_n), orientation_seed)
    return build_ccc(log_n, orientation)


def _draw_inputs(rng: np.random.Generator, size: int, n: int, inputs: str) -> np.ndarray:
    if inputs == "uniform":
        return rng.integers(0, n, size=(size, n), dtype=np.int64)
    if inputs == "constant":
        return np.full((size, n), n // 2, dtype=np.int64)
    raise ValueError(f"unknown input distribution {inputs!r}")


def collect_odd_stats(schedule: MatchingSchedule, trials: int, seed: int, inputs: str = "uniform",
                      pairs=(), batch: int = DEFAULT_BATCH) -> OddStats:
    """Run ``trials`` inputs through ``schedule`` (orientations as given) and count Odd bits."""
    rng = np.random.default_rng(seed)
    counts = [np.zeros(len(m), dtype=np.int64) for m in schedule]
    pairs = list(pairs)
    if pairs:
        ia = [(l - 1, k) for (l, k), _ in pairs]
        ib = [(l - 1, k) for _, (l, k) in pairs]
        s_a = np.zeros(len(pairs), dtype=np.int64)
        s_b = np.zeros(len(pairs), dtype=np.int64)
        s_ab = np.zeros(len(pairs), dtype=np.int64)
    done = 0
    while done < trials:
        size = min(batch, trials - done)
        loads = _draw_inputs(rng, size, schedule.n, inputs)
        _, odd = run_discrete_batch(schedule, loads, record_odd=True)
        for c, o in zip(counts, odd):
            c += o.sum(axis=0)
        if pairs:
            xa = np.stack([odd[l][:, k] for l, k in ia], axis=1).astype(np.int64)
            xb = np.stack([odd[l][:, k] for l, k in ib], axis=1).astype(np.int64)
            s_a += xa.sum(axis=0)
            s_b += xb.sum(axis=0)
            s_ab += (xa & xb).sum(axis=0)
        done += size
    joint = None
    if pairs:
        joint = np.stack([s_ab, s_a - s_ab, s_b - s_ab, trials - s_a - s_b + s_ab], axis=1)
    return OddStats(schedule, trials, counts, pairs, joint)


def pearson_from_joint(joint: np.ndarray) -> np.ndarray:
    """Pearson r of two binary variables from (n11, n10, n01, n00) rows; NaN if degenerate."""
    j = joint.astype(np.float64)
    n11, n10, n01, n00 = j.T
    N = n11 + n10 + n01 + n00
    a = n11 + n10
    b = n11 + n01
    den = np.sqrt(a * (N - a) * b * (N - b))
    with np.errstate(invalid="ignore", divide="ignore"):
        return (N * n11 - a * b) / den


# --- statistical checks --------------------------------------------------------------


def verify_odd_half(log_n: int, orientation="up", trials: int = 20000, seed: int = 0,
                    tolerance: float = 0.015, inputs: str = "uniform",
                    orientation_seed: int = 0) -> tuple[VerificationReport, OddStats]:
    """Every balancer of a CCC with a fixed orientation is odd with probability 1/2
    when each wire starts uniform over {0, ..., n-1}."""
    if trials < 1000:
        raise ValueError("need at least 1000 trials")
    schedule = ccc_with_orientation(log_n, orientation, orientation_seed)
    stats = collect_odd_stats(schedule, trials, seed, inputs)
    worst, where = -1.0, (0, 0)
    for layer, p in enumerate(stats.probabilities(), start=1):
        dev = np.abs(p - 0.5)
        k = int(dev.argmax())
        if dev[k] > worst:
            worst, where = float(dev[k]), (layer, k)
    m = schedule[where[0]]
    label = orientation if isinstance(orientation, str) else "custom"
    report = VerificationReport(
        f"odd-half[{label}]", worst <= tolerance, worst, tolerance, trials,
        f"worst balancer layer {where[0]} ({int(m.u[where[1]])},{int(m.v[where[1]])})",
    )
    return report, stats


def _select_pairs(schedule: MatchingSchedule, wire: int, max_pairs: int, rng: np.random.Generator):
    aff = affecting_sets(schedule, wire)
    members = [(layer, int(k)) for layer in range(1, schedule.T + 1) for k in aff[layer]]
    connected = []
    for layer in range(1, schedule.T):
        m, nxt = schedule[layer], schedule[layer + 1]
        owner = {}
        for k in aff[layer]:
            owner[int(m.u[k])] = int(k)
            owner[int(m.v[k])] = int(k)
        for k in aff[layer + 1]:
            for x in (int(nxt.u[k]), int(nxt.v[k])):
                if x in owner:
                    connected.append(((layer, owner[x]), (layer + 1, int(k))))
    if len(connected) > max_pairs // 2:
        pick = rng.choice(len(connected), size=max_pairs // 2, replace=False)
        connected = [connected[i] for i in sorted(pick)]
    chosen = set(connected)
    others = []
    total = len(members) * (len(members) - 1) // 2
    want = min(max_pairs - len(chosen), total - len(chosen))
    while len(others) < want:
        i, j = rng.choice(len(members), size=2, replace=False)
        a, b = sorted((members[i], members[j]))
        if (a, b) not in chosen:
            chosen.add((a, b))
            others.append((a, b))
    return connected + others


def verify_odd_independence(log_n: int, orientation="up", wire: int = 0, trials: int = 20000,
                            seed: int = 0, corr_threshold: float = 0.03, max_pairs: int = 500,
                            orientation_seed: int = 0) -> tuple[VerificationReport, OddStats]:
    """Pairwise Pearson correlation of Odd indicators within the affecting set of ``wire``.

    Half of the pair budget goes to balancers in consecutive layers that share a
    wire; the rest are random pairs from the set. Pairwise decorrelation is a
    proxy for the full mutual independence, which is not tested.
    """
    if trials < 10000:
        raise ValueError("need at least 10000 trials")
    schedule = ccc_with_orientation(log_n, orientation, orientation_seed)
    if not 0 <= wire < schedule.n:
        raise ValueError(f"wire {wire} out of range")
    pairs = _select_pairs(schedule, wire, max_pairs, np.random.default_rng([seed, 7]))
    stats = collect_odd_stats(schedule, trials, seed, pairs=pairs)
    r = pearson_from_joint(stats.joint)
    abs_r = np.where(np.isnan(r), np.inf, np.abs(r))
    k = int(abs_r.argmax())
    worst = float(abs_r[k])
    (la, ka), (lb, kb) = pairs[k]
    report = VerificationReport(
        "odd-independence", worst <= corr_threshold, worst, corr_threshold, trials,
        f"{len(pairs)} pairs; worst pair layer {la}#{ka} / layer {lb}#{kb}",
    )
    return report, stats


# --- exact identities -----------------------------------------------------------------


def random_schedule(n: int, T: int, rng: np.random.Generator) -> MatchingSchedule:
    """Random (not necessarily perfect) matchings with random orientations."""
    ms = []
    for t in range(1, T + 1):
        perm = rng.permutation(n)
        k = int(rng.integers(0, n // 2 + 1))
        a, b = perm[0:2 * k:2], perm[1:2 * k:2]
        ms.append(Matching(t, np.minimum(a, b), np.maximum(a, b), rng.random(k) < 0.5))
    return MatchingSchedule(n, ms)


def verify_eq3_identity(n: int = 16, T: int = 8, cases: int = 100, seed: int = 0) -> VerificationReport:
    """y(t) - xi(t) equals the unfolded rounding errors, exactly, for every t <= T."""
    if n > 64 or T > 16:
        raise ValueError("exact identity check runs with n <= 64 and T <= 16")
    rng = np.random.default_rng(seed)
    bad, checks, first = 0, 0, ""
    for case in range(cases):
        schedule = random_schedule(n, T, rng)
        alpha = float(rng.choice([0.0, 0.25, 0.5]))
        plan = sample_plan(schedule, alpha, int(rng.integers(0, 2**63)))
        loads = rng.integers(0, 4 * n, size=n)
        _, trace = run_discrete(schedule, plan, loads, capture_trace=True, snapshots=True)
        for t, xi in enumerate(ideal_steps(schedule, loads, mode="exact")):
            checks += 1
            if not DyadicVector.from_ints(trace.snapshots[t]) - xi == unfold_deviation(schedule, trace, t):
                bad += 1
                first = first or f"case {case} t={t}"
    return VerificationReport("eq3-identity", bad == 0, bad, 0, checks,
                              first or f"{cases} cases, all exact")


def verify_ccc_structure(log_n: int) -> VerificationReport:
    """CCC suffix products against the closed form, full-product contraction, and the
    decomposition of the last x layers into n / 2**x disjoint sub-networks."""
    if not 1 <= log_n <= 8:
        raise ValueError("dense structure check runs with 1 <= log_n <= 8")
    schedule = build_ccc(log_n)
    n = schedule.n
    mismatches, first = 0, ""
    for k in range(1, log_n + 2):
        S, e = product_matrix_scaled(schedule, k, log_n)
        for u in range(n):
            row = S[u]
            for v in range(n):
                f = ccc_product_entry(log_n, k, u, v)
                if f.numerator << e != int(row[v]) * f.denominator:
                    mismatches += 1
                    first = first or f"k={k} entry ({u},{v})"
    lam = lambda_offones(schedule, 1, log_n)
    if lam > 1e-9:
        mismatches += 1
        first = first or f"lambda of full product {lam:.3e}"
    for x in range(1, log_n + 1):
        for layer in range(log_n - x + 1, log_n + 1):
            m = schedule[layer]
            if np.any((m.u >> x) != (m.v >> x)):
                mismatches += 1
                first = first or f"x={x}: layer {layer} crosses a block"
                continue
            per_block = np.bincount(m.u >> x, minlength=n >> x)
            if per_block.size != n >> x or np.any(per_block != 1 << (x - 1)):
                mismatches += 1
                first = first or f"x={x}: layer {layer} uneven over blocks"
    return VerificationReport(f"ccc-structure[log_n={log_n}]", mismatches == 0, mismatches, 0,
                              n * n * (log_n + 1), first or f"lambda={lam:.2e}")


def verify_remark2_symmetry(schedule: MatchingSchedule, alpha: float, trials: int = 10000,
                            seed: int = 0) -> VerificationReport:
    """Effective orientations under (o, alpha) and (flipped o, 1 - alpha) agree in law."""
    if trials < 10000:
        raise ValueError("need at least 10000 trials")
    flipped = schedule.flipped()
    freq_a = [np.zeros(len(m), dtype=np.int64) for m in schedule]
    freq_b = [np.zeros(len(m), dtype=np.int64) for m in schedule]
    for k in range(trials):
        for acc, sched, a, s in ((freq_a, schedule, alpha, seed + k),
                                 (freq_b, flipped, 1.0 - alpha, seed + trials + k)):
            for c, o in zip(acc, effective_orientation(sched, sample_plan(sched, a, s))):
                c += o
    gaps = [np.abs(a - b) / trials for a, b in zip(freq_a, freq_b)]
    layer = int(np.argmax([g.max() if g.size else 0.0 for g in gaps]))
    worst = float(gaps[layer].max()) if gaps[layer].size else 0.0
    threshold = 4.0 / math.sqrt(trials)
    return VerificationReport("remark2-symmetry", worst <= threshold, worst, threshold, trials,
                              f"worst in round {layer + 1}")
