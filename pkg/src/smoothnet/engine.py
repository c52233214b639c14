"""Discrete and idealized balancing processes, traces and diagnostics."""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .dyadic import DyadicVector
from .network import MatchingSchedule, ScheduleError, affecting_sets
from .perturbation import PerturbationPlan, effective_orientation

EXACT_MAX_N = 1 << 10
EXACT_MAX_T = 62


@dataclass
class RunTrace:
    """Per-round record of one discrete run.

    ``odd[t-1]`` flags balancers of round ``t`` that saw an odd combined load;
    ``toward_u[t-1]`` is the effective orientation used; ``flipped[t-1]`` the
    plan's flip bits. ``snapshots`` (optional) holds y(0) ... y(T).
    """

    schedule: MatchingSchedule
    odd: list
    toward_u: list
    flipped: list
    snapshots: list | None = None

    @property
    def rounds(self) -> int:
        return len(self.odd)

    def rho_doubled(self, t: int) -> np.ndarray:
        """``2 * rho(t)`` as an int array with entries in {-1, 0, +1}."""
        m = self.schedule[t]
        odd, to_u = self.odd[t - 1], self.toward_u[t - 1]
        sign = np.where(to_u, 1, -1) * odd
        out = np.zeros(self.schedule.n, dtype=np.int64)
        out[m.u] = sign
        out[m.v] = -sign
        return out

    def rho(self, t: int) -> DyadicVector:
        return DyadicVector(self.rho_doubled(t), 1)

    def write_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["round", "u", "v", "odd", "psi", "phi"])
            for t, m in enumerate(self.schedule, start=1):
                odd, fl = self.odd[t - 1], self.flipped[t - 1]
                for k in range(len(m)):
                    w.writerow([
                        t, int(m.u[k]), int(m.v[k]), int(odd[k]),
                        "-0.5" if fl[k] else "0.5",
                        1 if m.toward_u[k] else -1,
                    ])


# --- discrete process -----------------------------------------------------------------


def balance_round(y: np.ndarray, u: np.ndarray, v: np.ndarray, toward_u: np.ndarray) -> np.ndarray:
    """Apply one matching in place to ``y`` (shape ``(..., n)``); returns the odd flags.

    ``toward_u`` broadcasts against ``y[..., u]`` so a batch may carry per-row
    orientations.
    """
    s = y[..., u] + y[..., v]
    half = s >> 1
    odd = s & 1
    to_u = np.asarray(toward_u, dtype=np.int64)
    y[..., u] = half + (odd & to_u)
    y[..., v] = half + (odd & (1 - to_u))
    return odd.astype(bool)


def _check_loads(schedule: MatchingSchedule, loads) -> np.ndarray:
    y = np.array(loads, dtype=np.int64)
    if y.shape[-1] != schedule.n:
        raise ValueError(f"load vector has length {y.shape[-1]}, schedule has n={schedule.n}")
    if y.size and y.min() < 0:
        raise ValueError("loads must be nonnegative")
    return y


def run_discrete(
    schedule: MatchingSchedule,
    plan: PerturbationPlan | None,
    loads,
    capture_trace: bool = False,
    snapshots: bool = False,
) -> tuple[np.ndarray, RunTrace | None]:
    """Run the token process; ``plan=None`` uses the initial orientations."""
    y = _check_loads(schedule, loads)
    if y.ndim != 1:
        raise ValueError("run_discrete takes a single load vector; use run_discrete_batch")
    orient = effective_orientation(schedule, plan)
    odd_rec, snaps = [], [y.copy()] if snapshots else None
    for m, to_u in zip(schedule, orient):
        odd = balance_round(y, m.u, m.v, to_u)
        if capture_trace:
            odd_rec.append(odd)
        if snaps is not None:
            snaps.append(y.copy())
    trace = None
    if capture_trace:
        flips = list(plan.flips) if plan is not None else [np.zeros(len(m), bool) for m in schedule]
        trace = RunTrace(schedule, odd_rec, list(orient), flips, snaps)
    return y, trace


def run_discrete_batch(
    schedule: MatchingSchedule,
    loads: np.ndarray,
    toward_u: Sequence[np.ndarray] | None = None,
    record_odd: bool = False,
) -> tuple[np.ndarray, list | None]:
    """Run many independent inputs at once.

    ``loads`` has shape ``(batch, n)``. ``toward_u[t-1]`` is either one
    orientation array for every row or a ``(batch, len(M_t))`` array.
    """
    y = _check_loads(schedule, loads)
    orient = toward_u if toward_u is not None else [m.toward_u for m in schedule]
    rec = [] if record_odd else None
    for m, to_u in zip(schedule, orient):
        odd = balance_round(y, m.u, m.v, to_u)
        if rec is not None:
            rec.append(odd)
    return y, rec


# --- idealized process ----------------------------------------------------------------


def _resolve_mode(schedule: MatchingSchedule, mode: str | None) -> str:
    if mode is None:
        return "exact" if schedule.n <= EXACT_MAX_N and schedule.T <= EXACT_MAX_T else "float"
    mode = mode.lower()
    if mode not in ("exact", "float"):
        raise ValueError(f"mode must be 'exact' or 'float', got {mode!r}")
    return mode


def ideal_steps(schedule: MatchingSchedule, loads, mode: str | None = None, allow_bigint: bool = True) -> Iterator:
    """Yield xi(0), xi(1), ..., xi(T)."""
    y = _check_loads(schedule, loads)
    if _resolve_mode(schedule, mode) == "exact":
        xi = DyadicVector(y, 0, allow_bigint)
        yield xi
        for m in schedule:
            xi = xi.averaged(m.u, m.v)
            yield xi
    else:
        xi = y.astype(np.float64)
        yield xi.copy()
        for m in schedule:
            mean = 0.5 * (xi[m.u] + xi[m.v])
            xi[m.u] = mean
            xi[m.v] = mean
            yield xi.copy()


def run_ideal(schedule: MatchingSchedule, loads, mode: str | None = None, allow_bigint: bool = True):
    """Divisible-load comparator: returns a ``DyadicVector`` (exact) or float array.

    ``mode=None`` picks exact arithmetic for n <= 1024 and T <= 62. With
    ``allow_bigint=False`` an exact run that outgrows int64 raises
    ``DyadicOverflowError`` so the caller can switch to float mode.
    """
    xi = None
    for xi in ideal_steps(schedule, loads, mode, allow_bigint):
        pass
    return xi


# --- diagnostics ----------------------------------------------------------------------


def discrepancy(loads):
    """max - min of a load vector (int, float or exact Fraction)."""
    if isinstance(loads, DyadicVector):
        if len(loads) == 0:
            raise ValueError("discrepancy of an empty vector")
        return loads.max() - loads.min()
    a = np.asarray(loads)
    if a.size == 0:
        raise ValueError("discrepancy of an empty vector")
    return a.max() - a.min()


def unfold_deviation(schedule: MatchingSchedule, trace: RunTrace, t: int) -> DyadicVector:
    """sum_{i<=t} rho(i) P[i+1, t], accumulated forward; equals y(t) - xi(t)."""
    if trace.schedule is not schedule and trace.schedule != schedule:
        raise ValueError("trace was recorded on a different schedule")
    if not 0 <= t <= trace.rounds:
        raise ValueError(f"trace covers rounds 1..{trace.rounds}, asked for t={t}")
    dev = DyadicVector.zeros(schedule.n)
    for i in range(1, t + 1):
        m = schedule[i]
        dev = dev.averaged(m.u, m.v) + trace.rho(i)
    return dev


def layer_sums(schedule: MatchingSchedule, plan: PerturbationPlan | None, trace: RunTrace, wire: int) -> list[Fraction]:
    """Per-layer contributions S_l to ``y_wire - mu`` on a CCC network.

    S_l = 2**(l - log n) * sum over B_wire(l) of Odd * psi * phi * side, where
    ``side`` is +1 when ``wire`` lies below the balancer's ``u`` end (same bit
    at position log n - l) and -1 otherwise. For the all-up network and wire 0
    both ``phi`` and ``side`` are +1.
    """
    if not schedule.is_ccc:
        raise ScheduleError("layer_sums requires a CCC schedule")
    if trace.rounds != schedule.T:
        raise ValueError("layer_sums needs a trace of the full schedule")
    log_n = schedule.log_n
    aff = affecting_sets(schedule, wire)
    flips = plan.flips if plan is not None else trace.flipped
    out = []
    for layer in range(1, log_n + 1):
        m = schedule[layer]
        idx = aff[layer]
        odd = trace.odd[layer - 1][idx].astype(np.int64)
        psi2 = np.where(flips[layer - 1][idx], -1, 1)
        phi = np.where(m.toward_u[idx], 1, -1)
        side = 1 if (wire >> (log_n - layer)) & 1 == 0 else -1
        total = int(np.sum(odd * psi2 * phi)) * side
        # total counts 2*psi, hence the extra factor 1/2
        out.append(Fraction(total, 2) * Fraction(2) ** (layer - log_n))
    return out


# --- inputs ---------------------------------------------------------------------------


def uniform_input(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """Independent uniform loads over {0, ..., m-1}."""
    if m < 1:
        raise ValueError("m must be positive")
    return rng.integers(0, m, size=n, dtype=np.int64)


def constant_input(n: int, c: int) -> np.ndarray:
    if c < 0:
        raise ValueError("constant load must be nonnegative")
    return np.full(n, c, dtype=np.int64)


def single_hot_input(n: int, K: int, wire: int = 0) -> np.ndarray:
    """All ``K`` tokens on one wire: initial discrepancy exactly K."""
    if K < 0 or not 0 <= wire < n:
        raise ValueError("need K >= 0 and a valid wire")
    y = np.zeros(n, dtype=np.int64)
    y[wire] = K
    return y


def read_loads(path: str | os.PathLike) -> np.ndarray:
    vals = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                vals.append(int(line))
            except ValueError:
                raise ValueError(f"line {lineno}: expected an integer, got {line!r}") from None
    return np.array(vals, dtype=np.int64)


def write_loads(path: str | os.PathLike, loads) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.writelines(f"{int(x)}\n" for x in loads)
