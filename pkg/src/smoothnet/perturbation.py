"""Alpha-perturbations of balancer orientations.

A plan holds one flip bit per balancer. Bits are drawn from a single
``numpy.random.default_rng(seed)`` stream in canonical order (round ascending,
then the matching's balancer order), so a plan depends only on the schedule
shape, ``alpha`` and ``seed``.

Sign conventions used throughout the package:

* ``phi = +1`` when the initial orientation points at the smaller endpoint ``u``.
* ``psi = +1/2`` when the balancer was not flipped, ``-1/2`` when it was.
* the excess token goes to ``u`` exactly when ``phi * 2 * psi == +1``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .network import Balancer, MatchingSchedule, Orientation

HALF = Fraction(1, 2)


@dataclass(frozen=True, eq=False)
class PerturbationPlan:
    alpha: float
    seed: int
    flips: tuple  # one bool array per round, True = flipped

    def __eq__(self, other):
        if not isinstance(other, PerturbationPlan):
            return NotImplemented
        return (
            self.alpha == other.alpha
            and self.seed == other.seed
            and len(self.flips) == len(other.flips)
            and all(np.array_equal(a, b) for a, b in zip(self.flips, other.flips))
        )

    def matches(self, schedule: MatchingSchedule) -> bool:
        return len(self.flips) == schedule.T and all(
            f.shape == (len(m),) for f, m in zip(self.flips, schedule)
        )

    def flip_fraction(self) -> float:
        total = sum(f.size for f in self.flips)
        return float(sum(int(f.sum()) for f in self.flips)) / total if total else 0.0

    def hex_dump(self) -> str:
        """One line per round: the flip bits packed MSB-first, as hex."""
        return "\n".join(np.packbits(f.astype(np.uint8)).tobytes().hex() for f in self.flips)


def sample_plan(schedule: MatchingSchedule, alpha: float, seed: int) -> PerturbationPlan:
    """Flip each balancer independently with probability ``alpha``."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    rng = np.random.default_rng(seed)
    draws = rng.random(schedule.num_balancers) < alpha
    sizes = [len(m) for m in schedule]
    flips = tuple(a.copy() for a in np.split(draws, np.cumsum(sizes)[:-1])) if sizes else ()
    for f in flips:
        f.setflags(write=False)
    return PerturbationPlan(float(alpha), int(seed), flips)


def null_plan(schedule: MatchingSchedule) -> PerturbationPlan:
    """The plan with no flips (initial orientations used as-is)."""
    return PerturbationPlan(0.0, 0, tuple(np.zeros(len(m), dtype=bool) for m in schedule))


def effective_orientation(schedule: MatchingSchedule, plan: PerturbationPlan | None) -> list[np.ndarray]:
    """Per-round bool arrays: True when the excess token goes to ``u``."""
    if plan is None:
        return [m.toward_u for m in schedule]
    if not plan.matches(schedule):
        raise ValueError("perturbation plan does not match the schedule shape")
    return [m.toward_u ^ f for m, f in zip(schedule, plan.flips)]


def psi_sign(plan: PerturbationPlan, round_index: int, balancer: int) -> Fraction:
    """+1/2 for an unflipped balancer, -1/2 for a flipped one."""
    if not 1 <= round_index <= len(plan.flips) or not 0 <= balancer < plan.flips[round_index - 1].size:
        raise IndexError(f"no balancer {balancer} in round {round_index}")
    flips = plan.flips[round_index - 1]
    return -HALF if flips[balancer] else HALF


def phi_sign(balancer: Balancer) -> int:
    return 1 if balancer.orientation is Orientation.TOWARD_U else -1
