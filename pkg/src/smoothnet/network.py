"""Matching schedules: balancers, matchings, CCC and periodic construction, file I/O.

Vertices are 0-based. A balancer always stores its endpoints with ``u < v``;
its orientation says which endpoint receives the excess token when the
combined load is odd. Matchings keep their balancers as parallel numpy arrays
so that schedules with millions of balancers stay cheap; ``Balancer`` objects
are materialised only on request.
"""
from __future__ import annotations

import enum
import os
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

FILE_MAGIC = "smoothnet-schedule v1"
MAX_CCC_LOG_N = 30


class ScheduleError(ValueError):
    """Invalid matching or schedule."""


class ScheduleFormatError(ScheduleError):
    """Schedule file could not be parsed."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class Orientation(enum.Enum):
    TOWARD_U = "U"
    TOWARD_V = "V"

    def flipped(self) -> "Orientation":
        return Orientation.TOWARD_V if self is Orientation.TOWARD_U else Orientation.TOWARD_U


@dataclass(frozen=True)
class Balancer:
    u: int
    v: int
    orientation: Orientation = Orientation.TOWARD_U

    def __post_init__(self):
        if not 0 <= self.u < self.v:
            raise ScheduleError(f"balancer endpoints must satisfy 0 <= u < v, got ({self.u}, {self.v})")

    @property
    def toward_u(self) -> bool:
        return self.orientation is Orientation.TOWARD_U


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class Matching:
    """One round of balancers.

    ``u``, ``v`` are int64 arrays with ``u < v`` elementwise and ``toward_u`` is
    a bool array (True means the excess token goes to ``u``). No vertex may
    appear twice.
    """

    __slots__ = ("index", "u", "v", "toward_u")

    def __init__(self, index: int, u, v, toward_u=None):
        u = np.array(u, dtype=np.int64).reshape(-1)
        v = np.array(v, dtype=np.int64).reshape(-1)
        if toward_u is None:
            toward_u = np.ones(u.shape, dtype=bool)
        toward_u = np.array(toward_u, dtype=bool).reshape(-1)
        if not (u.shape == v.shape == toward_u.shape):
            raise ScheduleError("u, v and orientation arrays must have equal length")
        if index < 1:
            raise ScheduleError(f"round index must be >= 1, got {index}")
        if u.size:
            if np.any(u < 0) or np.any(u >= v):
                bad = int(np.flatnonzero((u < 0) | (u >= v))[0])
                raise ScheduleError(
                    f"round {index}: balancer ({u[bad]}, {v[bad]}) must satisfy 0 <= u < v"
                )
            ends = np.concatenate([u, v])
            uniq, counts = np.unique(ends, return_counts=True)
            if np.any(counts > 1):
                raise ScheduleError(
                    f"round {index}: duplicate vertex in matching ({int(uniq[counts > 1][0])})"
                )
        self.index = int(index)
        self.u = _frozen(u)
        self.v = _frozen(v)
        self.toward_u = _frozen(toward_u)

    @classmethod
    def from_balancers(cls, index: int, balancers: Iterable[Balancer]) -> "Matching":
        bs = list(balancers)
        return cls(index, [b.u for b in bs], [b.v for b in bs], [b.toward_u for b in bs])

    def __len__(self) -> int:
        return int(self.u.size)

    @property
    def balancers(self) -> list[Balancer]:
        return [
            Balancer(int(a), int(b), Orientation.TOWARD_U if t else Orientation.TOWARD_V)
            for a, b, t in zip(self.u, self.v, self.toward_u)
        ]

    def with_index(self, index: int) -> "Matching":
        return Matching(index, self.u, self.v, self.toward_u)

    def with_orientation(self, toward_u) -> "Matching":
        return Matching(self.index, self.u, self.v, toward_u)

    def max_vertex(self) -> int:
        return int(self.v.max()) if self.u.size else -1

    def __eq__(self, other):
        if not isinstance(other, Matching):
            return NotImplemented
        return (
            self.index == other.index
            and np.array_equal(self.u, other.u)
            and np.array_equal(self.v, other.v)
            and np.array_equal(self.toward_u, other.toward_u)
        )

    def __hash__(self):
        return hash((self.index, self.u.tobytes(), self.v.tobytes(), self.toward_u.tobytes()))

    def __repr__(self):
        return f"Matching(index={self.index}, balancers={len(self)})"


class MatchingSchedule:
    """A network on ``n`` vertices: the ordered matchings M(1) ... M(T)."""

    __slots__ = ("n", "matchings", "ccc_log_n")

    def __init__(self, n: int, matchings: Sequence[Matching], ccc_log_n: int | None = None):
        if n < 1:
            raise ScheduleError(f"n must be positive, got {n}")
        ms = tuple(matchings)
        for i, m in enumerate(ms, start=1):
            if m.index != i:
                raise ScheduleError(f"matching at position {i} carries round index {m.index}")
            if m.max_vertex() >= n:
                raise ScheduleError(f"round {i}: vertex {m.max_vertex()} out of range for n={n}")
        self.n = int(n)
        self.matchings = ms
        self.ccc_log_n = ccc_log_n

    @property
    def T(self) -> int:
        return len(self.matchings)

    def __len__(self) -> int:
        return len(self.matchings)

    def __iter__(self) -> Iterator[Matching]:
        return iter(self.matchings)

    def __getitem__(self, round_index: int) -> Matching:
        """1-based access, ``schedule[1]`` is the first matching."""
        if not 1 <= round_index <= self.T:
            raise IndexError(f"round {round_index} outside 1..{self.T}")
        return self.matchings[round_index - 1]

    @property
    def num_balancers(self) -> int:
        return sum(len(m) for m in self.matchings)

    @property
    def is_ccc(self) -> bool:
        return self.ccc_log_n is not None or is_ccc_structure(self)

    @property
    def log_n(self) -> int:
        """``log2 n`` for CCC schedules."""
        if not self.is_ccc:
            raise ScheduleError("schedule is not a CCC network")
        return self.n.bit_length() - 1

    def prefix(self, t: int) -> "MatchingSchedule":
        return MatchingSchedule(self.n, self.matchings[:t], self.ccc_log_n if t == self.T else None)

    def with_orientations(self, toward_u: Sequence) -> "MatchingSchedule":
        """Same balancers, new per-round orientation arrays."""
        if len(toward_u) != self.T:
            raise ScheduleError(f"need {self.T} orientation arrays, got {len(toward_u)}")
        ms = [m.with_orientation(o) for m, o in zip(self.matchings, toward_u)]
        return MatchingSchedule(self.n, ms, self.ccc_log_n)

    def flipped(self) -> "MatchingSchedule":
        return self.with_orientations([~m.toward_u for m in self.matchings])

    def __eq__(self, other):
        if not isinstance(other, MatchingSchedule):
            return NotImplemented
        return self.n == other.n and self.matchings == other.matchings

    def __hash__(self):
        return hash((self.n, self.matchings))

    def __repr__(self):
        kind = f"CCC log_n={self.ccc_log_n}" if self.is_ccc else "custom"
        return f"MatchingSchedule(n={self.n}, T={self.T}, {kind})"


def _orientation_arrays(orientation, sizes: Sequence[int]) -> list[np.ndarray]:
    if isinstance(orientation, str):
        key = orientation.lower()
        if key in ("up", "allup", "all-up"):
            return [np.ones(s, dtype=bool) for s in sizes]
        if key in ("down", "alldown", "all-down"):
            return [np.zeros(s, dtype=bool) for s in sizes]
        raise ScheduleError(f"unknown orientation {orientation!r}")
    flat = np.array(
        [o is Orientation.TOWARD_U if isinstance(o, Orientation) else bool(o) for o in orientation],
        dtype=bool,
    )
    if flat.size != sum(sizes):
        raise ScheduleError(f"per-balancer orientation list has {flat.size} entries, need {sum(sizes)}")
    return np.split(flat, np.cumsum(sizes)[:-1])


def build_ccc(log_n: int, orientation="up") -> MatchingSchedule:
    """Cube-connected-cycles network on ``2**log_n`` wires.

    Layer ``l`` (1-based) joins ``u`` and ``u ^ 2**(log_n - l)``, so layer 1
    acts on the most significant bit. ``orientation`` is ``"up"`` (excess to the
    smaller wire), ``"down"``, or a flat per-balancer sequence in canonical order
    (layer ascending, then ``u`` ascending) of bools / ``Orientation`` values.
    """
    if not isinstance(log_n, (int, np.integer)) or not 1 <= log_n <= MAX_CCC_LOG_N:
        raise ScheduleError(f"log_n must be an integer in [1, {MAX_CCC_LOG_N}], got {log_n!r}")
    n = 1 << log_n
    wires = np.arange(n, dtype=np.int64)
    sizes = [n // 2] * log_n
    orient = _orientation_arrays(orientation, sizes)
    ms = []
    for layer in range(1, log_n + 1):
        bit = 1 << (log_n - layer)
        u = wires[(wires & bit) == 0]
        ms.append(Matching(layer, u, u | bit, orient[layer - 1]))
    return MatchingSchedule(n, ms, ccc_log_n=log_n)


def random_orientation(schedule: MatchingSchedule, seed: int) -> MatchingSchedule:
    """Copy of ``schedule`` with every orientation drawn uniformly at random."""
    rng = np.random.default_rng(seed)
    return schedule.with_orientations([rng.random(len(m)) < 0.5 for m in schedule])


def build_periodic(round_: Sequence[Matching], periods: int, n: int | None = None) -> MatchingSchedule:
    """Repeat the ``d`` matchings of one round ``periods`` times."""
    round_ = list(round_.matchings if isinstance(round_, MatchingSchedule) else round_)
    if not round_:
        raise ScheduleError("a round needs at least one matching")
    if periods < 1:
        raise ScheduleError(f"periods must be positive, got {periods}")
    if n is None:
        n = max(m.max_vertex() for m in round_) + 1
    ms = []
    for p in range(periods):
        for j, m in enumerate(round_):
            ms.append(m.with_index(p * len(round_) + j + 1))
    return MatchingSchedule(n, ms)


def random_perfect_round(n: int, d: int, rng: np.random.Generator) -> list[Matching]:
    """``d`` uniformly random perfect matchings on ``n`` (even) vertices, all oriented toward ``u``."""
    if n < 2 or n % 2:
        raise ScheduleError(f"perfect matchings need an even n >= 2, got {n}")
    if d < 1:
        raise ScheduleError(f"d must be positive, got {d}")
    out = []
    for j in range(1, d + 1):
        perm = rng.permutation(n).reshape(-1, 2)
        lo, hi = perm.min(axis=1), perm.max(axis=1)
        order = np.argsort(lo)
        out.append(Matching(j, lo[order], hi[order], np.ones(n // 2, dtype=bool)))
    return out


def is_ccc_structure(schedule: MatchingSchedule) -> bool:
    """True when every layer pairs exactly the wires differing in bit ``log n - l``."""
    n = schedule.n
    log_n = n.bit_length() - 1
    if n != 1 << log_n or schedule.T != log_n or log_n < 1:
        return False
    for layer, m in enumerate(schedule, start=1):
        bit = 1 << (log_n - layer)
        if len(m) != n // 2 or np.any((m.u & bit) != 0) or np.any(m.v != (m.u ^ bit)):
            return False
    return True


# --- affecting sets -------------------------------------------------------------------


@dataclass(frozen=True)
class AffectingSet:
    """Balancers with a forward path to ``wire``; ``layers[l-1]`` holds balancer
    positions (indices into round ``l``'s arrays)."""

    wire: int
    layers: tuple

    def sizes(self) -> list[int]:
        return [int(x.size) for x in self.layers]

    def __getitem__(self, layer: int) -> np.ndarray:
        return self.layers[layer - 1]

    def total(self) -> int:
        return sum(self.sizes())

    def pairs(self, schedule: MatchingSchedule, layer: int) -> list[tuple[int, int]]:
        m = schedule[layer]
        idx = self.layers[layer - 1]
        return list(zip(m.u[idx].tolist(), m.v[idx].tolist()))


def affecting_sets(schedule: MatchingSchedule, wire: int) -> AffectingSet:
    """Backward reachability from ``wire`` through the schedule."""
    if not 0 <= wire < schedule.n:
        raise ScheduleError(f"wire {wire} out of range for n={schedule.n}")
    reach = np.zeros(schedule.n, dtype=bool)
    reach[wire] = True
    layers = [None] * schedule.T
    for t in range(schedule.T, 0, -1):
        m = schedule[t]
        hit = np.flatnonzero(reach[m.u] | reach[m.v])
        reach[m.u[hit]] = True
        reach[m.v[hit]] = True
        layers[t - 1] = _frozen(hit)
    return AffectingSet(wire, tuple(layers))


# --- file format ----------------------------------------------------------------------


def format_schedule(schedule: MatchingSchedule) -> str:
    lines = [FILE_MAGIC, f"n={schedule.n} T={schedule.T}"]
    for m in schedule:
        lines.append(f"round {m.index}")
        for a, b, t in zip(m.u.tolist(), m.v.tolist(), m.toward_u.tolist()):
            lines.append(f"{a} {b} {'U' if t else 'V'}")
    return "\n".join(lines) + "\n"


def parse_schedule(text: str) -> MatchingSchedule:
    rows = [
        (i, line.strip())
        for i, line in enumerate(text.splitlines(), start=1)
        if line.strip() and not line.lstrip().startswith("#")
    ]
    if not rows:
        raise ScheduleFormatError("empty schedule file", 1)
    lineno, magic = rows[0]
    if magic != FILE_MAGIC:
        raise ScheduleFormatError(f"expected header {FILE_MAGIC!r}, got {magic!r}", lineno)
    if len(rows) < 2:
        raise ScheduleFormatError("missing 'n=<int> T=<int>' line", lineno + 1)
    lineno, dims = rows[1]
    try:
        fields = dict(tok.split("=", 1) for tok in dims.split())
        n, T = int(fields["n"]), int(fields["T"])
    except (ValueError, KeyError):
        raise ScheduleFormatError(f"expected 'n=<int> T=<int>', got {dims!r}", lineno) from None

    rounds: list[tuple[int, list]] = []
    for lineno, line in rows[2:]:
        parts = line.split()
        if parts[0] == "round":
            if len(parts) != 2 or not parts[1].isdigit():
                raise ScheduleFormatError(f"malformed round header {line!r}", lineno)
            idx = int(parts[1])
            if idx != len(rounds) + 1:
                raise ScheduleFormatError(f"expected round {len(rounds) + 1}, got {idx}", lineno)
            rounds.append((lineno, []))
            continue
        if not rounds:
            raise ScheduleFormatError("balancer line before first 'round' header", lineno)
        if len(parts) != 3 or parts[2] not in ("U", "V"):
            raise ScheduleFormatError(f"expected '<u> <v> <U|V>', got {line!r}", lineno)
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError:
            raise ScheduleFormatError(f"non-integer vertex in {line!r}", lineno) from None
        if not 0 <= a < n or not 0 <= b < n:
            raise ScheduleError(f"line {lineno}: vertex index out of range for n={n}: {line!r}")
        if a >= b:
            raise ScheduleError(f"line {lineno}: balancer must have u < v: {line!r}")
        rounds[-1][1].append((a, b, parts[2] == "U", lineno))

    if len(rounds) != T:
        raise ScheduleError(f"header declares T={T} but file has {len(rounds)} rounds")
    ms = []
    for idx, (lineno, bal) in enumerate(rounds, start=1):
        seen: dict[int, int] = {}
        for a, b, _, ln in bal:
            for x in (a, b):
                if x in seen:
                    raise ScheduleError(f"line {ln}: duplicate vertex in matching (vertex {x}, round {idx})")
                seen[x] = ln
        ms.append(Matching(idx, [r[0] for r in bal], [r[1] for r in bal], [r[2] for r in bal]))
    sched = MatchingSchedule(n, ms)
    if is_ccc_structure(sched):
        sched = MatchingSchedule(n, ms, ccc_log_n=n.bit_length() - 1)
    return sched


def save_schedule(schedule: MatchingSchedule, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_schedule(schedule))


def load_schedule(path: str | os.PathLike) -> MatchingSchedule:
    with open(path, encoding="utf-8") as fh:
        return parse_schedule(fh.read())
