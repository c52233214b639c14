"""Sweeps over perturbation strengths: build -> perturb -> run -> measure."""
from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bounds import empirical_bounds
from .engine import constant_input, read_loads, run_discrete, single_hot_input, uniform_input
from .network import MatchingSchedule, build_ccc, build_periodic, load_schedule, random_orientation
from .perturbation import sample_plan

CSV_HEADER = ["n", "alpha", "trial", "seed", "discrepancy", "max_above_mean", "min_below_mean", "runtime_ms"]
INPUT_KINDS = ("uniform", "constant", "single-hot", "file")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    ccc_log_n: int | None = None
    periodic_path: str | None = None
    periods: int = 1
    schedule_path: str | None = None
    orientation: str = "up"  # up, down or random (drawn once from orientation_seed)
    orientation_seed: int = 0
    alphas: list = field(default_factory=lambda: [0.0, 0.1, 0.2, 0.3, 0.4, 0.5])
    trials: int = 100
    input_kind: str = "uniform"
    input_m: int | None = None  # uniform range, defaults to n
    input_c: int = 0
    input_K: int = 1
    input_file: str | None = None
    base_seed: int = 0
    out_csv: str | None = None
    out_svg: str | None = None
    mode: str | None = None

    def validate(self) -> None:
        specs = [self.ccc_log_n is not None, self.periodic_path is not None, self.schedule_path is not None]
        if sum(specs) != 1:
            raise ConfigError("exactly one network (ccc, periodic or schedule file) is required")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.alphas:
            raise ConfigError("at least one alpha is required")
        if any(not 0.0 <= a <= 1.0 for a in self.alphas):
            raise ConfigError("alphas must lie in [0, 1]")
        if self.input_kind not in INPUT_KINDS:
            raise ConfigError(f"input must be one of {INPUT_KINDS}")
        if self.input_kind == "file" and not self.input_file:
            raise ConfigError("input 'file' needs an input path")
        if self.orientation not in ("up", "down", "random"):
            raise ConfigError("orientation must be up, down or random")
        if self.periods < 1:
            raise ConfigError("periods must be >= 1")

    def build_schedule(self) -> MatchingSchedule:
        self.validate()
        if self.ccc_log_n is not None:
            if self.orientation == "random":
                return random_orientation(build_ccc(self.ccc_log_n), self.orientation_seed)
            return build_ccc(self.ccc_log_n, self.orientation)
        if self.periodic_path is not None:
            return build_periodic(load_schedule(self.periodic_path), self.periods)
        return load_schedule(self.schedule_path)


@dataclass
class ResultRow:
    n: int
    alpha: float
    trial: int
    seed: int
    discrepancy: int
    max_above_mean: float
    min_below_mean: float
    runtime_ms: float

    def csv_fields(self) -> list[str]:
        return [str(self.n), repr(self.alpha), str(self.trial), str(self.seed), str(self.discrepancy),
                repr(self.max_above_mean), repr(self.min_below_mean), f"{self.runtime_ms:.3f}"]


@dataclass
class AlphaSummary:
    alpha: float
    trials: int
    mean: float
    stddev: float
    lower: float | None = None
    upper: float | None = None

    @property
    def stderr(self) -> float:
        return self.stddev / math.sqrt(self.trials) if self.trials else float("nan")


@dataclass
class SweepResult:
    rows: list
    summary: list


def parse_alpha_range(text: str) -> list[float]:
    """``"0:0.5:0.1"`` (inclusive stop), ``"0,0.25,0.5"`` or a single value."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"alpha range must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ConfigError("alpha step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(max(count, 0))]
    return [float(p) for p in text.split(",") if p.strip()]


def make_input(config: ExperimentConfig, n: int, seed: int) -> np.ndarray:
    if config.input_kind == "uniform":
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))
        return uniform_input(n, config.input_m or n, rng)
    if config.input_kind == "constant":
        return constant_input(n, config.input_c)
    if config.input_kind == "single-hot":
        return single_hot_input(n, config.input_K)
    loads = read_loads(config.input_file)
    if loads.size != n:
        raise ConfigError(f"input file has {loads.size} loads, network has n={n}")
    return loads


def run_trial(schedule: MatchingSchedule, config: ExperimentConfig, alpha: float, trial: int, seed: int) -> ResultRow:
    start = time.perf_counter()
    loads = make_input(config, schedule.n, seed)
    plan = sample_plan(schedule, alpha, seed)
    y, _ = run_discrete(schedule, plan, loads)
    mu = float(loads.sum()) / schedule.n
    hi, lo = int(y.max()), int(y.min())
    return ResultRow(schedule.n, alpha, trial, seed, hi - lo, hi - mu, lo - mu,
                     1000.0 * (time.perf_counter() - start))


def worker_count() -> int:
    env = os.environ.get("SMOOTHNET_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_sweep(config: ExperimentConfig, threads: int | None = None) -> SweepResult:
    """All (alpha, trial) runs; trial seeds are base_seed + alpha_index * trials + trial."""
    schedule = config.build_schedule()
    tasks = [
        (alpha, trial, config.base_seed + ai * config.trials + trial)
        for ai, alpha in enumerate(config.alphas)
        for trial in range(config.trials)
    ]
    threads = threads or worker_count()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda t: run_trial(schedule, config, *t), tasks))
    else:
        rows = [run_trial(schedule, config, *t) for t in tasks]

    log_n = schedule.n.bit_length() - 1 if schedule.is_ccc else None
    summary = []
    for ai, alpha in enumerate(config.alphas):
        block = rows[ai * config.trials:(ai + 1) * config.trials]
        d = np.array([r.discrepancy for r in block], dtype=np.float64)
        lower = upper = None
        if log_n is not None and log_n >= 2:
            lower, upper = empirical_bounds(log_n, alpha)
        std = float(d.std(ddof=1)) if d.size > 1 else 0.0
        summary.append(AlphaSummary(alpha, int(d.size), float(d.mean()), std, lower, upper))
    return SweepResult(rows, summary)


def emit_csv(rows, path: str | os.PathLike) -> None:
    if not rows:
        raise ValueError("no rows to write")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow(r.csv_fields())


def emit_summary_svg(summary, path: str | os.PathLike, title: str = "Discrepancy vs alpha") -> None:
    """Mean discrepancy against alpha, with the lower/upper bound curves dashed."""
    if not summary:
        raise ValueError("empty summary")
    W, H, L, R, TOP, B = 640, 420, 60, 20, 40, 50
    alphas = [s.alpha for s in summary]
    values = [s.mean for s in summary]
    values += [s.upper for s in summary if s.upper is not None]
    values += [s.lower for s in summary if s.lower is not None]
    a_lo, a_hi = min(alphas), max(alphas)
    if a_hi == a_lo:
        a_lo, a_hi = a_lo - 0.05, a_hi + 0.05
    y_hi = max(values) * 1.1 or 1.0

    def px(a: float) -> float:
        return L + (a - a_lo) / (a_hi - a_lo) * (W - L - R)

    def py(v: float) -> float:
        return H - B - v / y_hi * (H - TOP - B)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{W / 2:.1f}" y="22" text-anchor="middle" font-size="15">{title}</text>',
        f'<line x1="{L}" y1="{H - B}" x2="{W - R}" y2="{H - B}" stroke="black"/>',
        f'<line x1="{L}" y1="{TOP}" x2="{L}" y2="{H - B}" stroke="black"/>',
        f'<text x="{W / 2:.1f}" y="{H - 12}" text-anchor="middle" font-size="13">alpha</text>',
        f'<text x="16" y="{H / 2:.1f}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 16 {H / 2:.1f})">discrepancy</text>',
    ]
    for a in alphas:
        out.append(f'<line x1="{px(a):.1f}" y1="{H - B}" x2="{px(a):.1f}" y2="{H - B + 5}" stroke="black"/>')
        out.append(f'<text x="{px(a):.1f}" y="{H - B + 18}" text-anchor="middle" font-size="11">{a:g}</text>')
    step = max(1, math.ceil(y_hi / 8))
    for v in range(0, int(y_hi) + 1, step):
        out.append(f'<line x1="{L - 5}" y1="{py(v):.1f}" x2="{L}" y2="{py(v):.1f}" stroke="black"/>')
        out.append(f'<text x="{L - 8}" y="{py(v) + 4:.1f}" text-anchor="end" font-size="11">{v}</text>')

    def series(vals, style):
        pts = [(px(s.alpha), py(v)) for s, v in zip(summary, vals) if v is not None]
        if not pts:
            return
        coords = " ".join(f"{x:.1f},{y:.1f}" for x, y in pts)
        out.append(f'<polyline points="{coords}" fill="none" {style}/>')
        for x, y in pts:
            out.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="3" {style.replace("stroke=", "fill=", 1)}/>')

    series([s.mean for s in summary], 'stroke="black" stroke-dasharray="2,3"')
    series([s.upper for s in summary], 'stroke="firebrick" stroke-dasharray="8,4"')
    series([s.lower for s in summary], 'stroke="steelblue" stroke-dasharray="8,4"')
    out.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")
