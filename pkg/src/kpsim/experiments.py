"""Weight distributions, sweep harness, and growth-rate classification.

A sweep runs the dynamics (or coalition) engine over increasing n under a
fixed policy/priority combination and aggregates step counts per n.
Classification fits linear, polynomial, and exponential models to a
(n, steps) series and picks the best by r-squared.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .coalitions import COALITION_PRIORITIES, run_coalitional
from .dynamics import DEFAULT_MAX_STEPS, PRIORITIES, PriorityAlgorithm, run_to_ne
from .errors import BudgetError, DomainError
from .model import MODELS, POLICIES, Instance, State
from .rng import SplitMix64, derive_seeds

DISTRIBUTIONS = ("a", "b", "c", "d", "e")

# fraction of heavy users (weight 10^floor(n/10)) per distribution tag
_HEAVY_PERCENT = {"a": 10, "b": 50, "c": 90}


def gen_weights(dist: str, n: int, seed: int = 0) -> list[int]:
    """n integer weights for one of the benchmark distributions.

    a/b/c: 10%/50%/90% heavy users (weight 10^floor(n/10), lowest ids,
    count rounded up), remainder weight 1. d: uniform on
    [1, 10^floor(n/10)]. e: weight i for user i (1-based).
    """
    if dist not in DISTRIBUTIONS:
        raise DomainError(f"unknown distribution {dist!r}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if dist == "e":
        return list(range(1, n + 1))
    if n // 10 > 38:
        raise BudgetError(
            f"distribution {dist!r} weight 10^{n // 10} exceeds 128 bits (n <= 380)"
        )
    heavy = 10 ** (n // 10)
    if dist == "d":
        rng = SplitMix64(seed)
        return [1 + rng.next_below(heavy) for _ in range(n)]
    count = (_HEAVY_PERCENT[dist] * n + 99) // 100
    return [heavy] * count + [1] * (n - count)


def resolve_m(m_config, n: int) -> int:
    """Machine count from an int or an 'n/K' ratio; default ceil(n/2)."""
    if m_config is None:
        return (n + 1) // 2
    if isinstance(m_config, int) and not isinstance(m_config, bool):
        if m_config < 1:
            raise DomainError(f"m must be >= 1, got {m_config}")
        return m_config
    if isinstance(m_config, str):
        text = m_config.replace(" ", "")
        if text.startswith("n/"):
            try:
                k = int(text[2:])
            except ValueError:
                k = 0
            if k >= 1:
                return max(1, (n + k - 1) // k)
    raise DomainError(f"m must be an integer or 'n/K', got {m_config!r}")


@dataclass
class ExperimentConfig:
    """One sweep: fixed policy/priority/distribution, n varying."""

    policy: str
    priority: str
    dist: str
    n_values: list[int]
    coalition: Optional[str] = None
    machine_model: str = "identical"
    m: object = None  # int, "n/K", or None for ceil(n/2)
    repetitions: Optional[int] = None  # None: 5 if randomized, else 1
    seed: int = 0
    max_steps: int = DEFAULT_MAX_STEPS
    initial: str = "concentrated"

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise DomainError(f"config field 'policy': unknown policy {self.policy!r}")
        if self.priority not in PRIORITIES:
            raise DomainError(
                f"config field 'priority': unknown priority {self.priority!r}"
            )
        if self.dist not in DISTRIBUTIONS:
            raise DomainError(f"config field 'dist': unknown distribution {self.dist!r}")
        if not self.n_values or list(self.n_values) != sorted(set(self.n_values)):
            raise DomainError(
                "config field 'n_values': must be a non-empty increasing list"
            )
        if any(n < 1 for n in self.n_values):
            raise DomainError("config field 'n_values': entries must be >= 1")
        if self.coalition is not None:
            if self.coalition not in COALITION_PRIORITIES:
                raise DomainError(
                    f"config field 'coalition': unknown priority {self.coalition!r}"
                )
            if self.policy != "makespan" or self.machine_model != "identical":
                raise DomainError(
                    "config field 'coalition': coalitions need the makespan policy "
                    "on identical machines"
                )
        if self.machine_model not in MODELS:
            raise DomainError(
                f"config field 'machine_model': unknown model {self.machine_model!r}"
            )
        if self.machine_model != "identical":
            raise DomainError(
                "config field 'machine_model': sweeps generate weights, so only "
                "identical machines are supported"
            )
        if self.repetitions is not None and self.repetitions < 1:
            raise DomainError("config field 'repetitions': must be >= 1")
        if self.max_steps < 1:
            raise DomainError("config field 'max_steps': must be >= 1")
        if self.initial not in ("concentrated", "random"):
            raise DomainError(
                f"config field 'initial': expected 'concentrated' or 'random', "
                f"got {self.initial!r}"
            )
        try:
            for n in self.n_values:
                resolve_m(self.m, n)
        except DomainError as exc:
            raise DomainError(f"config field 'm': {exc}") from None

    @property
    def effective_repetitions(self) -> int:
        if self.repetitions is not None:
            return self.repetitions
        randomized = (
            self.dist == "d" or self.priority == "random" or self.initial == "random"
        )
        return 5 if randomized else 1

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise DomainError("config must be a JSON object")
        known = {
            "policy", "priority", "dist", "n_values", "coalition", "machine_model",
            "m", "repetitions", "seed", "max_steps", "initial",
        }
        for key in data:
            if key not in known:
                raise DomainError(f"config field {key!r}: unknown field")
        for required in ("policy", "priority", "dist", "n_values"):
            if required not in data:
                raise DomainError(f"config field {required!r}: missing")
        return cls(**data)


@dataclass
class ExperimentRow:
    n: int
    mean_steps: float
    max_steps_observed: int
    mean_flips: float
    capped_runs: int


def _run_cell(config: ExperimentConfig, n: int, cell_seed: int):
    weight_seed, init_seed, priority_seed = derive_seeds(cell_seed, 3)
    weights = gen_weights(config.dist, n, weight_seed)
    instance = Instance("identical", resolve_m(config.m, n), tuple(weights))
    if config.initial == "random":
        state = State.random(instance, SplitMix64(init_seed))
    else:
        state = State.concentrated(instance)
    if config.priority == "random":
        algo = PriorityAlgorithm("random", seed=priority_seed)
    else:
        algo = PriorityAlgorithm(config.priority)
    if config.coalition is not None:
        result = run_coalitional(instance, state, algo, config.coalition, config.max_steps)
        steps = result.single_moves + result.flips
        return steps, result.flips, not result.reached_ne
    result = run_to_ne(instance, state, config.policy, algo, config.max_steps)
    return result.steps, 0, not result.reached_ne


def _run_cell_args(args):
    return _run_cell(*args)


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> list[ExperimentRow]:
    """One row per n: step/flip means over the repetitions.

    Sub-seeds are assigned to (n, repetition) cells up front, so results are
    bit-identical regardless of worker count.
    """
    reps = config.effective_repetitions
    cells = [(n, rep) for n in config.n_values for rep in range(reps)]
    seeds = derive_seeds(config.seed, len(cells))
    tasks = [(config, n, seed) for (n, _), seed in zip(cells, seeds)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_cell_args, tasks))
    else:
        outcomes = [_run_cell(*task) for task in tasks]
    rows = []
    for index, n in enumerate(config.n_values):
        chunk = outcomes[index * reps : (index + 1) * reps]
        steps = [c[0] for c in chunk]
        flips = [c[1] for c in chunk]
        capped = sum(1 for c in chunk if c[2])
        rows.append(
            ExperimentRow(
                n=n,
                mean_steps=sum(steps) / reps,
                max_steps_observed=max(steps),
                mean_flips=sum(flips) / reps,
                capped_runs=capped,
            )
        )
    return rows


# --- growth classification ---------------------------------------------------


@dataclass
class GrowthClass:
    """Winning growth model for a (n, steps) series.

    `fit` is the line slope (linear), the exponent (polynomial), or the
    per-n log rate (exponential); `r_squared` is the winner's fit quality.
    """

    tag: str  # linear | polynomial | exponential | inconclusive
    fit: float
    r_squared: float


def _least_squares(x, y):
    slope, intercept = np.polyfit(x, y, 1)
    predicted = slope * x + intercept
    ss_res = float(((y - predicted) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        return float(slope), None
    return float(slope), 1.0 - ss_res / ss_tot


def classify_growth(series, r2_threshold: float = 0.9) -> GrowthClass:
    """Fit steps ~ a*n+b, log steps ~ p*log n + b, log steps ~ r*n + b.

    Highest r-squared wins (ties prefer the simpler model); a polynomial
    winner with exponent <= 1.2 counts as linear. The series must cover at
    least 4 distinct n values; points with non-positive step counts are
    dropped, and a series that is flat or left with under 4 points is
    inconclusive, as is a winner below `r2_threshold`.
    """
    if len({n for n, _ in series}) < 4:
        raise DomainError("need at least 4 distinct n values")
    points = sorted((float(n), float(s)) for n, s in series if s > 0)
    if len({n for n, _ in points}) < 4:
        return GrowthClass("inconclusive", 0.0, 0.0)
    ns = np.array([n for n, _ in points])
    steps = np.array([s for _, s in points])
    fits = [
        ("linear", *_least_squares(ns, steps)),
        ("polynomial", *_least_squares(np.log(ns), np.log(steps))),
        ("exponential", *_least_squares(ns, np.log(steps))),
    ]
    winner = None
    for tag, slope, r2 in fits:
        if r2 is None:
            continue
        if winner is None or r2 > winner[2]:
            winner = (tag, slope, r2)
    if winner is None:
        return GrowthClass("inconclusive", 0.0, 0.0)
    tag, slope, r2 = winner
    if tag == "polynomial" and slope <= 1.2:
        tag = "linear"
    if r2 < r2_threshold:
        tag = "inconclusive"
    return GrowthClass(tag, slope, r2)
