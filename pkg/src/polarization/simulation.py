"""
Individual-based copying process
================================

Stochastic simulation of a finite population under the pairwise-comparison
(Fermi) copying rule, with mutation and a shifting environment.

Each copying event picks a focal individual and a distinct observed
individual, evaluates both fitnesses (freshly sampled realized payoffs, or
exact expected fitness), lets the focal copy with a logistic probability in
the fitness difference, and then mutates one random individual with
probability ``mutation_rate``.

Random numbers come from NumPy's ``PCG64``.  Replicate ``i`` of an ensemble
with base seed ``s`` uses ``SeedSequence(s, spawn_key=(i,))``, so every
replicate stream is fixed by ``(s, i)`` alone.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.special import expit

from . import _kernels as K
from .equilibrium import FIXED, MODELS, SOCIAL
from .model import (
    LINEAR,
    POWER_CURVATURE,
    SIGMOID_LINEAR,
    BenefitCurve,
    DomainError,
    InteractionParams,
    _PASCAL,
    PASCAL_MAX_N,
)

__all__ = [
    "GLOBAL_UNIFORM",
    "LOCAL_STEP",
    "REALIZED",
    "EXPECTED",
    "RNG_ALGORITHM",
    "EnvironmentSchedule",
    "SimConfig",
    "Population",
    "Trajectory",
    "EnsembleStats",
    "environment_at",
    "copy_probability",
    "realized_payoff",
    "step",
    "run_trajectory",
    "run_ensemble",
    "replicate_rng",
    "initial_population",
]

GLOBAL_UNIFORM = "global_uniform"
LOCAL_STEP = "local_step"
REALIZED = "realized"
EXPECTED = "expected"
GROUPS_FIXED = "fixed"
GROUPS_RESHUFFLE = "reshuffle"

RNG_ALGORITHM = "numpy PCG64; replicate i seeded by SeedSequence(base_seed, spawn_key=(i,))"

# Uniform rows drawn per chunk when running a trajectory.
_CHUNK_EVENTS = 8192

_CURVE_CODES = {SIGMOID_LINEAR: K.CURVE_SIGMOID_LINEAR, POWER_CURVATURE: K.CURVE_POWER,
                LINEAR: K.CURVE_LINEAR}


@dataclass(frozen=True)
class EnvironmentSchedule:
    """Constant environment or ``amplitude * cos(2 pi t / period + phase)``."""

    kind: str = "sinusoid"
    theta: float = 0.0
    amplitude: float = 1.0
    period: float = 100_000.0
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "sinusoid"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if not math.isfinite(self.theta) or not math.isfinite(self.amplitude):
            raise ValueError("schedule theta and amplitude must be finite")
        if not self.period > 0 or not math.isfinite(self.period):
            raise ValueError("schedule period must be positive")
        if not math.isfinite(self.phase):
            raise ValueError("schedule phase must be finite")

    @classmethod
    def constant(cls, theta):
        return cls("constant", theta=theta)

    @classmethod
    def sinusoid(cls, amplitude=1.0, period=100_000.0, phase=0.0):
        return cls("sinusoid", amplitude=amplitude, period=period, phase=phase)

    @property
    def theta_min(self):
        if self.kind == "constant":
            return self.theta
        return -abs(self.amplitude)

    def _args(self):
        kind = K.SCHEDULE_CONSTANT if self.kind == "constant" else K.SCHEDULE_SINUSOID
        return kind, float(self.theta), float(self.amplitude), float(self.period), float(self.phase)


def environment_at(event_index, schedule: EnvironmentSchedule) -> float:
    """Environment quality seen by copying event ``event_index``."""
    if event_index < 0:
        raise ValueError("event_index must be non-negative")
    return float(K.environment(float(event_index), *schedule._args()))


def copy_probability(w_self, w_observed, sigma):
    """Probability of adopting the observed individual's strategy.

    Tends to 1 when the observed individual is much fitter, to 0 when it is
    much less fit, and equals 1/2 at equal fitness or ``sigma = 0``.
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    out = expit(sigma * (np.asarray(w_observed, dtype=float) - np.asarray(w_self, dtype=float)))
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class SimConfig:
    """Settings for the copying process.

    ``total_events`` defaults to one environmental period.  ``group_mode``
    is ``"fixed"`` (equal split at initialization) or ``"reshuffle"``
    (out-group partners drawn from everyone else, as if groups were
    reassigned at every fitness evaluation).
    """

    population_size: int = 1000
    selection_strength: float = 10.0
    mutation_rate: float = 0.001
    mutation_kernel: str = GLOBAL_UNIFORM
    mutation_step: float = 0.01
    model: str = FIXED
    payoff_mode: str = REALIZED
    schedule: EnvironmentSchedule = field(default_factory=EnvironmentSchedule)
    total_events: int | None = None
    checkpoints: int = 200
    ensemble_size: int = 1000
    seed: int = 0
    group_mode: str = GROUPS_FIXED

    def __post_init__(self):
        if self.total_events is None:
            self.total_events = int(round(self.schedule.period))
        if int(self.population_size) != self.population_size or self.population_size < 2:
            raise ValueError("population_size must be an integer >= 2")
        if not self.selection_strength >= 0 or not math.isfinite(self.selection_strength):
            raise ValueError("selection_strength must be finite and non-negative")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")
        if self.mutation_kernel not in (GLOBAL_UNIFORM, LOCAL_STEP):
            raise ValueError(f"unknown mutation kernel {self.mutation_kernel!r}")
        if not 0.0 < self.mutation_step <= 1.0:
            raise ValueError("mutation_step must lie in (0, 1]")
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if self.payoff_mode not in (REALIZED, EXPECTED):
            raise ValueError(f"unknown payoff mode {self.payoff_mode!r}")
        if self.group_mode not in (GROUPS_FIXED, GROUPS_RESHUFFLE):
            raise ValueError(f"unknown group mode {self.group_mode!r}")
        if self.total_events < 1 or self.checkpoints < 1 or self.total_events < self.checkpoints:
            raise ValueError("need total_events >= checkpoints >= 1")
        if self.ensemble_size < 1:
            raise ValueError("ensemble_size must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def replace(self, **changes) -> "SimConfig":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class Population:
    """Strategies and group labels of ``N`` individuals."""

    strategies: np.ndarray
    group_of: np.ndarray

    def __post_init__(self):
        self.strategies = np.ascontiguousarray(self.strategies, dtype=np.float64)
        self.group_of = np.ascontiguousarray(self.group_of, dtype=np.int64)
        if self.strategies.shape != self.group_of.shape or self.strategies.ndim != 1:
            raise ValueError("strategies and group_of must be 1-D arrays of equal length")
        if np.any(self.strategies < 0) or np.any(self.strategies > 1):
            raise ValueError("strategies must lie in [0, 1]")
        if not np.all((self.group_of == 0) | (self.group_of == 1)):
            raise ValueError("group labels must be 0 or 1")

    @classmethod
    def split(cls, strategies):
        """Population with the first half in group 0 and the rest in group 1."""
        strategies = np.asarray(strategies, dtype=np.float64)
        size = strategies.shape[0]
        return cls(strategies.copy(), (np.arange(size) >= size // 2).astype(np.int64))

    @property
    def size(self):
        return self.strategies.shape[0]

    def mean(self):
        return float(self.strategies.mean())

    def _index(self):
        order = np.argsort(self.group_of, kind="stable").astype(np.int64)
        counts = np.bincount(self.group_of, minlength=2).astype(np.int64)
        starts = np.array([0, counts[0]], dtype=np.int64)
        return order, starts, counts


def _curve_args(curve: BenefitCurve):
    return (_CURVE_CODES[curve.kind], float(curve.steepness), float(curve.slope),
            float(10.0 ** curve.curvature_exp))


def _param_args(params: InteractionParams):
    if params.n > PASCAL_MAX_N:
        raise ValueError(f"simulation supports n <= {PASCAL_MAX_N}")
    return params.n, float(params.q_in), float(params.q_out), float(params.b_in), float(params.b_out)


def _check_curve_domain(curve, theta_min):
    if curve.kind == POWER_CURVATURE and theta_min < 0 and not curve.clamp:
        raise DomainError("power-curvature benefit curve needs a non-negative environment")


def _check_social(population, model, group_mode):
    if model == SOCIAL and group_mode == GROUPS_FIXED:
        counts = np.bincount(population.group_of, minlength=2)
        if np.any(counts == 0):
            raise ValueError("social model needs both groups to be non-empty")


def realized_payoff(individual, population: Population, theta, curve: BenefitCurve,
                    params: InteractionParams, model, rng: np.random.Generator,
                    group_mode=GROUPS_FIXED) -> float:
    """Sample ``n`` interactions for one individual and return its fitness."""
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    _check_social(population, model, group_mode)
    _check_curve_domain(curve, theta)
    order, starts, counts = population._index()
    n = params.n
    u = rng.random(3 * n)
    gm = K.GROUPS_FIXED if group_mode == GROUPS_FIXED else K.GROUPS_RESHUFFLE
    return float(K.realized_fitness(int(individual), population.strategies, population.group_of,
                                    order, starts, counts, gm, model == SOCIAL, float(theta),
                                    *_param_args(params), *_curve_args(curve), u, 0))


def _event_args(config: SimConfig, curve, params):
    return dict(
        group_mode=K.GROUPS_FIXED if config.group_mode == GROUPS_FIXED else K.GROUPS_RESHUFFLE,
        social=config.model == SOCIAL,
        expected=config.payoff_mode == EXPECTED,
        kernel=K.KERNEL_GLOBAL if config.mutation_kernel == GLOBAL_UNIFORM else K.KERNEL_LOCAL,
    )


def step(population: Population, event_index, config: SimConfig, curve: BenefitCurve,
         params: InteractionParams, rng: np.random.Generator) -> Population:
    """Apply one copying event (in place) and return the population."""
    _check_social(population, config.model, config.group_mode)
    _check_curve_domain(curve, config.schedule.theta_min)
    a = _event_args(config, curve, params)
    order, starts, counts = population._index()
    u = rng.random(K.row_width(params.n))
    K.copying_event(float(event_index), population.strategies, population.group_of, order, starts,
                    counts, a["group_mode"], a["social"], a["expected"],
                    *config.schedule._args(), *_param_args(params), *_curve_args(curve), _PASCAL,
                    float(config.selection_strength), float(config.mutation_rate), a["kernel"],
                    float(config.mutation_step), u)
    return population


def initial_population(size, initial, rng: np.random.Generator) -> Population:
    """``initial`` is a strategy shared by everyone or ``"random"`` (uniform draws)."""
    if isinstance(initial, str):
        if initial != "random":
            raise ValueError(f"unknown initial condition {initial!r}")
        return Population.split(rng.random(size))
    p0 = float(initial)
    if not 0.0 <= p0 <= 1.0:
        raise ValueError("initial strategy must lie in [0, 1]")
    return Population.split(np.full(size, p0))


@dataclass
class Trajectory:
    event_index: np.ndarray
    theta: np.ndarray
    mean_p: np.ndarray


def checkpoint_events(config: SimConfig):
    """Completed-event counts at which the population mean is recorded."""
    c = np.arange(1, config.checkpoints + 1, dtype=np.int64)
    return (c * config.total_events) // config.checkpoints


def run_trajectory(config: SimConfig, curve: BenefitCurve, params: InteractionParams,
                   initial, rng: np.random.Generator) -> Trajectory:
    """Run ``config.total_events`` copying events and record checkpoint means.

    ``initial`` is either a :class:`Population` (modified in place) or an
    initial condition accepted by :func:`initial_population`.
    """
    if isinstance(initial, Population):
        population = initial
    else:
        population = initial_population(config.population_size, initial, rng)
    _check_social(population, config.model, config.group_mode)
    _check_curve_domain(curve, config.schedule.theta_min)
    a = _event_args(config, curve, params)
    order, starts, counts = population._index()
    record_at = checkpoint_events(config)
    means = np.empty(record_at.shape[0])
    width = K.row_width(params.n)
    cursor = 0
    t = 0
    while t < config.total_events:
        m = min(_CHUNK_EVENTS, config.total_events - t)
        block = rng.random((m, width))
        cursor = K.run_block(t, block, population.strategies, population.group_of, order, starts,
                             counts, a["group_mode"], a["social"], a["expected"],
                             *config.schedule._args(), *_param_args(params), *_curve_args(curve),
                             _PASCAL, float(config.selection_strength),
                             float(config.mutation_rate), a["kernel"], float(config.mutation_step),
                             record_at, means, cursor)
        t += m
    thetas = np.array([environment_at(e, config.schedule) for e in record_at])
    return Trajectory(record_at, thetas, means)


def replicate_rng(base_seed, replicate) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(base_seed),
                                                                      spawn_key=(int(replicate),))))


@dataclass
class EnsembleStats:
    """Ensemble mean and standard deviation of the population-mean strategy."""

    event_index: np.ndarray
    theta: np.ndarray
    mean_p: np.ndarray
    std_p: np.ndarray
    metadata: dict = field(default_factory=dict)


def run_ensemble(config: SimConfig, curve: BenefitCurve, params: InteractionParams,
                 initial="random", base_seed=None, threads=None) -> EnsembleStats:
    """Run ``config.ensemble_size`` independent trajectories and aggregate them.

    ``base_seed`` defaults to ``config.seed``.  Replicates run on up to
    ``threads`` threads; results are stored per replicate and reduced
    afterwards, so the output does not depend on scheduling.
    """
    seed = config.seed if base_seed is None else int(base_seed)
    size = config.ensemble_size
    per_rep = np.empty((size, config.checkpoints))

    def one(i):
        start = initial
        if isinstance(initial, Population):
            start = Population(initial.strategies.copy(), initial.group_of.copy())
        traj = run_trajectory(config, curve, params, start, replicate_rng(seed, i))
        per_rep[i] = traj.mean_p
        return traj

    threads = os.cpu_count() if threads is None else threads
    if threads <= 1 or size == 1:
        trajs = [one(i) for i in range(size)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trajs = list(pool.map(one, range(size)))
    first = trajs[0]
    return EnsembleStats(
        first.event_index,
        first.theta,
        per_rep.mean(axis=0),
        per_rep.std(axis=0),
        metadata={"rng": RNG_ALGORITHM, "base_seed": seed, "ensemble_size": size},
    )
