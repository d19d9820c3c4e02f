import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from polarization.model import BenefitCurve, InteractionParams, expected_fitness_fixed, \
    expected_fitness_social
from polarization.simulation import (
    EXPECTED,
    GLOBAL_UNIFORM,
    GROUPS_RESHUFFLE,
    LOCAL_STEP,
    EnvironmentSchedule,
    Population,
    SimConfig,
    checkpoint_events,
    copy_probability,
    environment_at,
    initial_population,
    realized_payoff,
    replicate_rng,
    run_ensemble,
    run_trajectory,
    step,
)

CURVE = BenefitCurve.sigmoid_linear(10.0, 0.02)
PRM = InteractionParams()


def small_config(**kw):
    base = dict(population_size=40, total_events=2000, checkpoints=20, ensemble_size=4,
                schedule=EnvironmentSchedule.sinusoid(1.0, 2000.0), seed=5)
    base.update(kw)
    return SimConfig(**base)


# ---------------------------------------------------------------- schedule

def test_sinusoid_schedule():
    s = EnvironmentSchedule.sinusoid(1.0, 1000.0)
    assert environment_at(0, s) == 1.0
    assert environment_at(500, s) == pytest.approx(-1.0, abs=1e-15)
    assert environment_at(250, s) == pytest.approx(0.0, abs=1e-12)
    assert environment_at(10, EnvironmentSchedule.constant(-0.3)) == -0.3
    with pytest.raises(ValueError):
        environment_at(-1, s)


# -------------------------------------------------------------- Fermi rule

def test_copy_probability():
    assert copy_probability(1.0, 1.0, 10.0) == 0.5
    assert copy_probability(0.0, 1e6, 10.0) == 1.0
    assert copy_probability(1e6, 0.0, 10.0) == 0.0
    assert copy_probability(0.3, 2.0, 0.0) == 0.5
    assert np.isfinite(copy_probability(0.0, 1e4, 1.0))
    with pytest.raises(ValueError):
        copy_probability(0.0, 1.0, -1.0)


@settings(max_examples=100, deadline=None)
@given(a=st.floats(-10, 10), b=st.floats(-10, 10), s=st.floats(0, 100))
def test_copy_probability_symmetry(a, b, s):
    assert copy_probability(a, b, s) + copy_probability(b, a, s) == pytest.approx(1.0, abs=1e-12)


# ------------------------------------------------------ realized payoffs

def test_realized_payoff_deterministic_when_polarized():
    pop = Population.split(np.ones(10))
    rng = np.random.default_rng(0)
    vals = {realized_payoff(0, pop, 0.2, CURVE, PRM, "fixed", rng) for _ in range(50)}
    assert vals == {CURVE(2.5, 0.2, 5)}


def test_social_partners_at_one_never_succeed():
    strategies = np.r_[np.zeros(5), np.ones(5)]
    pop = Population.split(strategies)
    rng = np.random.default_rng(1)
    vals = {realized_payoff(0, pop, 0.0, BenefitCurve.linear(), PRM, "social", rng) for _ in range(200)}
    assert vals == {0.0}


def _mc_mean(fn, draws):
    x = np.array([fn() for _ in range(draws)])
    return x.mean(), x.std(ddof=1) / math.sqrt(draws)


def test_realized_matches_expected_fixed():
    pop = Population.split(np.full(20, 0.3))
    rng = np.random.default_rng(2)
    mean, se = _mc_mean(lambda: realized_payoff(3, pop, 0.2, CURVE, PRM, "fixed", rng), 200_000)
    assert abs(mean - expected_fitness_fixed(0.3, 0.2, CURVE, PRM)) < 3 * se


@pytest.mark.parametrize("group_mode", ["fixed", GROUPS_RESHUFFLE])
def test_realized_matches_expected_social_monomorphic(group_mode):
    pop = Population.split(np.full(20, 0.4))
    rng = np.random.default_rng(3)
    mean, se = _mc_mean(lambda: realized_payoff(1, pop, 0.0, CURVE, PRM, "social", rng, group_mode),
                        200_000)
    assert abs(mean - expected_fitness_social(0.4, 0.4, 0.0, CURVE, PRM)) < 3 * se


# ---------------------------------------------------------- event oracle

def python_event(t, s, groups, u, cfg, params, curve):
    """Plain-Python copying event reading the documented row layout."""
    n = params.n
    size = len(s)
    theta = cfg.schedule.amplitude * math.cos(2 * math.pi * t / cfg.schedule.period)
    focal = min(int(u[0] * size), size - 1)
    obs = min(int(u[1] * (size - 1)), size - 2)
    obs += obs >= focal
    others = {g: [i for i in range(size) if groups[i] == g] for g in (0, 1)}

    def fitness(i, off):
        l_in = l_out = 0
        for j in range(n):
            if u[off + j] < s[i]:
                l_in += u[off + n + j] < params.q_in
            else:
                q = params.q_out
                if cfg.model == "social":
                    pool = others[1 - groups[i]]
                    q *= 1 - s[pool[min(int(u[off + 2 * n + j] * len(pool)), len(pool) - 1)]]
                l_out += u[off + n + j] < q
        pay = l_in * params.b_in + l_out * params.b_out
        return oracles.sigmoid_linear(pay, theta, n, curve.steepness, curve.slope)

    wf, wo = fitness(focal, 2), fitness(obs, 2 + 3 * n)
    x = cfg.selection_strength * (wo - wf)
    if u[2 + 6 * n] < 1 / (1 + math.exp(-x)):
        s[focal] = s[obs]
    if u[3 + 6 * n] < cfg.mutation_rate:
        tgt = min(int(u[4 + 6 * n] * size), size - 1)
        v = u[5 + 6 * n]
        if cfg.mutation_kernel == GLOBAL_UNIFORM:
            s[tgt] = v
        else:
            s[tgt] = min(1.0, s[tgt] + cfg.mutation_step) if v < 0.5 else max(0.0, s[tgt] - cfg.mutation_step)


@pytest.mark.parametrize("model", ["fixed", "social"])
@pytest.mark.parametrize("kernel", [GLOBAL_UNIFORM, LOCAL_STEP])
def test_step_matches_python_oracle(model, kernel):
    cfg = small_config(model=model, mutation_kernel=kernel, mutation_rate=0.3,
                       mutation_step=0.2, selection_strength=3.0)
    rng0 = np.random.default_rng(9)
    pop = initial_population(12, "random", rng0)
    ref = list(pop.strategies)
    rng_a = np.random.default_rng(10)
    rng_b = np.random.default_rng(10)
    width = 6 + 6 * PRM.n
    for t in range(300):
        step(pop, t, cfg, CURVE, PRM, rng_a)
        python_event(t, ref, list(pop.group_of), rng_b.random(width), cfg, PRM, CURVE)
        assert pop.strategies.tolist() == ref


def test_step_and_trajectory_share_stream():
    cfg = small_config(total_events=500, checkpoints=5, model="social")
    pop_a = initial_population(cfg.population_size, "random", np.random.default_rng(4))
    pop_b = Population(pop_a.strategies.copy(), pop_a.group_of.copy())
    rng = np.random.default_rng(8)
    for t in range(cfg.total_events):
        step(pop_a, t, cfg, CURVE, PRM, rng)
    run_trajectory(cfg, CURVE, PRM, pop_b, np.random.default_rng(8))
    assert np.array_equal(pop_a.strategies, pop_b.strategies)


def test_local_step_clamps_at_zero():
    cfg = small_config(mutation_rate=1.0, mutation_kernel=LOCAL_STEP, mutation_step=0.5,
                       selection_strength=0.0)
    pop = Population.split(np.zeros(6))
    rng = np.random.default_rng(0)
    for t in range(200):
        step(pop, t, cfg, CURVE, PRM, rng)
        assert np.all((pop.strategies >= 0) & (pop.strategies <= 1))


def test_global_mutation_every_event():
    cfg = small_config(mutation_rate=1.0, selection_strength=0.0)
    pop = Population.split(np.full(6, 0.5))
    rng = np.random.default_rng(0)
    changed = 0
    for t in range(50):
        before = pop.strategies.copy()
        step(pop, t, cfg, CURVE, PRM, rng)
        changed += np.count_nonzero(before != pop.strategies) >= 1
    assert changed == 50


def test_strong_selection_copies_fitter():
    # p = 1 earns 2.5 for sure, p = 0 with q_o = 0 earns nothing
    prm = PRM.replace(q_out=0.0)
    cfg = small_config(selection_strength=1e4, mutation_rate=0.0,
                       schedule=EnvironmentSchedule.constant(5.0))
    pop = Population.split(np.r_[np.ones(2), np.zeros(2)])
    rng = np.random.default_rng(0)
    for t in range(400):
        step(pop, t, cfg, CURVE, prm, rng)
    assert np.all(pop.strategies == 1.0)


# -------------------------------------------------------------- trajectories

@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32), kernel=st.sampled_from([GLOBAL_UNIFORM, LOCAL_STEP]),
       model=st.sampled_from(["fixed", "social"]), mu=st.floats(0, 1))
def test_strategy_closure(seed, kernel, model, mu):
    cfg = small_config(mutation_kernel=kernel, model=model, mutation_rate=mu, mutation_step=0.7,
                       total_events=300, checkpoints=3)
    pop = initial_population(cfg.population_size, "random", np.random.default_rng(seed))
    run_trajectory(cfg, CURVE, PRM, pop, np.random.default_rng(seed + 1))
    assert np.all((pop.strategies >= 0) & (pop.strategies <= 1))


def test_no_mutation_uniform_start_is_flat():
    cfg = small_config(mutation_rate=0.0)
    traj = run_trajectory(cfg, CURVE, PRM, 0.37, np.random.default_rng(0))
    assert np.all(traj.mean_p == pytest.approx(0.37, abs=1e-15))


def test_checkpoints_evenly_spaced():
    cfg = small_config(total_events=1000, checkpoints=8)
    assert checkpoint_events(cfg).tolist() == [125 * i for i in range(1, 9)]
    traj = run_trajectory(cfg, CURVE, PRM, "random", np.random.default_rng(0))
    assert traj.event_index.tolist() == checkpoint_events(cfg).tolist()
    assert traj.theta[-1] == pytest.approx(-1.0)  # half of the 2000-event period


def test_neutral_drift_conserves_mean():
    cfg = small_config(population_size=20, selection_strength=0.0, mutation_rate=0.0,
                       total_events=200, checkpoints=1, ensemble_size=10_000)
    start = Population.split(np.linspace(0, 1, 20))
    stats = run_ensemble(cfg, CURVE, PRM, initial=start, threads=4)
    # std of a single replicate's mean -> standard error of the ensemble mean
    se = stats.std_p[0] / math.sqrt(cfg.ensemble_size)
    assert abs(stats.mean_p[0] - 0.5) < 3 * se


def test_expected_payoff_mode_runs():
    cfg = small_config(payoff_mode=EXPECTED, model="social")
    traj = run_trajectory(cfg, CURVE, PRM, "random", np.random.default_rng(0))
    assert np.all((traj.mean_p >= 0) & (traj.mean_p <= 1))


# ------------------------------------------------------------------ ensembles

def test_ensemble_size_one_has_zero_std():
    stats = run_ensemble(small_config(ensemble_size=1), CURVE, PRM)
    assert np.all(stats.std_p == 0.0)


def test_ensemble_deterministic_and_thread_independent():
    cfg = small_config(ensemble_size=6)
    a = run_ensemble(cfg, CURVE, PRM, threads=1)
    b = run_ensemble(cfg, CURVE, PRM, threads=4)
    assert np.array_equal(a.mean_p, b.mean_p) and np.array_equal(a.std_p, b.std_p)


def test_ensemble_matches_individual_replicates():
    cfg = small_config(ensemble_size=3)
    stats = run_ensemble(cfg, CURVE, PRM, base_seed=77)
    reps = np.array([run_trajectory(cfg, CURVE, PRM, "random", replicate_rng(77, i)).mean_p
                     for i in range(3)])
    assert np.allclose(stats.mean_p, reps.mean(axis=0), rtol=0, atol=1e-15)
    assert np.allclose(stats.std_p, reps.std(axis=0), rtol=0, atol=1e-15)


def test_different_seeds_differ():
    cfg = small_config()
    a = run_ensemble(cfg, CURVE, PRM, base_seed=1)
    b = run_ensemble(cfg, CURVE, PRM, base_seed=2)
    assert not np.array_equal(a.mean_p, b.mean_p)


# ------------------------------------------------------------------ validation

@pytest.mark.parametrize("kw", [dict(population_size=1), dict(mutation_rate=1.5),
                                dict(mutation_kernel="jump"), dict(model="mixed"),
                                dict(selection_strength=-1.0), dict(checkpoints=0),
                                dict(total_events=5, checkpoints=10), dict(seed=-1)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        small_config(**kw)


def test_social_needs_both_groups():
    pop = Population(np.full(4, 0.5), np.zeros(4, dtype=np.int64))
    with pytest.raises(ValueError):
        step(pop, 0, small_config(model="social"), CURVE, PRM, np.random.default_rng(0))
