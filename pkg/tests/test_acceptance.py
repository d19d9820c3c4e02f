"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line that the terminal summary prints.  The
thresholds are applied exactly as stated, including the ones that the
implemented model cannot meet (see the README for the numbers).
"""
import json
import time

import numpy as np
import pytest

import oracles
from acceptance_log import record
from polarization import cli
from polarization.config import benefit_curve, interaction_params, load_config, resolve, sim_config
from polarization.equilibrium import (
    FIXED,
    SOCIAL,
    find_singular_points,
    gradient_values,
    optimal_strategy,
    pip,
    selection_gradient,
    sweep,
)
from polarization.model import (
    BenefitCurve,
    InteractionParams,
    expected_fitness_fixed,
    expected_fitness_social,
    outcome_distribution,
)
from polarization.simulation import run_ensemble

CURVE = BenefitCurve.sigmoid_linear(10.0, 0.02)
PRM = InteractionParams()


def test_criterion_1_normalization_and_oracle():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst_mass = worst_fit = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 11))
        q_in, q_out, p, g = rng.random(4)
        b_in, b_out = rng.uniform(0.1, 2.0, 2)
        theta = rng.uniform(-1.5, 1.5)
        h, a = rng.uniform(0.5, 30), rng.uniform(0, 0.1)
        prm = InteractionParams(b_in, b_out, q_in, q_out, n)
        curve = BenefitCurve.sigmoid_linear(h, a)
        worst_mass = max(worst_mass, abs(outcome_distribution(p, prm)[1].sum() - 1.0),
                         abs(oracles.total_mass(n, p, q_in, q_out) - 1.0))

        def kern(x, t, m):
            return oracles.sigmoid_linear(x, t, m, h, a)

        ref_f = oracles.fitness_brute(p, theta, n, b_in, b_out, q_in, q_out, kern)
        ref_s = oracles.fitness_brute(p, theta, n, b_in, b_out, q_in, q_out * (1 - g), kern)
        worst_fit = max(worst_fit,
                        abs(expected_fitness_fixed(p, theta, curve, prm) - ref_f),
                        abs(expected_fitness_social(p, g, theta, curve, prm) - ref_s))
    ok = worst_mass < 1e-12 and worst_fit < 1e-12
    detail = f"max |sum pi - 1| = {worst_mass:.1e}, max |w - oracle| = {worst_fit:.1e}"
    assert record(1, "normalization and oracle equivalence", ok, detail,
                  time.perf_counter() - start, 10), detail


def test_criterion_2_gradient_correctness():
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    for model in (FIXED, SOCIAL):
        for p, theta in zip(rng.uniform(0.01, 0.99, 100), rng.uniform(-1, 1, 100)):
            a = selection_gradient(p, theta, model, CURVE, PRM).value
            c = selection_gradient(p, theta, model, CURVE, PRM, method="central_difference").value
            worst = max(worst, abs(a - c) / max(abs(a), 1e-12))
    ok = worst < 1e-6
    detail = f"max relative difference {worst:.2e}"
    assert record(2, "analytic vs central-difference gradient", ok, detail,
                  time.perf_counter() - start, 10), detail


def test_criterion_3_analytic_limits():
    start = time.perf_counter()
    target = 0.02 * (0.5 - 0.6)
    ps = np.linspace(0, 1, 11)
    fixed_err = max(np.max(np.abs(gradient_values(ps, th, FIXED, CURVE, PRM) - target))
                    for th in (-5.0, 5.0))
    root_target = 1 - 0.5 / 0.6
    root_err, curv_err = [], []
    for th in (-5.0, 5.0):
        interior = [pt.p_star for pt in find_singular_points(th, SOCIAL, CURVE, PRM)
                    if pt.kind == "interior"]
        if not interior:
            root_err.append(np.inf)
            curv_err.append(np.inf)
            continue
        r = min(interior, key=lambda x: abs(x - root_target))
        root_err.append(abs(r - root_target))
        h = 1e-4
        d = (gradient_values(r + h, th, SOCIAL, CURVE, PRM)
             - gradient_values(r - h, th, SOCIAL, CURVE, PRM)) / (2 * h)
        curv_err.append(abs(d - 0.012))
    ok = fixed_err < 1e-6 and max(root_err) < 1e-6 and max(curv_err) < 1e-4
    detail = (f"fixed gradient off by {fixed_err:.2e}; social root error {max(root_err):.1e}; "
              f"resident-slope error {max(curv_err):.1e}")
    assert record(3, "saturated-environment limits", ok, detail,
                  time.perf_counter() - start, 5), detail


def test_criterion_4_bimodal_optimum_map():
    start = time.perf_counter()
    thetas = np.linspace(-1, 1, 101)
    q_outs = np.linspace(0.5, 1.0, 101)
    res = sweep("q_out", q_outs, thetas, FIXED, CURVE, PRM)
    p = res.p_star
    near0, near1 = np.abs(p) <= 1e-6, np.abs(p - 1) <= 1e-6
    interior = int(np.sum(~(near0 | near1)))
    row = int(np.argmin(np.abs(q_outs - 0.6)))
    col = int(np.argmin(np.abs(thetas - 0.9)))
    band = (thetas > -0.9) & (thetas < 0.9)
    ok = (interior == 0 and near0.any() and near1.any() and near0[row, col]
          and near1[row, band].any())
    detail = (f"{interior} of {p.size} cells interior; p*(0.9, 0.6) = {p[row, col]:.3g}; "
              f"p* = 1 in band at q_out 0.6: {bool(near1[row, band].any())}")
    assert record(4, "bimodal fitness-maximizing map", ok, detail,
                  time.perf_counter() - start, 120), detail


def _stable(theta, model):
    return [s["p"] for s in pip(theta, model, CURVE, PRM, 101).stable_strategies()]


def test_criterion_5_pip_structure():
    start = time.perf_counter()
    fixed_ok = all(0.0 in _stable(th, FIXED) for th in (-1.0, 1.0))
    only_high = [th for th in np.linspace(-0.6, -0.2, 41) if _stable(th, SOCIAL) == [1.0]]
    bistable = _stable(1.0, SOCIAL)
    bi_ok = any(p < 0.05 for p in bistable) and 1.0 in bistable
    ok = fixed_ok and bool(only_high) and bi_ok
    detail = (f"fixed p=0 stable at both extremes: {fixed_ok}; social p=1 alone for theta in "
              f"[{min(only_high, default=np.nan):.2f}, {max(only_high, default=np.nan):.2f}]; "
              f"social theta=+1 stable {bistable}")
    assert record(5, "invasibility structure", ok, detail, time.perf_counter() - start, 60), detail


def _desk_ensemble(name):
    values = dict(load_config(name))
    values.update(cli.DESK_SCALE)
    cfg = resolve(values)
    return run_ensemble(sim_config(cfg), benefit_curve(cfg), interaction_params(cfg),
                        initial=cfg["initial"])


def test_criterion_6_fixed_hysteresis_symmetry():
    start = time.perf_counter()
    stats = _desk_ensemble("hysteresis_fixed")
    half = stats.event_index <= stats.event_index[-1] // 2
    th, mp = stats.theta, stats.mean_p
    optimum_high = np.array([optimal_strategy(t, CURVE, PRM) == 1.0 for t in th])
    decline_band = half & optimum_high
    peak = mp[decline_band].max() if decline_band.any() else np.nan
    good_end = mp[th > 0.9].min()
    bad_end = mp[th < -0.9].min()
    # decline sweep is monotone in theta, so interpolate it at the return sweep's thetas
    dec_t, dec_p = th[half][::-1], mp[half][::-1]
    gap = np.max(np.abs(np.interp(th[~half], dec_t, dec_p) - mp[~half]))
    ok = peak > 0.8 and good_end < 0.3 and bad_end < 0.3 and gap < 0.15
    detail = (f"peak mean_p in declining band {peak:.3f}; extremes {good_end:.3f}/{bad_end:.3f}; "
              f"max return-decline gap {gap:.3f}")
    assert record(6, "fixed-risk hysteresis symmetry (desk scale)", ok, detail,
                  time.perf_counter() - start, 300), detail


def test_criterion_7_social_irreversibility():
    start = time.perf_counter()
    stats = _desk_ensemble("entrenchment_social")
    final = stats.mean_p[-1]
    ok = final > 0.8
    detail = f"final mean_p {final:.3f} (max over run {stats.mean_p.max():.3f})"
    assert record(7, "social-risk irreversibility (desk scale)", ok, detail,
                  time.perf_counter() - start, 300), detail


def test_criterion_8_multistability_witness():
    start = time.perf_counter()
    curve = BenefitCurve.sigmoid_linear(100.0, 0.01)
    prm = InteractionParams(q_out=0.51)
    witnesses = []
    for th in np.linspace(-1, 1, 801):
        att = [pt.p_star for pt in find_singular_points(th, SOCIAL, curve, prm) if pt.attracting]
        if len(att) >= 3 and any(0.8 < p < 0.95 for p in att):
            witnesses.append((th, att))
    ok = bool(witnesses)
    detail = (f"{len(witnesses)} witnesses; first theta {witnesses[0][0]:.4f} with attractors "
              f"{[round(p, 3) for p in witnesses[0][1]]}" if witnesses else "no witness found")
    assert record(8, "three attracting strategies", ok, detail,
                  time.perf_counter() - start, 120), detail


def test_criterion_9_simulate_determinism(tmp_path):
    start = time.perf_counter()
    first = tmp_path / "first"
    assert cli.main(["simulate", "--config", "hysteresis_fixed", "--desk-scale", "--seed", "99",
                     "--out", str(first)]) == 0
    again = tmp_path / "again"
    assert cli.main(["replay", str(first / "manifest.json"), "--out", str(again), "--threads", "3"]) == 0
    manifest = json.loads((first / "manifest.json").read_text())
    same = (first / "data.csv").read_bytes() == (again / "data.csv").read_bytes()
    ok = same and manifest["seed"] == 99
    detail = f"replayed CSV byte-identical: {same}"
    assert record(9, "simulate determinism", ok, detail, time.perf_counter() - start, 60), detail


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
