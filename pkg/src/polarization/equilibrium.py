"""
Selection gradients, singular strategies and invasion analysis
==============================================================

Adaptive-dynamics analysis of both models.  A rare mutant ``f`` invades a
monomorphic resident population ``g`` when ``s(f, g) = w_f - w_g > 0``.  In
the fixed-risk model fitness depends only on one's own strategy; in the
social-risk model out-group success is scaled by the resident's willingness
``1 - g``.

Grid evaluations (pairwise invasibility plots, gradient fields, sweeps) never
accumulate across cells, so results do not depend on evaluation order.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.optimize import bisect

from .model import (
    POWER_CURVATURE,
    BenefitCurve,
    InteractionParams,
    check_strategy,
    expected_fitness_given,
    slice_fitness,
    strategy_weights_derivative,
)

__all__ = [
    "FIXED",
    "SOCIAL",
    "MODELS",
    "SWEEP_PARAMETERS",
    "GradientSample",
    "SingularPoint",
    "PipGrid",
    "GradientField",
    "SweepResult",
    "expected_fitness",
    "invasion_fitness",
    "selection_gradient",
    "gradient_values",
    "optimal_strategy",
    "classify_singular_point",
    "find_singular_points",
    "pip",
    "gradient_field",
    "apply_parameter",
    "sweep",
]

FIXED = "fixed"
SOCIAL = "social"
MODELS = (FIXED, SOCIAL)

SWEEP_PARAMETERS = (
    "q_out",
    "q_in",
    "b_in",
    "b_out_gap",
    "n",
    "steepness",
    "slope",
    "curvature_exp",
    "q_out_with_fixed_expectation",
)

GRADIENT_TOL = 1e-9
ROOT_XTOL = 1e-9
VALUE_TOL = 1e-10
SIGN_TOL = 1e-12
# Finite-difference second derivatives carry ~eps/h**2 noise; curvatures
# smaller than this are treated as zero.
CURVATURE_TOL = 1e-6


def _check_model(model):
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")


def _slices(theta, model, curve, params, p_resident):
    if model == FIXED:
        return slice_fitness(theta, curve, params)
    p_resident = check_strategy(p_resident, "p_resident")
    return slice_fitness(theta, curve, params, params.q_out * (1.0 - p_resident))


def expected_fitness(p_mutant, p_resident, theta, model, curve: BenefitCurve, params: InteractionParams):
    """Expected fitness of ``p_mutant`` in a ``p_resident`` population.

    For the fixed model ``p_resident`` is ignored.
    """
    _check_model(model)
    return expected_fitness_given(p_mutant, _slices(theta, model, curve, params, p_resident))


def invasion_fitness(p_mutant, p_resident, theta, model, curve: BenefitCurve, params: InteractionParams):
    """``s(f, g) = w_f - w_g``: growth advantage of a rare mutant."""
    _check_model(model)
    if model == FIXED:
        g = slice_fitness(theta, curve, params)
        return expected_fitness_given(p_mutant, g) - expected_fitness_given(p_resident, g)
    g = _slices(theta, model, curve, params, p_resident)
    return expected_fitness_given(p_mutant, g) - expected_fitness_given(p_resident, g)


@dataclass(frozen=True)
class GradientSample:
    p: float
    theta: float
    value: float


def gradient_values(p, theta, model, curve: BenefitCurve, params: InteractionParams):
    """Analytic selection gradient at resident strategies ``p`` (array-like).

    Differentiates the exact expected fitness with respect to the mutant's
    strategy and evaluates it with the mutant at the resident.  Finite at the
    boundaries, where it equals the one-sided derivative.
    """
    _check_model(model)
    p = check_strategy(p)
    g = _slices(theta, model, curve, params, p)
    out = np.sum(strategy_weights_derivative(p, params.n) * g, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def _central_difference(p, theta, model, curve, params, step):
    g = _slices(theta, model, curve, params, p)

    def w(x):
        return expected_fitness_given(x, g)

    lo, hi = p - step, p + step
    if lo < 0.0:
        return (w(hi) - w(p)) / step
    if hi > 1.0:
        return (w(p) - w(lo)) / step
    return (w(hi) - w(lo)) / (2.0 * step)


def selection_gradient(
    p,
    theta,
    model,
    curve: BenefitCurve,
    params: InteractionParams,
    method="analytic",
    step=1e-5,
) -> GradientSample:
    """Selection gradient at a monomorphic resident ``p``.

    Parameters
    ----------
    method : {"analytic", "central_difference"}
        ``central_difference`` perturbs the mutant by ``+-step`` with the
        resident held at ``p``; within ``step`` of a boundary it falls back to a
        one-sided difference.
    """
    p = float(check_strategy(p))
    if method == "analytic":
        value = gradient_values(p, theta, model, curve, params)
    elif method == "central_difference":
        _check_model(model)
        value = _central_difference(p, theta, model, curve, params, step)
    else:
        raise ValueError(f"unknown gradient method {method!r}")
    return GradientSample(p=p, theta=float(theta), value=float(value))


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(f, a, b, tol=1e-12):
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def optimal_strategy(
    theta,
    curve: BenefitCurve,
    params: InteractionParams,
    grid_resolution=201,
    value_tol=VALUE_TOL,
    slices=None,
) -> float:
    """Strategy maximising expected fitness in the fixed-risk model.

    A uniform grid locates the best cell, golden-section search refines
    within it.  Candidates whose fitness is within ``value_tol`` of the best
    are tied and the smallest strategy wins.
    """
    if grid_resolution < 2:
        raise ValueError("grid_resolution must be >= 2")
    g = slice_fitness(theta, curve, params) if slices is None else slices
    grid = np.linspace(0.0, 1.0, grid_resolution)
    values = expected_fitness_given(grid, g)
    best = values.max()
    i = int(np.flatnonzero(values >= best - value_tol)[0])
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid_resolution - 1)]
    x, fx = _golden_max(lambda x: expected_fitness_given(x, g), lo, hi)
    # The refined point must beat the grid winner by more than the tie tolerance.
    if fx > values[i] + value_tol:
        return float(x)
    return float(grid[i])


@dataclass(frozen=True)
class SingularPoint:
    """A singular strategy or a boundary of strategy space.

    ``kind`` is ``"interior"``, ``"boundary_low"`` (p = 0) or
    ``"boundary_high"`` (p = 1).  For boundaries, ``ess`` and
    ``convergence_stable`` are judged from the one-sided gradient: the
    boundary is uninvadable by nearby mutants and attracting when the
    gradient points out of strategy space.
    """

    p_star: float
    theta: float
    ess: bool = False
    convergence_stable: bool = False
    kind: str = "interior"
    gradient: float = 0.0
    d2s_dmutant2: float = float("nan")
    d2s_dresident2: float = float("nan")

    @property
    def attracting(self) -> bool:
        return self.convergence_stable


def _second_derivatives(p, theta, model, curve, params, h):
    def s(f, g):
        return invasion_fitness(f, g, theta, model, curve, params)

    s0 = s(p, p)
    d_ff = (s(p + h, p) - 2.0 * s0 + s(p - h, p)) / h**2
    d_gg = (s(p, p + h) - 2.0 * s0 + s(p, p - h)) / h**2
    return d_ff, d_gg


def classify_singular_point(
    point: SingularPoint,
    model,
    curve: BenefitCurve,
    params: InteractionParams,
    fd_step=1e-4,
    curvature_tol=CURVATURE_TOL,
) -> SingularPoint:
    """Fill in ESS and convergence-stability flags for ``point``.

    Interior points: ``ess`` iff the second derivative of invasion fitness in
    the mutant is negative; convergence stable iff the second derivative in
    the resident exceeds it.  Both are central finite differences with step
    ``fd_step``; magnitudes below ``curvature_tol`` count as zero.
    """
    p = float(check_strategy(point.p_star, "p_star"))
    theta = point.theta
    grad = gradient_values(p, theta, model, curve, params)
    if p == 0.0 or p == 1.0:
        kind = "boundary_low" if p == 0.0 else "boundary_high"
        outward = grad < -GRADIENT_TOL if p == 0.0 else grad > GRADIENT_TOL
        return SingularPoint(p, theta, ess=outward, convergence_stable=outward, kind=kind,
                             gradient=float(grad))
    h = min(fd_step, p, 1.0 - p)
    d_ff, d_gg = _second_derivatives(p, theta, model, curve, params, h)
    return SingularPoint(
        p,
        theta,
        ess=bool(d_ff < -curvature_tol),
        convergence_stable=bool(d_gg - d_ff > curvature_tol),
        kind="interior",
        gradient=float(grad),
        d2s_dmutant2=float(d_ff),
        d2s_dresident2=float(d_gg),
    )


def find_singular_points(
    theta,
    model,
    curve: BenefitCurve,
    params: InteractionParams,
    scan_resolution=201,
    fd_step=1e-4,
) -> list[SingularPoint]:
    """Boundaries plus every interior zero of the selection gradient.

    Sign changes on a uniform scan are bracketed and refined by bisection to
    an interval below 1e-9.  The result is ordered by strategy, starting with
    the ``p = 0`` boundary and ending with ``p = 1``.
    """
    if scan_resolution < 16:
        raise ValueError("scan_resolution must be >= 16")
    grid = np.linspace(0.0, 1.0, scan_resolution)
    values = gradient_values(grid, theta, model, curve, params)
    roots = []
    for i in range(1, scan_resolution - 1):
        if values[i] == 0.0:
            roots.append(grid[i])
    for i in range(scan_resolution - 1):
        a, b = values[i], values[i + 1]
        if a == 0.0 or b == 0.0 or (a > 0) == (b > 0):
            continue
        roots.append(bisect(lambda x: gradient_values(x, theta, model, curve, params),
                            grid[i], grid[i + 1], xtol=ROOT_XTOL))
    points = [SingularPoint(0.0, float(theta))]
    points += [SingularPoint(float(r), float(theta)) for r in sorted(roots)]
    points.append(SingularPoint(1.0, float(theta)))
    return [classify_singular_point(pt, model, curve, params, fd_step) for pt in points]


@dataclass
class PipGrid:
    """Sign of invasion fitness over a (mutant, resident) grid.

    ``sign[i, j]`` is the sign of ``s(mutant_axis[i], resident_axis[j])``.
    ``stable`` holds the singular strategies along the diagonal that are both
    uninvadable and attracting.
    """

    mutant_axis: np.ndarray
    resident_axis: np.ndarray
    sign: np.ndarray
    theta: float = 0.0
    model: str = FIXED
    stable: list = field(default_factory=list)

    def stable_strategies(self) -> list[dict]:
        """Stable strategies as plain dicts (``p``, ``kind``, ``globally_uninvadable``)."""
        return [dict(entry) for entry in self.stable]


def _globally_uninvadable(p_star, theta, model, curve, params, mutants, sign_tol):
    g = _slices(theta, model, curve, params, p_star)
    s = expected_fitness_given(mutants, g) - expected_fitness_given(p_star, g)
    return bool(np.all(s <= sign_tol))


def pip(theta, model, curve: BenefitCurve, params: InteractionParams, resolution=201,
        sign_tol=SIGN_TOL) -> PipGrid:
    """Pairwise invasibility plot on a uniform grid of ``resolution`` strategies.

    Stable strategies are located on the diagonal with
    :func:`find_singular_points` (exact roots, not grid cells), keeping those
    that are both ESS and convergence stable.  Each is tested against every
    mutant on the grid for global uninvadability.
    """
    _check_model(model)
    if resolution < 8:
        raise ValueError("resolution must be >= 8")
    axis = np.linspace(0.0, 1.0, resolution)
    if model == FIXED:
        w = expected_fitness_given(axis, slice_fitness(theta, curve, params))
        diff = w[:, None] - w[None, :]
    else:
        g = _slices(theta, model, curve, params, axis)
        # w_mut[i, j]: mutant i among residents j.
        w_mut = expected_fitness_given(axis[:, None], g[None, :, :])
        w_res = np.diagonal(w_mut).copy()
        diff = w_mut - w_res[None, :]
    sign = np.where(np.abs(diff) <= sign_tol, 0, np.sign(diff)).astype(np.int8)
    np.fill_diagonal(sign, 0)
    stable = []
    for pt in find_singular_points(theta, model, curve, params, max(resolution, 16)):
        if pt.ess and pt.convergence_stable:
            stable.append({
                "p": pt.p_star,
                "kind": pt.kind,
                "globally_uninvadable": _globally_uninvadable(pt.p_star, theta, model, curve,
                                                              params, axis, sign_tol),
            })
    return PipGrid(axis, axis.copy(), sign, theta=float(theta), model=model, stable=stable)


@dataclass
class GradientField:
    """Selection gradient ``value[i, j]`` at ``(theta[i], p[j])``."""

    theta: np.ndarray
    p: np.ndarray
    value: np.ndarray

    def samples(self) -> Iterator[GradientSample]:
        for i, th in enumerate(self.theta):
            for j, p in enumerate(self.p):
                yield GradientSample(float(p), float(th), float(self.value[i, j]))


def _pool_map(fn, items, threads):
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _check_sorted(grid, name):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D grid")
    if np.any(np.diff(grid) < 0):
        raise ValueError(f"{name} must be sorted")
    return grid


def gradient_field(theta_grid, p_grid, model, curve: BenefitCurve, params: InteractionParams,
                   threads=None) -> GradientField:
    """Selection gradient over every ``(theta, resident p)`` cell."""
    thetas = _check_sorted(theta_grid, "theta_grid")
    ps = _check_sorted(p_grid, "p_grid")
    check_strategy(ps)
    rows = _pool_map(lambda th: np.atleast_1d(gradient_values(ps, th, model, curve, params)),
                     thetas, threads)
    return GradientField(thetas, ps, np.vstack(rows))


@dataclass
class SweepResult:
    """Equilibria over an environment grid (columns) and a parameter grid (rows).

    In ``optimal`` mode ``p_star`` is a float matrix.  In ``stable_set`` mode
    it is an object matrix whose cells hold tuples of attracting strategies.
    ``clamped[i, j]`` marks cells where a power curve had to be clamped at 0.
    """

    parameter: str
    x_axis: np.ndarray
    y_axis: np.ndarray
    p_star: np.ndarray
    mode: str
    model: str
    clamped: np.ndarray
    metadata: dict = field(default_factory=dict)


def apply_parameter(name, value, curve: BenefitCurve, params: InteractionParams):
    """Return ``(curve, params)`` with sweep parameter ``name`` set to ``value``."""
    if name in ("q_out", "q_in", "b_in"):
        return curve, params.replace(**{name: float(value)})
    if name == "b_out_gap":
        return curve, params.replace(b_out=params.b_in + float(value))
    if name == "n":
        if int(value) != value:
            raise ValueError(f"n must be an integer, got {value!r}")
        return curve, params.replace(n=int(value))
    if name in ("steepness", "slope", "curvature_exp"):
        return curve.replace(**{name: float(value)}), params
    if name == "q_out_with_fixed_expectation":
        value = float(value)
        if value <= 0:
            raise ValueError("q_out must be positive when holding q_out*b_out fixed")
        return curve, params.replace(q_out=value, b_out=params.q_out * params.b_out / value)
    raise ValueError(f"unknown sweep parameter {name!r}; expected one of {SWEEP_PARAMETERS}")


def sweep(
    parameter_name,
    parameter_grid: Sequence[float],
    theta_grid: Sequence[float],
    model,
    curve: BenefitCurve,
    params: InteractionParams,
    mode="optimal",
    grid_resolution=201,
    threads=None,
) -> SweepResult:
    """Optimal or stable strategies over a (parameter, environment) grid.

    ``mode="optimal"`` (fixed model only) records :func:`optimal_strategy`;
    ``mode="stable_set"`` records every attracting point returned by
    :func:`find_singular_points`.  Power curves are clamped at zero and the
    affected cells flagged.
    """
    _check_model(model)
    if mode not in ("optimal", "stable_set"):
        raise ValueError(f"unknown sweep mode {mode!r}")
    if mode == "optimal" and model != FIXED:
        raise ValueError("mode 'optimal' is only defined for the fixed model")
    if parameter_name not in SWEEP_PARAMETERS:
        raise ValueError(f"unknown sweep parameter {parameter_name!r}; expected one of {SWEEP_PARAMETERS}")
    ys = np.asarray(parameter_grid, dtype=float)
    xs = _check_sorted(theta_grid, "theta_grid")
    if ys.ndim != 1 or ys.size == 0:
        raise ValueError("parameter_grid must be a non-empty 1-D grid")
    if curve.kind == POWER_CURVATURE:
        curve = curve.replace(clamp=True)

    def row(y):
        c, prm = apply_parameter(parameter_name, y, curve, params)
        out = []
        for th in xs:
            if mode == "optimal":
                out.append(optimal_strategy(th, c, prm, grid_resolution))
            else:
                pts = find_singular_points(th, model, c, prm, max(grid_resolution, 16))
                out.append(tuple(pt.p_star for pt in pts if pt.attracting))
        # Power curve arguments start at n*theta/n = theta for zero payoff.
        clamped = [c.kind == POWER_CURVATURE and th < 0 for th in xs]
        return out, clamped

    rows = _pool_map(row, ys, threads)
    if mode == "optimal":
        p_star = np.array([r[0] for r in rows], dtype=float)
    else:
        p_star = np.empty((ys.size, xs.size), dtype=object)
        for i, (vals, _) in enumerate(rows):
            for j, v in enumerate(vals):
                p_star[i, j] = v
    clamped = np.array([r[1] for r in rows], dtype=bool)
    metadata = {
        "parameter": parameter_name,
        "model": model,
        "mode": mode,
        "curve": {"kind": curve.kind, "steepness": curve.steepness, "slope": curve.slope,
                  "curvature_exp": curve.curvature_exp},
        "params": {"b_in": params.b_in, "b_out": params.b_out, "q_in": params.q_in,
                   "q_out": params.q_out, "n": params.n},
        "grid_resolution": grid_resolution,
    }
    return SweepResult(parameter_name, xs, ys, p_star, mode, model, clamped, metadata)
