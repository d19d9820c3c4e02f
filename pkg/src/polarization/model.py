"""
Interaction outcomes and expected fitness
=========================================

Exact probabilistic machinery shared by both models of in-group/out-group
interaction.

A focal individual with strategy ``p`` takes part in ``n`` interactions.  Each
one is an in-group interaction with probability ``p`` (succeeding with
probability ``q_in`` and paying ``b_in``) or an out-group interaction
(succeeding with probability ``q_out_eff`` and paying ``b_out``).  A single
realization is summarised by the tally ``(k, l_in, l_out)``: in-group
attempts, in-group successes and out-group successes.

Fitness is obtained by passing the accumulated benefit through a
:class:`BenefitCurve`.  Expected fitness is the exact sum over every tally.
The sum is factored as

.. math::

    \\hat w(p) = \\sum_k \\mathrm{Bin}(k; n, p)\\, G_k, \\qquad
    G_k = \\sum_{l_i, l_o} \\mathrm{Bin}(l_i; k, q_i)\\,
          \\mathrm{Bin}(l_o; n-k, q_o)\\, K(l_i, l_o),

so that ``G`` depends only on the environment and the success
probabilities and can be reused across many strategies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy.special import expit
from scipy.stats import binom

__all__ = [
    "DomainError",
    "InteractionParams",
    "OutcomeTally",
    "BenefitCurve",
    "SIGMOID_LINEAR",
    "POWER_CURVATURE",
    "LINEAR",
    "check_strategy",
    "tallies",
    "outcome_probability",
    "outcome_distribution",
    "expected_linear_benefit",
    "fitness_kernel",
    "kernel_matrix",
    "slice_fitness",
    "strategy_weights",
    "strategy_weights_derivative",
    "expected_fitness_fixed",
    "expected_fitness_social",
    "expected_fitness_given",
]

# Largest n for which binomial coefficients come from the exact Pascal table.
PASCAL_MAX_N = 64

SIGMOID_LINEAR = "sigmoid_linear"
POWER_CURVATURE = "power_curvature"
LINEAR = "linear"
_CURVE_KINDS = (SIGMOID_LINEAR, POWER_CURVATURE, LINEAR)


class DomainError(ValueError):
    """Raised when a benefit curve is evaluated outside its domain."""


def _pascal(nmax):
    rows = np.zeros((nmax + 1, nmax + 1))
    for k in range(nmax + 1):
        for l in range(k + 1):
            rows[k, l] = math.comb(k, l)
    return rows


_PASCAL = _pascal(PASCAL_MAX_N)


def check_strategy(p, name="p"):
    """Validate a strategy (scalar or array) lies in ``[0, 1]``."""
    arr = np.asarray(p, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {p!r}")
    return arr


def _check_probability(q, name):
    if not (0.0 <= q <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {q!r}")


@dataclass(frozen=True)
class InteractionParams:
    """Benefits, success probabilities and number of interactions.

    Defaults are the baseline values used throughout (``b_in=0.5``,
    ``b_out=1``, ``q_in=1``, ``q_out=0.6``, ``n=5``).
    """

    b_in: float = 0.5
    b_out: float = 1.0
    q_in: float = 1.0
    q_out: float = 0.6
    n: int = 5

    def __post_init__(self):
        _check_probability(self.q_in, "q_in")
        _check_probability(self.q_out, "q_out")
        if not self.b_in > 0 or not self.b_out > 0:
            raise ValueError("benefits b_in and b_out must be positive")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def risk_reward_ordered(self) -> bool:
        """True when out-group interactions pay more but fail more often."""
        return self.b_out > self.b_in and self.q_out < self.q_in

    def replace(self, **changes) -> "InteractionParams":
        return replace(self, **changes)


class OutcomeTally(NamedTuple):
    """One realization: in-group attempts and successes, out-group successes."""

    k: int
    l_in: int
    l_out: int

    def validate(self, n: int) -> "OutcomeTally":
        k, l_in, l_out = self
        if not (0 <= l_in <= k <= n and 0 <= l_out <= n - k):
            raise ValueError(f"invalid tally {tuple(self)} for n={n}")
        return self

    def payoff(self, params: InteractionParams) -> float:
        return self.l_in * params.b_in + self.l_out * params.b_out


@dataclass(frozen=True)
class BenefitCurve:
    """Map accumulated benefit and environment quality to fitness.

    Parameters
    ----------
    kind : str
        ``"sigmoid_linear"`` (logistic threshold times a linear term),
        ``"power_curvature"`` (constant curvature with exponent
        ``10**curvature_exp``) or ``"linear"`` (the raw accumulated benefit;
        ignores the environment and is mainly useful as a reference).
    steepness : float
        Sharpness of the logistic threshold.
    slope : float
        Linear accumulation rate above the threshold.
    curvature_exp : float
        Base-10 log of the power-curve exponent; 0 gives zero curvature,
        negative values a concave curve.
    clamp : bool
        For the power curve, clamp negative arguments to 0 instead of raising
        :class:`DomainError`.
    """

    kind: str = SIGMOID_LINEAR
    steepness: float = 10.0
    slope: float = 0.02
    curvature_exp: float = 0.0
    clamp: bool = False

    def __post_init__(self):
        if self.kind not in _CURVE_KINDS:
            raise ValueError(f"unknown benefit curve {self.kind!r}; expected one of {_CURVE_KINDS}")
        if self.kind == SIGMOID_LINEAR:
            if not self.steepness > 0:
                raise ValueError("steepness must be positive")
            if not self.slope >= 0:
                raise ValueError("slope must be non-negative")
        if not np.isfinite(self.curvature_exp):
            raise ValueError("curvature_exp must be finite")

    @classmethod
    def sigmoid_linear(cls, steepness=10.0, slope=0.02):
        return cls(SIGMOID_LINEAR, steepness=steepness, slope=slope)

    @classmethod
    def power(cls, curvature_exp=0.0, clamp=False):
        return cls(POWER_CURVATURE, curvature_exp=curvature_exp, clamp=clamp)

    @classmethod
    def linear(cls):
        return cls(LINEAR)

    def replace(self, **changes) -> "BenefitCurve":
        return replace(self, **changes)

    def __call__(self, payoff, theta, n):
        """Evaluate the curve for accumulated benefit ``payoff`` (array-like)."""
        payoff = np.asarray(payoff, dtype=float)
        if self.kind == SIGMOID_LINEAR:
            x = self.steepness * (payoff + n * theta) / n
            return expit(x) * (1.0 + self.slope * payoff)
        if self.kind == POWER_CURVATURE:
            arg = (payoff + n * theta) / n
            if np.any(arg < 0):
                if not self.clamp:
                    raise DomainError(
                        "power-curvature benefit curve is undefined for negative "
                        f"argument (theta={theta!r})"
                    )
                arg = np.maximum(arg, 0.0)
            return arg ** (10.0 ** self.curvature_exp)
        return payoff + 0.0 * theta


def tallies(n):
    """All valid tallies for ``n`` interactions, ``k`` outermost, ``l_out`` innermost.

    Returns an ``(M, 3)`` integer array.
    """
    rows = [
        (k, l_in, l_out)
        for k in range(n + 1)
        for l_in in range(k + 1)
        for l_out in range(n - k + 1)
    ]
    return np.array(rows, dtype=np.int64)


def _binom_pmf_scalar(x, size, prob):
    # 0**0 == 1 in Python, so degenerate probabilities are exact.
    if size <= PASCAL_MAX_N:
        return _PASCAL[size, x] * prob**x * (1.0 - prob) ** (size - x)
    return float(binom.pmf(x, size, prob))


def outcome_probability(tally, p, params: InteractionParams, q_out_eff=None) -> float:
    """Probability of ``tally`` for a player with strategy ``p``.

    ``q_out_eff`` defaults to ``params.q_out`` (fixed risk).  In the social
    model it is ``q_out * (1 - p_resident)``.
    """
    n = params.n
    k, l_in, l_out = OutcomeTally(*tally).validate(n)
    check_strategy(p)
    q_eff = params.q_out if q_out_eff is None else q_out_eff
    _check_probability(q_eff, "q_out_eff")
    return (
        _binom_pmf_scalar(k, n, p)
        * _binom_pmf_scalar(l_in, k, params.q_in)
        * _binom_pmf_scalar(l_out, n - k, q_eff)
    )


def _weights(size, prob):
    """``Bin(x; size, prob)`` for ``x = 0..size``; ``prob`` broadcasts on leading axes."""
    prob = np.asarray(prob, dtype=float)[..., None]
    x = np.arange(size + 1)
    if size <= PASCAL_MAX_N:
        with np.errstate(invalid="ignore"):
            return _PASCAL[size, : size + 1] * prob**x * (1.0 - prob) ** (size - x)
    return binom.pmf(x, size, prob)


def _success_matrix(n, q):
    """``M[..., k, l] = Bin(l; k, q)`` for ``0 <= l <= k <= n`` and 0 elsewhere."""
    q = np.asarray(q, dtype=float)[..., None, None]
    k = np.arange(n + 1)[:, None]
    l = np.arange(n + 1)[None, :]
    valid = l <= k
    if n <= PASCAL_MAX_N:
        expo = np.where(valid, k - l, 0)
        m = _PASCAL[: n + 1, : n + 1] * q**l * (1.0 - q) ** expo
    else:
        m = binom.pmf(l, k, q)
    return np.where(valid, m, 0.0)


def outcome_distribution(p, params: InteractionParams, q_out_eff=None):
    """Probabilities of every tally, in :func:`tallies` order.

    Returns ``(tally_array, probabilities)``.
    """
    n = params.n
    check_strategy(p)
    q_eff = params.q_out if q_out_eff is None else q_out_eff
    _check_probability(q_eff, "q_out_eff")
    t = tallies(n)
    k, l_in, l_out = t.T
    wk = _weights(n, p)[k]
    mi = _success_matrix(n, params.q_in)[k, l_in]
    mo = _success_matrix(n, q_eff)[n - k, l_out]
    return t, wk * mi * mo


def expected_linear_benefit(p, params: InteractionParams):
    """Expected accumulated benefit, linear in ``p``."""
    p = check_strategy(p)
    out = params.n * params.b_in * params.q_in * p + params.n * params.b_out * params.q_out * (1 - p)
    return float(out) if out.ndim == 0 else out


def fitness_kernel(tally, theta, curve: BenefitCurve, params: InteractionParams) -> float:
    """Fitness of a single realized tally."""
    t = OutcomeTally(*tally).validate(params.n)
    return float(curve(t.payoff(params), theta, params.n))


def kernel_matrix(theta, curve: BenefitCurve, params: InteractionParams):
    """``K[l_in, l_out]`` for all success counts up to ``n``.

    Entries with ``l_in + l_out > n`` are unreachable and only ever receive
    zero weight.
    """
    n = params.n
    l_in = np.arange(n + 1)[:, None]
    l_out = np.arange(n + 1)[None, :]
    payoff = l_in * params.b_in + l_out * params.b_out
    if curve.kind == POWER_CURVATURE and not curve.clamp:
        # Only reachable tallies matter for the domain check; (0, 0) is the minimum.
        reachable = (l_in + l_out) <= n
        if np.any((payoff[reachable] + n * theta) < 0):
            raise DomainError(
                f"power-curvature benefit curve is undefined for theta={theta!r} "
                "(negative argument for some reachable tally)"
            )
        payoff = np.where(reachable, payoff, payoff.max())
    return np.asarray(curve(payoff, theta, n), dtype=float)


def slice_fitness(theta, curve: BenefitCurve, params: InteractionParams, q_out_eff=None):
    """Expected fitness conditional on ``k`` in-group attempts, for ``k = 0..n``.

    ``q_out_eff`` may be an array; the result then has shape
    ``q_out_eff.shape + (n + 1,)``.
    """
    n = params.n
    q_eff = params.q_out if q_out_eff is None else q_out_eff
    q_eff = np.asarray(q_eff, dtype=float)
    if np.any(q_eff < 0) or np.any(q_eff > 1):
        raise ValueError("q_out_eff must lie in [0, 1]")
    kmat = kernel_matrix(theta, curve, params)
    mi = _success_matrix(n, params.q_in)
    # Row k of the reversed matrix holds Bin(l_out; n - k, q_eff).
    mo = _success_matrix(n, q_eff)[..., ::-1, :]
    return np.einsum("kl,lm,...km->...k", mi, kmat, mo)


def strategy_weights(p, n):
    """``Bin(k; n, p)`` for ``k = 0..n``; broadcasts over ``p``."""
    return _weights(n, check_strategy(p))


def strategy_weights_derivative(p, n):
    """Derivative of :func:`strategy_weights` with respect to ``p``.

    Uses ``d/dp Bin(k; n, p) = n [Bin(k-1; n-1, p) - Bin(k; n-1, p)]``, which
    stays finite at ``p = 0`` and ``p = 1``.
    """
    p = check_strategy(p)
    lower = _weights(n - 1, p)
    zero = np.zeros(lower.shape[:-1] + (1,))
    return n * (np.concatenate([zero, lower], axis=-1) - np.concatenate([lower, zero], axis=-1))


def _contract(weights, g):
    out = np.sum(weights * g, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def expected_fitness_given(p, slices):
    """Expected fitness of strategy ``p`` given precomputed :func:`slice_fitness` values."""
    slices = np.asarray(slices)
    return _contract(strategy_weights(p, slices.shape[-1] - 1), slices)


def expected_fitness_fixed(p, theta, curve: BenefitCurve, params: InteractionParams):
    """Expected fitness of strategy ``p`` when out-group risk is fixed.

    ``p`` may be a scalar or an array of strategies.
    """
    return expected_fitness_given(p, slice_fitness(theta, curve, params))


def expected_fitness_social(p_mutant, p_resident, theta, curve: BenefitCurve, params: InteractionParams):
    """Expected fitness of ``p_mutant`` among residents playing ``p_resident``.

    Out-group interactions succeed with probability ``q_out * (1 - p_resident)``.
    ``p_mutant`` and ``p_resident`` broadcast against each other.
    """
    p_resident = check_strategy(p_resident, "p_resident")
    slices = slice_fitness(theta, curve, params, params.q_out * (1.0 - p_resident))
    return _contract(strategy_weights(p_mutant, params.n), slices)
