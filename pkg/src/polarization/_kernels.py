"""Compiled inner loops of the copying process.

Every random decision of one copying event consumes a fixed column of a row
of uniforms, so a trajectory is a pure function of the uniform stream.
Column layout of an event row (``n`` interactions per fitness evaluation)::

    0               focal index
    1               observed index
    2 .. 2+3n       focal payoff draws (choice, success, partner) x n
    2+3n .. 2+6n    observed payoff draws
    2+6n            copy decision
    3+6n            mutation occurs
    4+6n            mutation target
    5+6n            mutation value / direction
"""
import math

from numba import njit

CURVE_SIGMOID_LINEAR = 0
CURVE_POWER = 1
CURVE_LINEAR = 2

SCHEDULE_CONSTANT = 0
SCHEDULE_SINUSOID = 1

KERNEL_GLOBAL = 0
KERNEL_LOCAL = 1

GROUPS_FIXED = 0
GROUPS_RESHUFFLE = 1


def row_width(n):
    return 6 + 6 * n


@njit(cache=True)
def logistic(x):
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


@njit(cache=True)
def curve_value(payoff, theta, n, curve_kind, steepness, slope, exponent):
    if curve_kind == CURVE_SIGMOID_LINEAR:
        return logistic(steepness * (payoff + n * theta) / n) * (1.0 + slope * payoff)
    if curve_kind == CURVE_POWER:
        arg = (payoff + n * theta) / n
        if arg < 0.0:
            arg = 0.0
        return arg ** exponent
    return payoff


@njit(cache=True)
def environment(t, kind, theta0, amplitude, period, phase):
    if kind == SCHEDULE_CONSTANT:
        return theta0
    return amplitude * math.cos(2.0 * math.pi * t / period + phase)


@njit(cache=True)
def pick_partner(i, u, group_of, order, starts, counts, group_mode):
    n_total = group_of.shape[0]
    if group_mode == GROUPS_RESHUFFLE:
        j = int(u * (n_total - 1))
        if j >= n_total - 1:
            j = n_total - 2
        if j >= i:
            j += 1
        return j
    other = 1 - group_of[i]
    c = counts[other]
    j = int(u * c)
    if j >= c:
        j = c - 1
    return order[starts[other] + j]


@njit(cache=True)
def realized_fitness(i, strategies, group_of, order, starts, counts, group_mode, social,
                     theta, n, q_in, q_out, b_in, b_out,
                     curve_kind, steepness, slope, exponent, u, offset):
    p = strategies[i]
    l_in = 0
    l_out = 0
    for j in range(n):
        if u[offset + j] < p:
            if u[offset + n + j] < q_in:
                l_in += 1
        else:
            q = q_out
            if social:
                partner = pick_partner(i, u[offset + 2 * n + j], group_of, order, starts, counts,
                                       group_mode)
                q = q_out * (1.0 - strategies[partner])
            if u[offset + n + j] < q:
                l_out += 1
    payoff = l_in * b_in + l_out * b_out
    return curve_value(payoff, theta, n, curve_kind, steepness, slope, exponent)


@njit(cache=True)
def expected_fitness(p, q_eff, theta, n, q_in, b_in, b_out, curve_kind, steepness, slope,
                     exponent, pascal):
    total = 0.0
    for k in range(n + 1):
        wk = pascal[n, k] * p ** k * (1.0 - p) ** (n - k)
        if wk == 0.0:
            continue
        for l_in in range(k + 1):
            wi = pascal[k, l_in] * q_in ** l_in * (1.0 - q_in) ** (k - l_in)
            if wi == 0.0:
                continue
            for l_out in range(n - k + 1):
                wo = pascal[n - k, l_out] * q_eff ** l_out * (1.0 - q_eff) ** (n - k - l_out)
                payoff = l_in * b_in + l_out * b_out
                total += wk * wi * wo * curve_value(payoff, theta, n, curve_kind, steepness,
                                                    slope, exponent)
    return total


@njit(cache=True)
def mean_other_strategy(i, strategies, group_of, group_mode):
    s = 0.0
    c = 0
    for j in range(strategies.shape[0]):
        if j == i:
            continue
        if group_mode == GROUPS_FIXED and group_of[j] == group_of[i]:
            continue
        s += strategies[j]
        c += 1
    return s / c


@njit(cache=True)
def fitness_of(i, strategies, group_of, order, starts, counts, group_mode, social, expected,
               theta, n, q_in, q_out, b_in, b_out, curve_kind, steepness, slope, exponent,
               pascal, u, offset):
    if expected:
        q = q_out
        if social:
            q = q_out * (1.0 - mean_other_strategy(i, strategies, group_of, group_mode))
        return expected_fitness(strategies[i], q, theta, n, q_in, b_in, b_out, curve_kind,
                                steepness, slope, exponent, pascal)
    return realized_fitness(i, strategies, group_of, order, starts, counts, group_mode, social,
                            theta, n, q_in, q_out, b_in, b_out, curve_kind, steepness, slope,
                            exponent, u, offset)


@njit(cache=True)
def copying_event(t, strategies, group_of, order, starts, counts, group_mode, social, expected,
                  sched_kind, theta0, amplitude, period, phase,
                  n, q_in, q_out, b_in, b_out, curve_kind, steepness, slope, exponent, pascal,
                  sigma, mu, kernel, delta, u):
    size = strategies.shape[0]
    theta = environment(t, sched_kind, theta0, amplitude, period, phase)
    focal = int(u[0] * size)
    if focal >= size:
        focal = size - 1
    observed = int(u[1] * (size - 1))
    if observed >= size - 1:
        observed = size - 2
    if observed >= focal:
        observed += 1
    w_focal = fitness_of(focal, strategies, group_of, order, starts, counts, group_mode, social,
                         expected, theta, n, q_in, q_out, b_in, b_out, curve_kind, steepness,
                         slope, exponent, pascal, u, 2)
    w_obs = fitness_of(observed, strategies, group_of, order, starts, counts, group_mode, social,
                       expected, theta, n, q_in, q_out, b_in, b_out, curve_kind, steepness,
                       slope, exponent, pascal, u, 2 + 3 * n)
    if u[2 + 6 * n] < logistic(sigma * (w_obs - w_focal)):
        strategies[focal] = strategies[observed]
    if u[3 + 6 * n] < mu:
        target = int(u[4 + 6 * n] * size)
        if target >= size:
            target = size - 1
        v = u[5 + 6 * n]
        if kernel == KERNEL_GLOBAL:
            strategies[target] = v
        else:
            if v < 0.5:
                strategies[target] = min(1.0, strategies[target] + delta)
            else:
                strategies[target] = max(0.0, strategies[target] - delta)


@njit(cache=True, nogil=True)
def run_block(t0, block, strategies, group_of, order, starts, counts, group_mode, social,
              expected, sched_kind, theta0, amplitude, period, phase,
              n, q_in, q_out, b_in, b_out, curve_kind, steepness, slope, exponent, pascal,
              sigma, mu, kernel, delta, record_at, means, next_record):
    """Run ``block.shape[0]`` events starting at event ``t0``.

    ``record_at`` holds the completed-event counts at which the population
    mean is written into ``means``; returns the updated record cursor.
    """
    for r in range(block.shape[0]):
        copying_event(t0 + r, strategies, group_of, order, starts, counts, group_mode, social,
                      expected, sched_kind, theta0, amplitude, period, phase,
                      n, q_in, q_out, b_in, b_out, curve_kind, steepness, slope, exponent,
                      pascal, sigma, mu, kernel, delta, block[r])
        done = t0 + r + 1
        while next_record < record_at.shape[0] and record_at[next_record] == done:
            means[next_record] = strategies.mean()
            next_record += 1
    return next_record
