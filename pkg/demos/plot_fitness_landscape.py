"""
Expected fitness and the fitness-maximizing strategy
=====================================================

Expected fitness is an exact sum over every outcome of ``n`` interactions.
Here we look at how it depends on the strategy ``p`` in a few environments,
then map the best strategy over environment and out-group success rate.
"""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from polarization import BenefitCurve, InteractionParams, expected_fitness_fixed, optimal_strategy
from polarization.equilibrium import sweep

curve = BenefitCurve.sigmoid_linear(steepness=10, slope=0.02)
params = InteractionParams()  # B_i=0.5, B_o=1, q_i=1, q_o=0.6, n=5

# %%
# Fitness as a function of strategy.  In good and bad environments the
# out-group-heavy strategy ``p = 0`` wins; near the threshold the safe
# in-group strategy ``p = 1`` does.
p = np.linspace(0, 1, 201)
fig, ax = plt.subplots()
for theta in (-0.8, -0.3, 0.0, 0.9):
    w = expected_fitness_fixed(p, theta, curve, params)
    ax.plot(p, w / w.max(), label=f"theta = {theta}")
    print(f"theta={theta:+.1f}  best p = {optimal_strategy(theta, curve, params):.3f}")
ax.set_xlabel("p (probability of an in-group interaction)")
ax.set_ylabel("relative expected fitness")
ax.legend()
fig.savefig("fitness_landscape.png", dpi=120)

# %%
# The fitness-maximizing strategy over a coarse (theta, q_o) grid.  Most
# cells sit at 0 or 1; a thin band of intermediate optima appears where q_o
# is close to 0.5 and the environment is just above the threshold.
thetas = np.linspace(-1, 1, 41)
q_outs = np.linspace(0.5, 1.0, 26)
res = sweep("q_out", q_outs, thetas, "fixed", curve, params)
fig, ax = plt.subplots()
mesh = ax.pcolormesh(thetas, q_outs, res.p_star, cmap="coolwarm_r", vmin=0, vmax=1, shading="auto")
fig.colorbar(mesh, label="p*")
ax.set_xlabel("theta")
ax.set_ylabel("q_o")
fig.savefig("optimum_map.png", dpi=120)
interior = np.sum((res.p_star > 1e-6) & (res.p_star < 1 - 1e-6))
print(f"{interior} of {res.p_star.size} cells have an interior optimum")
