"""
Pairwise invasibility plots
===========================

A rare mutant ``f`` invades resident ``g`` when ``w_f - w_g > 0``.  The sign
pattern across all (mutant, resident) pairs shows which strategies resist
invasion.
"""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from polarization import BenefitCurve, InteractionParams, pip

cases = [
    ("fixed", 1.0, BenefitCurve.sigmoid_linear(10, 0.02), InteractionParams()),
    ("fixed", -0.3, BenefitCurve.sigmoid_linear(10, 0.02), InteractionParams()),
    ("social", -0.22, BenefitCurve.sigmoid_linear(10, 0.02), InteractionParams()),
    ("social", -0.5355, BenefitCurve.sigmoid_linear(100, 0.01), InteractionParams(q_out=0.51)),
]

fig, axes = plt.subplots(1, len(cases), figsize=(4 * len(cases), 4))
for ax, (model, theta, curve, params) in zip(axes, cases):
    grid = pip(theta, model, curve, params, resolution=201)
    ax.imshow(grid.sign, origin="lower", extent=(0, 1, 0, 1), cmap="Greys", vmin=-1, vmax=1)
    ax.set_title(f"{model}, theta={theta}")
    ax.set_xlabel("resident")
    ax.set_ylabel("mutant")
    stable = grid.stable_strategies()
    print(f"{model:6s} theta={theta:+.4f}: stable at",
          [(round(s["p"], 3), "global" if s["globally_uninvadable"] else "local") for s in stable])
fig.tight_layout()
fig.savefig("invasibility.png", dpi=120)
