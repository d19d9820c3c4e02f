"""
Parameter sweeps
================

The fitness-maximizing strategy across environments as one model parameter
varies.  The same sweeps are available from the command line, e.g.::

    polarization optimize --config sweep_n_low_gain --out out/n_low_gain
"""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from polarization import BenefitCurve, InteractionParams
from polarization.equilibrium import sweep

params = InteractionParams()
thetas = np.linspace(-1, 1, 41)
panels = [
    ("q_in", np.linspace(0.5, 1, 21), BenefitCurve.sigmoid_linear(2, 0.01), params),
    ("n", np.arange(1, 41), BenefitCurve.sigmoid_linear(2, 0.01), params),
    ("steepness", np.linspace(1, 50, 25), BenefitCurve.sigmoid_linear(2, 0.01), params.replace(q_out=0.51)),
    ("curvature_exp", np.linspace(-1, 1, 21), BenefitCurve.power(0.0), params.replace(q_out=0.51)),
]
fig, axes = plt.subplots(2, 2, figsize=(9, 7))
for ax, (name, values, curve, prm) in zip(axes.flat, panels):
    res = sweep(name, values, thetas, "fixed", curve, prm)
    ax.pcolormesh(thetas, values, res.p_star, cmap="coolwarm_r", vmin=0, vmax=1, shading="auto")
    ax.set_xlabel("theta")
    ax.set_ylabel(name)
    frac = np.mean(res.p_star > 0.5)
    print(f"{name:14s} share of cells favouring polarization: {frac:.2f}"
          + (f"  ({res.clamped.sum()} clamped cells)" if res.clamped.any() else ""))
fig.tight_layout()
fig.savefig("parameter_sweeps.png", dpi=120)
