"""
Selection gradients and singular strategies
===========================================

Under adaptive dynamics a monomorphic population at ``p`` drifts in the
direction of the selection gradient.  The social-risk model, where out-group
success also needs the partner's willingness ``1 - p``, has a gradient that
changes sign inside strategy space.
"""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from polarization import BenefitCurve, InteractionParams, find_singular_points, gradient_field

curve = BenefitCurve.sigmoid_linear(10, 0.02)
params = InteractionParams()

# %%
# Sign of the gradient over (theta, p): blue pushes toward polarization.
thetas = np.linspace(-1, 1, 121)
ps = np.linspace(0, 1, 121)
field = gradient_field(thetas, ps, "social", curve, params)
fig, ax = plt.subplots()
ax.pcolormesh(thetas, ps, np.sign(field.value.T), cmap="coolwarm_r", shading="auto")
ax.set_xlabel("theta")
ax.set_ylabel("resident p")
fig.savefig("social_gradient_field.png", dpi=120)

# %%
# Singular points and their stability for a few environments.
for theta in (1.0, -0.22, -0.8):
    pts = find_singular_points(theta, "social", curve, params)
    desc = ", ".join(f"{pt.p_star:.3f}{'*' if pt.attracting else ''}" for pt in pts)
    print(f"theta={theta:+.2f}: {desc}   (* attracting)")

# %%
# In a saturated environment fitness is linear in payoff and the interior
# root sits exactly at 1 - q_i B_i / (q_o B_o).
pts = find_singular_points(5.0, "social", curve, params)
print("saturated interior root:", [round(pt.p_star, 6) for pt in pts if pt.kind == "interior"],
      "expected", round(1 - 0.5 / 0.6, 6))
