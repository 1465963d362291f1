"""Evaluating a parametrised circuit at discrete angles.

A template is a stack of input-dependent Clifford layers interleaved with
Pauli rotations. At angles in {0, pi/2, pi, 3pi/2} the Heisenberg-picture
observable stays a signed Pauli sum, so ``f`` and its gradient are exact.
"""

# %%
import numpy as np

from qntk.circuit import evaluate_model, gradient
from qntk.oracle import random_template, statevector_gradient, statevector_model

rng = np.random.default_rng(8)
template = random_template(rng, n=4, L=6, m=3, input_bits=3)
x = "101"
theta = rng.integers(0, 4, size=template.L)
print("angles (units of pi/2):", theta)

# %% Stabilizer value against the dense statevector
f = evaluate_model(template, x, theta)
dense = statevector_model(template, x, theta * np.pi / 2)
print(f"f = {f:+.6f}, dense = {dense:+.6f}")

# %% Parameter-shift gradient, also exact at discrete angles (often sparse)
g = gradient(template, x, theta)
print("gradient:", np.round(g, 6))
print("max error vs dense:", np.abs(g - statevector_gradient(template, x, theta * np.pi / 2)).max())
