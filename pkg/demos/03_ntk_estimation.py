"""Monte-Carlo NTK estimation.

Averaging gradient inner products over uniformly random discrete angles gives
an unbiased estimate of the NTK. The sample-size bound says how many draws
guarantee a given accuracy with a given confidence.
"""

# %%
import numpy as np

from qntk.estimator import estimate_gram, full_enumeration, sample_parameters, sample_size_ntk
from qntk.oracle import exact_ntk_quadrature, random_template

rng = np.random.default_rng(11)
template = random_template(rng, n=3, L=4, m=2, input_bits=2)
x, x2 = "01", "10"

# %% Ground truth from Gauss-Legendre quadrature on continuous angles
exact = exact_ntk_quadrature(template, x, x2, points=8)
print(f"exact K(x, x') = {exact:.6f}")

# %% Averaging over all 4^L discrete angles is already exact
print("enumeration:", estimate_gram(template, [x, x2], full_enumeration(template.L)).matrix[0, 1])

# %% Sampling with a guaranteed accuracy
N = sample_size_ntk(epsilon=0.1, delta=0.05, L=template.L, m=template.m)
est = estimate_gram(template, [x, x2], sample_parameters(template.L, N, seed=0))
print(f"N = {N}, estimate = {est.matrix[0, 1]:.6f} +- {est.std_errors[0, 1]:.6f}")

# %% Results depend only on the seed, not on the number of workers
again = estimate_gram(template, [x, x2], sample_parameters(template.L, N, seed=0), workers=2)
print("identical with 2 workers:", np.array_equal(est.matrix, again.matrix))
