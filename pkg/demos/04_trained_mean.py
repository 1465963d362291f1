"""Infinite-time trained mean by kernel regression.

With an estimated Gram matrix over the training inputs and estimated kernel
values between each query and the training set, the trained mean is
``k(x, X) K^-1 Y``. Its error shrinks like ``1/sqrt(N)``.
"""

# %%
from pathlib import Path

import numpy as np

from qntk.circuit import load_template
from qntk.estimator import sample_parameters
from qntk.oracle import exact_mu_infinity
from qntk.regression import fit_mu_infinity, load_training_csv

data = Path(__file__).resolve().parent.parent / "tests" / "data"
template = load_template(data / "mu_instance.json")
training = load_training_csv(data / "mu_train.csv")
query = "110"
exact = exact_mu_infinity(template, query, training)
print(f"exact mu = {exact:.6f}")

# %% Estimates at growing sample sizes
for N in (10**2, 10**3, 10**4, 10**5):
    res = fit_mu_infinity(template, training, [query], sample_parameters(template.L, N, seed=1))
    mu, se = res.mu_values[query], res.mu_std_errors[query]
    print(f"N = {N:>6}: mu = {mu:+.5f} +- {se:.5f}  (error {mu - exact:+.1e}, cond {res.condition_number:.2f})")

# %% At the training inputs the trained mean reproduces the labels
res = fit_mu_infinity(template, training, list(training.inputs), sample_parameters(template.L, 4096, seed=2))
print({x: round(v, 12) for x, v in res.mu_values.items()}, "labels:", [float(y) for y in training.labels])
