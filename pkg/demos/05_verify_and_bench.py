"""Oracle cross-checks and scaling measurements.

The verification suite compares the stabilizer engine with dense simulation;
injecting a phase error into the rotation step must make it fail. The
benchmark fits power-law exponents of runtime in n, L, m and N.
"""

# %%
from qntk.bench import run_bench
from qntk.verify import format_table, run_verification

print(format_table(run_verification(quick=True)))

# %% Negative control
results = run_verification(fault=True, quick=True)
print("fault detected:", not all(r.passed for r in results))

# %% Small scaling sweep
rows, exponents = run_bench(
    sweeps={"n": [8, 16, 32], "L": [4, 8, 16], "m": [1, 2, 4], "N": [2048, 4096, 8192]},
    repeats=2,
)
for key, k in exponents.items():
    print(f"time ~ {key}^{k:.2f}")
