"""Pauli algebra and Clifford conjugation.

Pauli operators are stored as bit vectors plus two phase bits, so products,
commutation tests and Clifford conjugation are exact integer operations.
"""

# %% Products keep track of the phase exactly
from qntk.pauli import commutes, expectation_zero_state, from_pauli_string, to_string
from qntk import clifford

X = from_pauli_string("XI")
Z = from_pauli_string("ZI")
print("X*Z =", to_string(X * Z))  # -iY on the first qubit
print("Z*X =", to_string(Z * X))
print("X and Z commute:", commutes(X, Z))

# %% A Clifford tableau stores the image of every generator
t = clifford.compose(clifford.cnot(2, 0, 1), clifford.hadamard(2, 0))  # H then CNOT
for s in ("XI", "ZI", "IX", "IZ"):
    print(s, "->", to_string(clifford.conjugate(t, from_pauli_string(s))))

# %% Rotations by multiples of pi/2 map Paulis to Paulis
P, Q = from_pauli_string("Y"), from_pauli_string("Z")
for k in range(4):
    print(f"theta = {k} pi/2:", to_string(clifford.rotation_conjugate(P, k, Q)))

# %% Expectations on |0...0> are 0 or +-1
for s in ("ZZ", "XZ", "IZ"):
    print(s, expectation_zero_state(from_pauli_string(s)))
