import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qntk.circuit import (
    CircuitTemplate,
    Gate,
    Layer,
    Observable,
    evaluate_batch,
    evaluate_model,
    gradient,
    gradient_batch,
    load_template,
    shifted_thetas,
    template_from_dict,
    template_to_dict,
)
from qntk.oracle import random_input, random_template, statevector_model
from qntk.pauli import from_pauli_string


def cos_template():
    return CircuitTemplate(
        1, (Layer(), Layer()), (from_pauli_string("Y"),), Observable.from_strings([(1.0, "Z")]), 1
    )


def test_cos_circuit_values():
    t = cos_template()
    assert [evaluate_model(t, "0", [k]) for k in range(4)] == [1, 0, -1, 0]
    assert [gradient(t, "0", [k])[0] for k in range(4)] == [0, -1, 0, 1]


def test_identity_observable_is_one():
    t = CircuitTemplate(2, (Layer(), Layer()), (from_pauli_string("XY"),), Observable.from_strings([(1.0, "II")]))
    assert all(evaluate_model(t, "", [k]) == 1 for k in range(4))


def test_bit_guarded_gate_encodes_input():
    # X on qubit 0 iff bit 0 is set; observable Z reads it back
    layer = Layer((Gate("x", (0,), if_bit=0),))
    t = CircuitTemplate(1, (layer, Layer()), (from_pauli_string("Z"),), Observable.from_strings([(1.0, "Z")]), 1)
    assert evaluate_model(t, "0", [1]) == 1
    assert evaluate_model(t, "1", [1]) == -1


def test_if_input_gate():
    layer = Layer((Gate("x", (0,), if_input="10"),))
    t = CircuitTemplate(1, (layer, Layer()), (from_pauli_string("Z"),), Observable.from_strings([(1.0, "Z")]), 2)
    assert [evaluate_model(t, x, [0]) for x in ("00", "01", "10", "11")] == [1, 1, -1, 1]


class TestValidation:
    def test_layer_count(self):
        with pytest.raises(ValueError, match="L\\+1"):
            CircuitTemplate(1, (Layer(),), (from_pauli_string("Z"),), Observable.from_strings([(1, "Z")]))

    def test_non_hermitian_generator(self):
        with pytest.raises(ValueError, match="hermitian"):
            CircuitTemplate(1, (Layer(), Layer()), (from_pauli_string("iZ"),), Observable.from_strings([(1, "Z")]))

    def test_coefficient_range(self):
        with pytest.raises(ValueError):
            Observable.from_strings([(1.5, "Z")])
        assert Observable.from_strings([(1.5, "Z")], strict=False).l1_norm == 1.5

    def test_qubit_range(self):
        with pytest.raises(ValueError):
            CircuitTemplate(1, (Layer((Gate("h", (1,)),)), Layer()), (from_pauli_string("Z"),),
                            Observable.from_strings([(1, "Z")]))

    def test_input_checks(self):
        t = cos_template()
        with pytest.raises(ValueError):
            evaluate_model(t, "01", [0])
        with pytest.raises(ValueError):
            evaluate_model(t, "2", [0])
        with pytest.raises(ValueError):
            evaluate_model(t, "0", [4])
        with pytest.raises(ValueError):
            evaluate_model(t, "0", [0, 1])

    def test_unknown_gate(self):
        with pytest.raises(ValueError):
            Gate("t", (0,))


class TestBatched:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**6))
    def test_matches_scalar(self, seed):
        rng = np.random.default_rng(seed)
        t = random_template(rng, int(rng.integers(1, 5)), int(rng.integers(1, 5)), int(rng.integers(1, 4)), input_bits=3)
        x = random_input(rng, t)
        thetas = rng.integers(0, 4, size=(12, t.L)).astype(np.uint8)
        f = evaluate_batch(t, x, thetas)
        g = gradient_batch(t, x, thetas)
        for row in range(12):
            assert f[row] == evaluate_model(t, x, thetas[row])
            np.testing.assert_array_equal(g[row], gradient(t, x, thetas[row]))

    def test_shifted_layout(self):
        rows = shifted_thetas(np.array([[0, 3]], dtype=np.uint8))
        np.testing.assert_array_equal(rows, [[1, 3], [3, 3], [0, 0], [0, 2]])


class TestSerialisation:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(9)
        t = random_template(rng, 3, 2, 3, input_bits=2)
        path = tmp_path / "c.json"
        path.write_text(json.dumps(template_to_dict(t)))
        assert load_template(path) == t

    def test_shipped_files(self, data_dir):
        t = load_template(data_dir / "cos.json")
        assert evaluate_model(t, "0", [2]) == -1

    def test_tableau_gate(self):
        obj = {
            "n": 1,
            "layers": [[{"gate": "tableau", "images": ["X", "Z"]}], []],
            "generators": ["Z"],
            "observable": [{"coeff": 1.0, "pauli": "X"}],
        }
        t = template_from_dict(obj)
        # the tableau gate is a Hadamard, so <0|H X H|0> = <0|Z|0>
        assert evaluate_model(t, "", [0]) == pytest.approx(statevector_model(t, "", [0.0]))
        assert evaluate_model(t, "", [0]) == 1

    def test_missing_key(self):
        with pytest.raises(ValueError, match="generators"):
            template_from_dict({"n": 1, "layers": [[], []], "observable": []})
