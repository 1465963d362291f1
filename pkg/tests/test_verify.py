
from qntk.bench import fit_exponent, time_evaluation
from qntk.verify import check_algebra, check_cross_engine, format_table, phase_fault, run_verification


def test_quick_suite_passes():
    results = run_verification(quick=True)
    assert all(r.passed for r in results), format_table(results)
    assert {r.name for r in results} >= {"stabilizer vs statevector", "enumeration vs quadrature (P=8)"}


def test_fault_is_detected_and_contained():
    results = run_verification(fault=True, quick=True)
    failed = {r.name for r in results if not r.passed}
    assert "stabilizer vs statevector" in failed
    # the hook is gone afterwards
    assert check_cross_engine(templates=50).passed


def test_phase_fault_context():
    from qntk import clifford
    from qntk.pauli import from_pauli_string
    P, Q = from_pauli_string("X"), from_pauli_string("Z")
    good = clifford.rotation_conjugate(P, 1, Q)
    with phase_fault():
        assert clifford.rotation_conjugate(P, 1, Q) == -good
    assert clifford.rotation_conjugate(P, 1, Q) == good


def test_algebra_small():
    assert all(r.passed for r in check_algebra(cases=300))


def test_fit_exponent():
    assert abs(fit_exponent([1, 2, 4, 8], [3, 12, 48, 192]) - 2) < 1e-12


def test_time_evaluation_positive():
    assert time_evaluation(4, 2, 1, rows=64, repeats=1) > 0
