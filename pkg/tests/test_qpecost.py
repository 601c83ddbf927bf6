import numpy as np
import pytest

from fermembed.qpecost import MODES, guiding_gate_counts, qpe_cost


class TestQpeCost:
    def test_standard_unit_overlap(self):
        rep = qpe_cost(1.0, 0.01, "standard")
        assert rep.repetitions == 1.0
        assert rep.max_evolution_time == 100.0
        assert rep.total_evolution_time == 100.0

    def test_standard_overlap_scaling_ratio(self):
        a = qpe_cost(0.5, 0.01, "standard")
        b = qpe_cost(1.0, 0.01, "standard")
        assert a.repetitions / b.repetitions == 4.0

    def test_high_overlap_worked_example(self):
        rep = qpe_cost(0.9, 0.001, "high-overlap")
        assert abs(rep.max_evolution_time - 190.0) < 1e-9
        assert abs(rep.total_evolution_time - 190000.0) < 1e-6

    def test_amplified(self):
        rep = qpe_cost(0.5, 0.1, "amplified")
        assert rep.repetitions == 2.0
        assert rep.max_evolution_time == 20.0
        assert rep.total_evolution_time == 20.0

    def test_single_ancilla(self):
        rep = qpe_cost(0.5, 0.1, "single-ancilla")
        assert rep.repetitions == 16.0
        assert rep.max_evolution_time == 10.0
        assert rep.total_evolution_time == 160.0

    def test_domains(self):
        with pytest.raises(ValueError):
            qpe_cost(0.0, 0.1)
        with pytest.raises(ValueError):
            qpe_cost(1.5, 0.1)
        with pytest.raises(ValueError):
            qpe_cost(0.9, 0.0)
        with pytest.raises(ValueError):
            qpe_cost(0.5, 0.1, "high-overlap")  # eta^2 <= 1/2
        with pytest.raises(ValueError):
            qpe_cost(0.9, 0.1, "nonsense")

    def test_fields_nonnegative_and_disclaimer(self):
        for mode in MODES:
            eta = 0.95 if mode == "high-overlap" else 0.5
            rep = qpe_cost(eta, 0.01, mode)
            assert rep.repetitions >= 0
            assert rep.max_evolution_time >= 0
            assert rep.total_evolution_time >= 0
            assert "constants" in rep.assumptions

    def test_monotonicity_grid(self):
        etas = np.linspace(0.75, 1.0, 10)  # valid for every mode
        epsilons = np.logspace(-4, -1, 10)
        for mode in MODES:
            for eps in epsilons:
                reports = [qpe_cost(float(e), float(eps), mode) for e in etas]
                for field in ("repetitions", "max_evolution_time",
                              "total_evolution_time"):
                    vals = [getattr(r, field) for r in reports]
                    assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:])), \
                        (mode, field, "eta")
            for eta in etas:
                reports = [qpe_cost(float(eta), float(e), mode) for e in epsilons]
                for field in ("max_evolution_time", "total_evolution_time"):
                    vals = [getattr(r, field) for r in reports]
                    # eps ascending means eps^-1 descending: costs nonincreasing
                    assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:])), \
                        (mode, field, "eps")

    def test_high_overlap_depth_never_exceeds_standard(self):
        for eta in np.linspace(0.72, 1.0, 10):
            for eps in np.logspace(-4, -1, 10):
                ho = qpe_cost(float(eta), float(eps), "high-overlap")
                std = qpe_cost(float(eta), float(eps), "standard")
                assert ho.max_evolution_time <= std.max_evolution_time + 1e-12

    def test_report_serializes(self):
        d = qpe_cost(0.9, 0.01, "standard").to_dict()
        assert set(d) == {"mode", "eta", "eps", "repetitions",
                          "max_evolution_time", "total_evolution_time",
                          "assumptions"}


class TestGateCounts:
    def test_givens(self):
        rep = guiding_gate_counts("givens", n_modes=4, n_electrons=2)
        assert rep.two_qubit == 4.0

    def test_sum_of_slater(self):
        rep = guiding_gate_counts("sum-of-slater", n_modes=10, n_terms=8)
        assert rep.two_qubit == 80.0
        assert rep.toffoli == 24.0

    def test_sum_of_slater_single_term_no_toffoli(self):
        rep = guiding_gate_counts("sum-of-slater", n_modes=10, n_terms=1)
        assert rep.toffoli == 0.0

    def test_bounded_excitation(self):
        rep = guiding_gate_counts("bounded-excitation", n_terms=8, max_excitation=3)
        assert rep.two_qubit == 24.0

    def test_mps(self):
        rep = guiding_gate_counts("mps", n_modes=10, bond_dim=2)
        assert rep.two_qubit == 40.0
        assert rep.toffoli == 40.0

    def test_missing_parameter(self):
        with pytest.raises(ValueError, match="n_terms"):
            guiding_gate_counts("sum-of-slater", n_modes=10)
        with pytest.raises(ValueError, match="unknown"):
            guiding_gate_counts("teleport", n_modes=4)
