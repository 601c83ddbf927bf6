import numpy as np
import pytest

from fermembed import analysis, fock, solver, states
from fermembed.model import (ChemistInteraction, IntegralFormatError,
                             MolecularIntegrals, OligomerCoupling,
                             PhysicistInteraction, RandomEpsilons,
                             RandomInteraction, build_impurity_model,
                             build_oligomer, chemist_from_physicist,
                             random_two_body, read_integrals, spin_double,
                             write_integrals)

from conftest import random_integrals


class TestMolecularIntegrals:
    def test_rejects_non_hermitian_one_body(self):
        h = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(ValueError, match="Hermitian"):
            MolecularIntegrals(0.0, h, np.zeros((2, 2, 2, 2)))

    def test_rejects_asymmetric_two_body(self):
        g = np.zeros((2, 2, 2, 2))
        g[0, 1, 0, 0] = 1.0
        with pytest.raises(ValueError, match="symmetry"):
            MolecularIntegrals(0.0, np.zeros((2, 2)), g)

    def test_random_two_body_has_full_symmetry(self):
        g = random_two_body(3, 0.5, np.random.default_rng(0))
        for perm in ((1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1), (1, 0, 3, 2),
                     (3, 2, 1, 0)):
            np.testing.assert_allclose(g, g.transpose(perm), atol=1e-15)


class TestImpurityBuilder:
    def test_free_model_ground_state_is_fermi_sea(self):
        m = build_impurity_model(6, 2, RandomEpsilons(gap=0.2, n_negative=3),
                                 None, seed=4)
        res = solver.ground_state(m.integrals, 3)
        sea = states.determinant_to_wavefunction(
            states.SlaterDeterminant(m.free_orbitals[:, :3]))
        assert abs(states.overlap(sea, res.state)) > 1.0 - 1e-10
        assert abs(res.energy - np.sum(m.epsilons[:3])) < 1e-10

    def test_free_model_occupations_are_integral(self):
        m = build_impurity_model(6, 2, RandomEpsilons(gap=0.2, n_negative=3),
                                 None, seed=4)
        res = solver.ground_state(m.integrals, 3)
        occ = analysis.one_rdm(res.state).occupations()
        assert np.all(np.minimum(occ, 1.0 - occ) < 1e-12)

    def test_shipped_seed_matches_dense_oracle(self, imp8, imp8_ground):
        dense = solver.dense_spectrum(imp8.integrals, imp8.n_electrons)
        assert abs(imp8_ground.energy - dense[0]) < 1e-10

    def test_gap_respects_excluded_band(self):
        m = build_impurity_model(10, 2, RandomEpsilons(gap=0.2, n_negative=5),
                                 RandomInteraction(0.5), seed=0)
        assert m.omega >= 0.2
        assert np.all(np.abs(m.epsilons) >= 0.2)

    def test_epsilons_outside_range_rejected(self):
        with pytest.raises(ValueError, match=r"\[-1, 1\]"):
            build_impurity_model(4, 2, [0.5, -0.3, 1.4, 0.2], None)

    def test_non_hermitian_impurity_spec_rejected(self):
        w = np.zeros((3, 3, 3, 3))
        w[0, 1, 0, 2] = 1.0  # no Hermitian partner entry
        with pytest.raises(ValueError, match="Hermitian"):
            build_impurity_model(4, 3, [0.5, -0.3, 0.4, 0.2],
                                 PhysicistInteraction(w), hybridization=None)

    def test_aligned_free_part_is_literally_diagonal(self):
        eps = [0.5, -0.3, 0.4, -0.2]
        m = build_impurity_model(4, 2, eps, None, hybridization=None)
        np.testing.assert_array_equal(m.integrals.h, np.diag(eps))
        assert m.aligned

    def test_two_body_support_confined_to_impurity(self, imp8):
        g = imp8.model.integrals.g.copy()
        g[:2, :2, :2, :2] = 0.0
        assert np.max(np.abs(g)) == 0.0

    def test_deterministic_for_fixed_seed(self):
        a = build_impurity_model(6, 2, RandomEpsilons(gap=0.1), RandomInteraction(0.5),
                                 seed=42)
        b = build_impurity_model(6, 2, RandomEpsilons(gap=0.1), RandomInteraction(0.5),
                                 seed=42)
        np.testing.assert_array_equal(a.integrals.h, b.integrals.h)
        np.testing.assert_array_equal(a.integrals.g, b.integrals.g)


class TestPhysicistConversion:
    def test_density_density_round_trip(self):
        # v n0 n1 as an explicit physicists' tensor
        v = 0.7
        w = np.zeros((2, 2, 2, 2))
        w[0, 1, 1, 0] = v  # a0+ a1+ a1 a0
        g = chemist_from_physicist(w)
        m = build_impurity_model(4, 2, [-0.5, 0.4, -0.3, 0.6],
                                 ChemistInteraction(g), hybridization=None)
        basis = fock.enumerate_sector(4, 2)
        mat = solver.hamiltonian_matrix(m.integrals, basis)
        # independent dense build straight from the physicists' terms
        eps = [-0.5, 0.4, -0.3, 0.6]
        ref = np.diag([sum(eps[p] * ((int(b) >> p) & 1) for p in range(4))
                       for b in basis.states]).astype(float)
        for j, bits in enumerate(basis.states):
            if (bits & 0b11) == 0b11:
                ref[j, j] += v
        np.testing.assert_allclose(mat, ref, atol=1e-12)

    def test_general_hermitian_block_matches_dense_oracle(self):
        rng = np.random.default_rng(9)
        m = 3
        w = rng.uniform(-0.5, 0.5, size=(m, m, m, m))
        # Hermitize the canonical pair matrix: w + reversed-conjugate
        w = 0.5 * (w + w.transpose(3, 2, 1, 0))
        eps = [-0.6, 0.5, -0.4, 0.7, 0.3]
        model_p = build_impurity_model(5, 3, eps, PhysicistInteraction(w),
                                       hybridization=None)
        basis = fock.enumerate_sector(5, 2)
        mat = solver.hamiltonian_matrix(model_p.integrals, basis)
        # oracle: apply physicists' terms directly
        ref = np.zeros((basis.dim, basis.dim))
        for j in range(basis.dim):
            state = basis.state(j)
            for p in range(5):
                if (state.bits >> p) & 1:
                    ref[j, j] += eps[p]
            for p in range(m):
                for q in range(m):
                    for r in range(m):
                        for s in range(m):
                            if p == q or r == s or w[p, q, r, s] == 0.0:
                                continue
                            hit = fock.apply_term([p, q], [r, s], state)
                            if hit is not None:
                                out, sign = hit
                                ref[basis.index_of(out.bits), j] += \
                                    w[p, q, r, s] * sign
        np.testing.assert_allclose(mat, ref, atol=1e-10)


class TestOligomer:
    def test_single_copy_identity(self, mono4):
        assert build_oligomer(mono4.integrals, 1) is mono4.integrals

    def test_noninteracting_energy_additivity(self, mono4, mono4_ground):
        dimer = build_oligomer(mono4.integrals, 2)
        res = solver.ground_state(dimer, 2 * mono4.n_electrons)
        assert abs(res.energy - 2 * mono4_ground.energy) < 1e-10

    def test_weak_coupling_lowers_energy(self, mono4, mono4_ground):
        from fermembed import zoo
        dimer = build_oligomer(mono4.integrals, 2, zoo.monomer_coupling(0.05))
        res = solver.ground_state(dimer, 2 * mono4.n_electrons)
        assert res.energy < 2 * mono4_ground.energy

    def test_size_cap(self, imp8):
        with pytest.raises(ValueError, match="63"):
            build_oligomer(imp8.integrals, 8)


class TestSpinDouble:
    def test_shapes_and_symmetry(self, mono4):
        doubled = spin_double(mono4.integrals)
        assert doubled.n_modes == 8
        np.testing.assert_allclose(doubled.h[:4, :4], mono4.integrals.h)
        np.testing.assert_allclose(doubled.h[4:, 4:], mono4.integrals.h)
        assert np.max(np.abs(doubled.h[:4, 4:])) == 0.0

    def test_cross_spin_exchange_vanishes(self, mono4):
        doubled = spin_double(mono4.integrals)
        # a chemists' pair carries one spin: no (alpha beta | ..) entries
        assert np.max(np.abs(doubled.g[:4, 4:, :, :])) == 0.0
        assert np.max(np.abs(doubled.g[4:, :4, :, :])) == 0.0


class TestIntegralFile:
    def test_round_trip_value_exact(self, tmp_path):
        integrals = random_integrals(6, 21, core_energy=0.625)
        path = tmp_path / "model.ints"
        write_integrals(integrals, path, n_electrons=3)
        parsed = read_integrals(path)
        assert parsed.n_electrons == 3
        assert parsed.duplicates == 0
        assert parsed.integrals.core_energy == integrals.core_energy
        np.testing.assert_array_equal(parsed.integrals.h, integrals.h)
        np.testing.assert_array_equal(parsed.integrals.g, integrals.g)

    def test_core_energy_only(self, tmp_path):
        path = tmp_path / "core.ints"
        path.write_text("NORB=3 NELEC=1\n0 0 0 0 1.5\n")
        parsed = read_integrals(path)
        assert parsed.integrals.core_energy == 1.5
        assert np.max(np.abs(parsed.integrals.h)) == 0.0
        assert np.max(np.abs(parsed.integrals.g)) == 0.0

    def test_duplicates_last_wins_with_count(self, tmp_path):
        path = tmp_path / "dup.ints"
        path.write_text("NORB=2 NELEC=1\n"
                        "1 2 0 0 0.25\n"
                        "2 1 0 0 0.5   # same orbit, wins\n"
                        "1 1 1 1 0.125\n"
                        "1 1 1 1 0.375\n")
        parsed = read_integrals(path)
        assert parsed.duplicates == 2
        assert parsed.integrals.h[0, 1] == 0.5
        assert parsed.integrals.g[0, 0, 0, 0] == 0.375
        assert len(parsed.warnings) == 2

    def test_comments_and_blank_lines(self, tmp_path):
        path = tmp_path / "c.ints"
        path.write_text("# header comment\nNORB=2 NELEC=2\n\n1 1 0 0 -0.5 # inline\n")
        parsed = read_integrals(path)
        assert parsed.integrals.h[0, 0] == -0.5

    def test_missing_header(self, tmp_path):
        path = tmp_path / "bad.ints"
        path.write_text("0 0 0 0 1.5\n")
        with pytest.raises(IntegralFormatError, match="line 1"):
            read_integrals(path)

    def test_parse_error_carries_line_number(self, tmp_path):
        path = tmp_path / "bad2.ints"
        path.write_text("NORB=2 NELEC=1\n1 2 0 0 nope\n")
        with pytest.raises(IntegralFormatError, match="line 2"):
            read_integrals(path)

    def test_index_out_of_range(self, tmp_path):
        path = tmp_path / "bad3.ints"
        path.write_text("NORB=2 NELEC=1\n1 3 0 0 0.5\n")
        with pytest.raises(IntegralFormatError, match="line 2"):
            read_integrals(path)

    def test_mixed_zero_indices_rejected(self, tmp_path):
        path = tmp_path / "bad4.ints"
        path.write_text("NORB=2 NELEC=1\n1 2 1 0 0.5\n")
        with pytest.raises(IntegralFormatError, match="mixed"):
            read_integrals(path)

    def test_symmetry_reduced_emission(self, tmp_path, mono4):
        path = tmp_path / "m.ints"
        write_integrals(mono4.integrals, path, n_electrons=2)
        lines = [ln for ln in path.read_text().splitlines()
                 if ln and not ln.startswith("NORB")]
        g_lines = [ln for ln in lines if ln.split()[2] != "0"]
        seen = set()
        for ln in g_lines:
            p, q, r, s = (int(t) - 1 for t in ln.split()[:4])
            orbit = frozenset({(p, q, r, s), (q, p, r, s), (p, q, s, r),
                               (r, s, p, q)})
            assert orbit not in seen  # one record per orbit
            seen.add(orbit)
