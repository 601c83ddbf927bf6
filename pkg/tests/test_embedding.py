import numpy as np
import pytest

from fermembed import analysis, embedding, fock, meanfield, states
from fermembed.embedding import (dmet_effective, embed_solve, huzinaga_effective,
                                 load_embedding_problem, save_embedding_problem,
                                 schmidt_bath)
from fermembed.fock import WaveFunction, enumerate_sector, random_state
from fermembed.meanfield import density_from_orbitals
from fermembed.model import spin_double
from fermembed.states import (SlaterDeterminant, computational_determinant,
                              determinant_to_wavefunction, from_mode_basis,
                              overlap)

# frozen from the deterministic shipped pipeline (dense-oracle cross-checked)
PIN_GUIDING_OVERLAP = 0.999999972431186


def full_space_state(prob, phi):
    """Lift an active-space state to the parent space, core wedged in."""
    n = prob.n_modes_parent
    core = prob.core_determinant.orbitals if prob.core_determinant is not None \
        else np.zeros((n, 0))
    b_full = embedding._complete_basis(np.column_stack([prob.active_basis, core]))
    n_core = core.shape[1]
    k = prob.n_active_modes
    target = enumerate_sector(n, prob.n_active + n_core)
    coeffs = np.zeros(target.dim, dtype=np.complex128)
    core_bits = sum(1 << j for j in range(k, k + n_core))
    coeffs[target.indices_of(phi.basis.states | core_bits)] = phi.coeffs
    return from_mode_basis(WaveFunction(target, coeffs), b_full)


class TestSchmidtBath:
    def test_fragment_only_occupation(self):
        det = computational_determinant(6, [0, 1])
        part = schmidt_bath(det, [0, 1, 2])
        assert part.n_bath == 0
        assert part.n_core == 0
        assert part.pure_fragment_orbitals.shape[1] == 2

    def test_environment_only_occupation(self):
        det = computational_determinant(6, [3, 4])
        part = schmidt_bath(det, [0, 1])
        assert part.n_bath == 0
        assert part.n_core == 2
        assert part.pure_fragment_orbitals.shape[1] == 0

    def test_shipped_model_bath_bound_and_reconstruction(self, imp8, imp8_scf):
        det = SlaterDeterminant(imp8_scf.determinant.orbitals)
        part = schmidt_bath(det, [0, 1])
        assert part.n_bath <= min(2, imp8.n_electrons)
        rebuilt = determinant_to_wavefunction(
            SlaterDeterminant(part.rotated_occupied))
        original = determinant_to_wavefunction(det)
        assert abs(abs(overlap(rebuilt, original)) - 1.0) <= 1e-10

    def test_bath_orthonormal_and_orthogonal_to_core(self, imp8_scf):
        part = schmidt_bath(SlaterDeterminant(imp8_scf.determinant.orbitals), [0, 1])
        b = part.bath_orbitals
        np.testing.assert_allclose(b.conj().T @ b, np.eye(part.n_bath), atol=1e-10)
        if part.n_core:
            np.testing.assert_allclose(b.conj().T @ part.core_orbitals, 0.0,
                                       atol=1e-10)

    def test_span_preserved(self, imp8_scf):
        part = schmidt_bath(SlaterDeterminant(imp8_scf.determinant.orbitals), [0, 1])
        occ = imp8_scf.determinant.orbitals
        rot = part.rotated_occupied
        # singular values of the cross Gram are all one iff spans agree
        sv = np.linalg.svd(occ.conj().T @ rot, compute_uv=False)
        np.testing.assert_allclose(sv, 1.0, atol=1e-10)

    def test_bath_count_bound_random_determinants(self):
        rng = np.random.default_rng(123)
        for trial in range(20):
            n = int(rng.integers(4, 9))
            n_occ = int(rng.integers(1, n))
            size = int(rng.integers(1, n))
            frag = sorted(rng.choice(n, size=size, replace=False).tolist())
            q = np.linalg.qr(rng.standard_normal((n, n)))[0]
            part = schmidt_bath(SlaterDeterminant(q[:, :n_occ]), frag)
            assert part.n_bath <= min(len(frag), n_occ)
            assert part.n_core + part.n_bath + \
                part.pure_fragment_orbitals.shape[1] <= n_occ

    def test_bad_fragments(self, imp8_scf):
        det = SlaterDeterminant(imp8_scf.determinant.orbitals)
        with pytest.raises(ValueError):
            schmidt_bath(det, [])
        with pytest.raises(ValueError):
            schmidt_bath(det, [0, 9])


class TestDmetEffective:
    def test_empty_core_is_plain_restriction(self):
        det = computational_determinant(6, [0, 1])
        part = schmidt_bath(det, [0, 1, 2])
        from conftest import random_integrals
        parent = random_integrals(6, 71, core_energy=0.5)
        prob = dmet_effective(parent, part)
        assert prob.env_energy == 0.5
        np.testing.assert_allclose(prob.effective.h, parent.h[:3, :3], atol=1e-12)
        np.testing.assert_allclose(prob.effective.g, parent.g[:3, :3, :3, :3],
                                   atol=1e-12)

    def test_trivial_embedding_recovers_full_problem(self, imp8, imp8_scf,
                                                     imp8_ground):
        det = SlaterDeterminant(imp8_scf.determinant.orbitals)
        part = schmidt_bath(det, list(range(8)))
        prob = dmet_effective(imp8.integrals, part)
        sol = embed_solve(prob)
        assert abs(sol.e_total - imp8_ground.energy) <= 1e-10

    def test_partial_expectation_identity(self, imp8, imp8_scf):
        det = SlaterDeterminant(imp8_scf.determinant.orbitals)
        part = schmidt_bath(det, [0, 1])
        prob = dmet_effective(imp8.integrals, part)
        basis_a = enumerate_sector(prob.n_active_modes, prob.n_active)
        for trial in range(10):
            phi = random_state(basis_a, 500 + trial)
            lhs = fock.expectation(imp8.integrals, full_space_state(prob, phi))
            rhs = fock.expectation(prob.effective, phi) + prob.env_energy
            assert abs(lhs - rhs) <= 1e-10

    def test_variational_and_pinned_guiding_overlap(self, imp8, imp8_scf,
                                                    imp8_ground):
        det = SlaterDeterminant(imp8_scf.determinant.orbitals)
        part = schmidt_bath(det, [0, 1])
        sol = embed_solve(dmet_effective(imp8.integrals, part))
        assert sol.e_total >= imp8_ground.energy - 1e-10
        ov = abs(overlap(sol.guiding, imp8_ground.state))
        assert abs(ov - PIN_GUIDING_OVERLAP) < 1e-6

    def test_mode_space_mismatch_rejected(self, imp8, gen6, imp8_scf):
        det = SlaterDeterminant(imp8_scf.determinant.orbitals)
        part = schmidt_bath(det, [0, 1])
        with pytest.raises(ValueError):
            dmet_effective(gen6.integrals, part)

    def test_spin_doubled_core_contraction_matches_restricted(self, mono4):
        # closed-shell core: two spatial orbitals occupied with both spins
        doubled = spin_double(mono4.integrals)
        n = mono4.integrals.n_modes
        rng = np.random.default_rng(77)
        c_spatial = np.linalg.qr(rng.standard_normal((n, 2)))[0]
        core = np.zeros((2 * n, 4))
        core[:n, :2] = c_spatial
        core[n:, 2:] = c_spatial
        d_core = density_from_orbitals(core)
        d_spatial = density_from_orbitals(c_spatial)
        j = np.einsum("pqrs,rs->pq", mono4.integrals.g, d_spatial)
        k = np.einsum("psrq,rs->pq", mono4.integrals.g, d_spatial)
        dressed_spatial = mono4.integrals.h + 2.0 * j - k
        jj, kk = meanfield.coulomb_exchange(doubled, d_core)
        dressed_spin = doubled.h + jj - kk
        np.testing.assert_allclose(dressed_spin[:n, :n], dressed_spatial,
                                   atol=1e-12)
        np.testing.assert_allclose(dressed_spin[n:, n:], dressed_spatial,
                                   atol=1e-12)


class TestHuzinagaEffective:
    def test_empty_environment_occupation_reduces_to_restriction(self, imp8,
                                                                 imp8_scf):
        # active set holds every occupied orbital; environment is pure virtual
        n_occ = imp8.n_electrons
        active = list(range(n_occ)) + [6, 7]
        prob = huzinaga_effective(imp8.integrals, imp8_scf, active)
        assert prob.core_determinant is None
        assert prob.env_energy == imp8.integrals.core_energy
        w = imp8_scf.orbitals[:, active]
        np.testing.assert_allclose(prob.effective.h,
                                   w.conj().T @ imp8.integrals.h @ w, atol=1e-10)

    def test_full_active_set_is_exact(self, imp8, imp8_scf, imp8_ground):
        prob = huzinaga_effective(imp8.integrals, imp8_scf, list(range(8)))
        sol = embed_solve(prob)
        assert abs(sol.e_total - imp8_ground.energy) <= 1e-10

    def test_partial_expectation_identity(self, imp8, imp8_scf):
        prob = huzinaga_effective(imp8.integrals, imp8_scf, [0, 1, 2, 3, 6],
                                  level_shift=1e3)
        basis_a = enumerate_sector(prob.n_active_modes, prob.n_active)
        for trial in range(10):
            phi = random_state(basis_a, 900 + trial)
            lhs = fock.expectation(imp8.integrals, full_space_state(prob, phi))
            rhs = fock.expectation(prob.effective, phi) + prob.env_energy
            assert abs(lhs - rhs) <= 1e-10

    def test_variational_and_leakage(self, imp8, imp8_scf, imp8_ground):
        active = [0, 1, 4, 5]  # two occupied + two virtual orbitals
        prob = huzinaga_effective(imp8.integrals, imp8_scf, active,
                                  level_shift=1e3)
        assert prob.core_determinant is not None
        sol = embed_solve(prob)
        assert sol.e_total >= imp8_ground.energy - 1e-10
        # leakage: embedded-state occupation of the environment-occupied space
        p_env = sum(np.outer(imp8_scf.orbitals[:, i], imp8_scf.orbitals[:, i].conj())
                    for i in range(imp8.n_electrons) if i not in active)
        w = prob.active_basis
        gamma_active = analysis.one_rdm(sol.fragment.state).gamma
        gamma_lifted = np.conj(w) @ gamma_active @ w.T
        leakage = np.trace(gamma_lifted @ p_env).real
        assert abs(leakage) <= 1e-6

    def test_level_shift_symmetrization_keeps_hermitian(self, imp8, imp8_scf):
        prob = huzinaga_effective(imp8.integrals, imp8_scf, [0, 1, 2, 3],
                                  level_shift=123.0)
        np.testing.assert_allclose(prob.effective.h,
                                   np.conj(prob.effective.h).T, atol=1e-12)

    def test_empty_active_set_rejected(self, imp8, imp8_scf):
        with pytest.raises(ValueError, match="degenerate"):
            huzinaga_effective(imp8.integrals, imp8_scf, [])


class TestSerialization:
    def test_round_trip(self, imp8, imp8_scf, tmp_path):
        det = SlaterDeterminant(imp8_scf.determinant.orbitals)
        part = schmidt_bath(det, [0, 1])
        prob = dmet_effective(imp8.integrals, part)
        base = str(tmp_path / "emb")
        save_embedding_problem(prob, base)
        loaded = load_embedding_problem(base)
        assert loaded.n_active == prob.n_active
        assert abs(loaded.env_energy - prob.env_energy) < 1e-14
        np.testing.assert_allclose(loaded.effective.h, prob.effective.h,
                                   atol=1e-14)
        np.testing.assert_allclose(loaded.effective.g, prob.effective.g,
                                   atol=1e-14)
        np.testing.assert_allclose(loaded.active_basis, prob.active_basis,
                                   atol=1e-14)
        sol_a = embed_solve(prob)
        sol_b = embed_solve(loaded)
        assert abs(sol_a.e_total - sol_b.e_total) < 1e-10
