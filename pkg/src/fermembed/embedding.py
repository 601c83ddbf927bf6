"""Mean-field embeddings: Schmidt fragment+bath construction, the
fixed-environment effective Hamiltonian, and projection-based (frozen-core,
level-shifted) embedding.

Both schemes produce an EmbeddingProblem: effective integrals on an
orthonormal active basis, the frozen environment determinant, and the
environment mean-field energy E_env, with

    <Phi ^ Psi_env | H | Phi ^ Psi_env> = <Phi| H_eff |Phi> + E_env

holding exactly for every active-space state Phi (tested to 1e-10).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import meanfield
from .fock import WaveFunction, enumerate_sector
from .meanfield import MeanFieldResult, density_from_orbitals
from .model import MolecularIntegrals, write_integrals, read_integrals
from .solver import GroundStateResult, SolverOptions, ground_state
from .states import SlaterDeterminant, from_mode_basis


@dataclass
class SchmidtPartition:
    """Occupied-orbital rotation of a determinant adapted to a fragment mode set.

    Fragment modes are computational; bath orbitals live on the complement and
    pair with the entangled occupied orbitals; core orbitals have no fragment
    component; pure fragment orbitals sit entirely inside the fragment.
    """

    fragment_modes: tuple
    bath_orbitals: np.ndarray          # (N, b), supported off the fragment
    core_orbitals: np.ndarray          # (N, n_core)
    pure_fragment_orbitals: np.ndarray  # (N, n_pf), supported on the fragment
    singular_values: np.ndarray        # all n values, descending
    rotated_occupied: np.ndarray       # (N, n) the rotated determinant columns
    n_modes: int

    @property
    def n_bath(self) -> int:
        return self.bath_orbitals.shape[1]

    @property
    def n_core(self) -> int:
        return self.core_orbitals.shape[1]


def schmidt_bath(det: SlaterDeterminant, fragment_modes: Sequence[int],
                 tol: float = 1e-8) -> SchmidtPartition:
    """Schmidt decomposition of a determinant across a fragment mode set.

    SVD of the fragment-row block of the occupied orbitals rotates them into
    pure-fragment columns (singular value 1 within tol), entangled pairs whose
    normalized environment components become the bath, and pure-environment
    (core) columns.  The rotated determinant equals the original up to a
    global phase.
    """
    frag = sorted(int(p) for p in fragment_modes)
    n_modes, n_occ = det.orbitals.shape
    if not frag:
        raise ValueError("fragment mode set is empty")
    if len(set(frag)) != len(frag):
        raise ValueError("fragment mode set has duplicates")
    if frag[0] < 0 or frag[-1] >= n_modes:
        raise ValueError("fragment mode index out of range")
    env = [p for p in range(n_modes) if p not in set(frag)]

    block = det.orbitals[frag, :]                       # (|A|, n)
    u, s, vh = np.linalg.svd(block, full_matrices=True)  # vh is (n, n)
    rotated = det.orbitals @ vh.conj().T                # occupied orbital rotation
    svals = np.zeros(n_occ)
    svals[:len(s)] = s

    pure_frag, bath, bath_partner, core = [], [], [], []
    for j in range(n_occ):
        col = rotated[:, j]
        sj = svals[j]
        if sj >= 1.0 - tol:
            pure_frag.append(col)
        elif sj <= tol:
            core.append(col)
        else:
            env_part = col.copy()
            env_part[frag] = 0.0
            bath.append(env_part / np.sqrt(max(1.0 - sj * sj, 0.0)))
            bath_partner.append(j)

    def stack(cols):
        if not cols:
            return np.zeros((n_modes, 0), dtype=np.complex128)
        return np.column_stack(cols)

    return SchmidtPartition(tuple(frag), stack(bath), stack(core),
                            stack(pure_frag), svals, rotated, n_modes)


@dataclass
class EmbeddingProblem:
    """Effective Hamiltonian on an orthonormal active basis plus frozen core.

    active_labels names the basis columns (fragment modes first, then bath or
    environment virtuals); effective carries no core energy of its own - the
    environment energy (including the parent core energy) lives in env_energy.
    """

    active_labels: list
    active_basis: np.ndarray            # (N, K) orthonormal, orthogonal to the core
    effective: MolecularIntegrals       # on the K active basis columns
    env_energy: float
    core_determinant: Optional[SlaterDeterminant]
    n_active: int
    n_modes_parent: int
    provenance: dict = field(default_factory=dict)

    @property
    def n_active_modes(self) -> int:
        return self.active_basis.shape[1]


def transform_one_body(matrix: np.ndarray, basis: np.ndarray) -> np.ndarray:
    return basis.conj().T @ matrix @ basis


def transform_two_body(g: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """(pq|rs) in the new basis; conjugation on the first index of each pair."""
    w = np.asarray(basis)
    t = np.einsum("pqrs,pi->iqrs", g, w.conj(), optimize=True)
    t = np.einsum("iqrs,qj->ijrs", t, w, optimize=True)
    t = np.einsum("ijrs,rk->ijks", t, w.conj(), optimize=True)
    t = np.einsum("ijks,sl->ijkl", t, w, optimize=True)
    if np.iscomplexobj(t):
        if np.max(np.abs(t.imag)) > 1e-12:
            raise ValueError("complex two-body tensor after transformation")
        t = t.real
    return t


def _effective_from_core(parent: MolecularIntegrals, active: np.ndarray,
                         core: np.ndarray) -> tuple[MolecularIntegrals, float]:
    """Partial expectation against the frozen core determinant.

    One-body gains the core Coulomb - exchange dressing; two-body is the
    parent tensor restricted to (transformed into) the active basis; the core
    mean-field energy plus the parent core energy is returned separately.
    """
    if core.shape[1]:
        d_core = density_from_orbitals(core)
        j, k = meanfield.coulomb_exchange(parent, d_core)
        dressed = parent.h + j - k
        env_energy = meanfield.mean_field_energy(parent, d_core)
    else:
        dressed = parent.h
        env_energy = parent.core_energy
    h_eff = transform_one_body(dressed, active)
    g_eff = transform_two_body(parent.g, active)
    return MolecularIntegrals(0.0, h_eff, g_eff), float(env_energy)


def dmet_effective(parent: MolecularIntegrals, part: SchmidtPartition) -> EmbeddingProblem:
    """Effective Hamiltonian on the fragment+bath space with the core frozen."""
    if part.n_modes != parent.n_modes:
        raise ValueError("partition does not belong to this Hamiltonian's mode space")
    n = parent.n_modes
    frag_cols = np.zeros((n, len(part.fragment_modes)))
    for col, p in enumerate(part.fragment_modes):
        frag_cols[p, col] = 1.0
    active = np.column_stack([frag_cols, part.bath_orbitals]) \
        if part.n_bath else frag_cols
    if np.iscomplexobj(active) and np.max(np.abs(active.imag)) == 0.0:
        active = np.real(active)

    effective, env_energy = _effective_from_core(parent, active, part.core_orbitals)
    n_occ = part.rotated_occupied.shape[1]
    n_active = n_occ - part.n_core
    core_det = SlaterDeterminant(part.core_orbitals) if part.n_core else None
    labels = [f"mode{p}" for p in part.fragment_modes] + \
             [f"bath{i}" for i in range(part.n_bath)]
    return EmbeddingProblem(labels, active, effective, env_energy, core_det,
                            n_active, n,
                            provenance={"scheme": "schmidt",
                                        "fragment": list(part.fragment_modes)})


def huzinaga_effective(parent: MolecularIntegrals, mf: MeanFieldResult,
                       active_orbitals: Sequence[int],
                       level_shift: float = 1.0e3) -> EmbeddingProblem:
    """Frozen-core embedding over a subset of the mean-field orbitals.

    The effective one-body operator is h plus the environment-occupied
    Coulomb - exchange dressing plus the Hermitian-symmetrized level-shift
    term -((F_A - mu) P_env + P_env (F_A - mu)), where F_A is built once from
    the parent mean-field density restricted to the occupied active orbitals
    and P_env projects onto the occupied environment orbitals.  As printed in
    the source material the shift term has a relative minus sign that makes it
    anti-Hermitian; the symmetrized form is used here and the discrepancy is
    deliberate.  Because the active basis is orthogonal to P_env, the shift
    contributes nothing on the embedded block in this orbital-space
    realization; it is kept for operator fidelity (it penalizes
    environment-occupied leakage in any enlarged solve space).
    """
    n = parent.n_modes
    active = sorted(int(i) for i in active_orbitals)
    if not active:
        raise ValueError("active orbital set is empty; embedding is degenerate")
    if active[0] < 0 or active[-1] >= n:
        raise ValueError("active orbital index out of range")
    n_elec = mf.n_electrons
    occupied = set(range(n_elec))          # aufbau: lowest orbital-energy columns
    env = [i for i in range(n) if i not in set(active)]
    occ_env = [i for i in env if i in occupied]
    occ_act = [i for i in active if i in occupied]

    orbitals = mf.orbitals
    w_active = orbitals[:, active]
    c_env = orbitals[:, occ_env]
    c_act = orbitals[:, occ_act]

    if occ_env:
        d_env = density_from_orbitals(c_env)
        j, k = meanfield.coulomb_exchange(parent, d_env)
        dressed = parent.h + j - k
        env_energy = meanfield.mean_field_energy(parent, d_env)
        p_env = c_env @ c_env.conj().T
        f_act = meanfield.fock_matrix(parent, density_from_orbitals(c_act)) \
            if occ_act else parent.h.astype(np.complex128)
        shifted = f_act - level_shift * np.eye(n)
        dressed = dressed - (shifted @ p_env + p_env @ shifted)
    else:
        dressed = parent.h
        env_energy = parent.core_energy

    h_eff = transform_one_body(dressed, w_active)
    if np.iscomplexobj(h_eff) and np.max(np.abs(h_eff.imag)) < 1e-12:
        h_eff = h_eff.real
    g_eff = transform_two_body(parent.g, w_active)
    effective = MolecularIntegrals(0.0, h_eff, g_eff)
    core_det = SlaterDeterminant(c_env) if occ_env else None
    labels = [f"orb{i}" for i in active]
    return EmbeddingProblem(labels, w_active, effective, float(env_energy),
                            core_det, len(occ_act), n,
                            provenance={"scheme": "projection",
                                        "active_orbitals": active,
                                        "level_shift": level_shift})


@dataclass
class EmbeddingSolution:
    e_total: float
    fragment: GroundStateResult
    guiding: WaveFunction


def _complete_basis(columns: np.ndarray) -> np.ndarray:
    """Orthonormal completion of a set of orthonormal columns (deterministic)."""
    n, k = columns.shape
    if k == n:
        return columns
    u, s, vh = np.linalg.svd(columns.conj().T)
    null = vh[k:, :].conj().T
    return np.column_stack([columns, null])


def embed_solve(prob: EmbeddingProblem,
                opts: Optional[SolverOptions] = None) -> EmbeddingSolution:
    """Solve the effective Hamiltonian in the active sector and assemble the
    full-space guiding state (fragment solution wedged with the frozen core)."""
    res = ground_state(prob.effective, prob.n_active, opts)
    e_total = prob.env_energy + res.energy

    n = prob.n_modes_parent
    k = prob.n_active_modes
    core = prob.core_determinant.orbitals if prob.core_determinant is not None \
        else np.zeros((n, 0))
    n_core = core.shape[1]
    b_full = _complete_basis(np.column_stack([prob.active_basis, core]))

    # amplitudes in the B basis: active pattern + filled core columns
    n_total = prob.n_active + n_core
    target = enumerate_sector(n, n_total)
    coeffs = np.zeros(target.dim, dtype=np.complex128)
    core_bits = 0
    for j in range(k, k + n_core):
        core_bits |= 1 << j
    amp_basis = res.state.basis
    bits = amp_basis.states | core_bits
    coeffs[target.indices_of(bits)] = res.state.coeffs
    guiding = from_mode_basis(WaveFunction(target, coeffs), b_full)
    return EmbeddingSolution(float(e_total), res, guiding)


# ---------------------------------------------------------------------------
# serialization: integral file plus a JSON sidecar
# ---------------------------------------------------------------------------

def save_embedding_problem(prob: EmbeddingProblem, basepath: str) -> None:
    write_integrals(prob.effective, f"{basepath}.ints", n_electrons=prob.n_active)
    core = prob.core_determinant.orbitals.real.tolist() \
        if prob.core_determinant is not None else []
    sidecar = {
        "active_labels": list(prob.active_labels),
        "active_basis": np.real(prob.active_basis).tolist(),
        "env_energy": prob.env_energy,
        "n_active": prob.n_active,
        "n_modes_parent": prob.n_modes_parent,
        "core_orbitals": core,
        "provenance": prob.provenance,
    }
    with open(f"{basepath}.json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=1)


def load_embedding_problem(basepath: str) -> EmbeddingProblem:
    parsed = read_integrals(f"{basepath}.ints")
    with open(f"{basepath}.json", encoding="utf-8") as fh:
        sidecar = json.load(fh)
    core_list = sidecar["core_orbitals"]
    core = SlaterDeterminant(np.array(core_list)) if core_list else None
    return EmbeddingProblem(
        sidecar["active_labels"], np.array(sidecar["active_basis"]),
        parsed.integrals, float(sidecar["env_energy"]), core,
        int(sidecar["n_active"]), int(sidecar["n_modes_parent"]),
        sidecar.get("provenance", {}))
