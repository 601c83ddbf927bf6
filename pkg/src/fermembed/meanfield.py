"""Spin-orbital Hartree-Fock SCF with fixed linear damping.

Densities follow the gamma convention gamma_pq = <a_p^dag a_q>, so a
determinant with orbital matrix C has density conj(C) @ C.T.  The Coulomb and
exchange contractions below are the Wick forms

    J[gamma]_pq = sum_rs (pq|rs) gamma_rs
    K[gamma]_pq = sum_rs (ps|rq) gamma_rs

which reduce to the familiar sum over occupied orbitals for idempotent
densities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import MolecularIntegrals
from .states import SlaterDeterminant


@dataclass(frozen=True)
class ScfOptions:
    tol: float = 1e-9          # max-abs density change
    max_iterations: int = 500
    mixing: float = 0.5        # fraction of the previous density kept


@dataclass
class MeanFieldResult:
    determinant: SlaterDeterminant
    orbital_energies: np.ndarray
    fock: np.ndarray
    energy: float
    converged: bool
    iterations: int
    orbitals: np.ndarray                 # full N x N eigenbasis of the final Fock matrix
    energy_history: list = field(default_factory=list)

    @property
    def n_electrons(self) -> int:
        return self.determinant.n_electrons


def density_from_orbitals(occupied: np.ndarray) -> np.ndarray:
    """gamma of a determinant: gamma_pq = sum_c conj(C[p,c]) C[q,c]."""
    occupied = np.asarray(occupied)
    if occupied.ndim != 2:
        raise ValueError("orbital matrix must be two-dimensional")
    return occupied.conj() @ occupied.T


def coulomb_exchange(integrals: MolecularIntegrals, density: np.ndarray):
    j = np.einsum("pqrs,rs->pq", integrals.g, density)
    k = np.einsum("psrq,rs->pq", integrals.g, density)
    return j, k


def fock_matrix(integrals: MolecularIntegrals, density: np.ndarray) -> np.ndarray:
    """h + Coulomb - exchange contracted against the given density."""
    density = np.asarray(density)
    n = integrals.n_modes
    if density.shape != (n, n):
        raise ValueError("density shape does not match the mode count")
    if not np.allclose(density, density.conj().T, atol=1e-10, rtol=0.0):
        raise ValueError("density matrix is not Hermitian")
    evals = np.linalg.eigvalsh(density)
    if evals.min() < -1e-8 or evals.max() > 1.0 + 1e-8:
        raise ValueError("density eigenvalues leave [0, 1]")
    j, k = coulomb_exchange(integrals, density)
    return integrals.h + j - k


def mean_field_energy(integrals: MolecularIntegrals, density: np.ndarray) -> float:
    """Single-determinant energy functional of a (possibly fractional) density."""
    j, k = coulomb_exchange(integrals, density)
    e = np.sum((integrals.h + 0.5 * (j - k)) * density)
    return float(e.real) + integrals.core_energy


def restricted_fock(spatial: MolecularIntegrals, spatial_density: np.ndarray) -> np.ndarray:
    """Closed-shell Fock matrix: h + sum_c [2(pq|cc) - (pc|qc)] over spatial orbitals.

    spatial_density is the per-spin density (trace = electron pairs); used to
    validate the spin-orbital contraction on spin-doubled models.
    """
    j = np.einsum("pqrs,rs->pq", spatial.g, spatial_density)
    k = np.einsum("psrq,rs->pq", spatial.g, spatial_density)
    return spatial.h + 2.0 * j - k


def restricted_energy(spatial: MolecularIntegrals, spatial_density: np.ndarray) -> float:
    """Closed-shell energy: 2 sum h_cc + sum [2(cc|c'c') - (cc'|c'c)] + core."""
    j = np.einsum("pqrs,rs->pq", spatial.g, spatial_density)
    k = np.einsum("psrq,rs->pq", spatial.g, spatial_density)
    e = 2.0 * np.sum(spatial.h * spatial_density) + np.sum((2.0 * j - k) * spatial_density)
    return float(np.real(e)) + spatial.core_energy


def _aufbau(fock: np.ndarray, n_electrons: int):
    """Occupy the n lowest Fock eigenvectors; degenerate ties keep eigh order."""
    evals, evecs = np.linalg.eigh(fock)
    return evals, evecs, evecs[:, :n_electrons]


def hartree_fock(integrals: MolecularIntegrals, n_electrons: int,
                 opts: Optional[ScfOptions] = None) -> MeanFieldResult:
    """SCF fixed point of the spin-orbital Fock operator.

    Non-convergence is reported through the converged flag rather than an
    exception; callers decide.  Deterministic: the core guess and eigh
    tie-breaking fix every iterate.
    """
    opts = opts or ScfOptions()
    n = integrals.n_modes
    if not 0 <= n_electrons <= n:
        raise ValueError("electron count outside 0..N")

    _, _, occ = _aufbau(integrals.h, n_electrons)
    density = density_from_orbitals(occ)
    history = []
    converged = False
    iterations = 0
    for iterations in range(1, opts.max_iterations + 1):
        f = fock_matrix(integrals, density)
        _, _, occ = _aufbau(f, n_electrons)
        fresh = density_from_orbitals(occ)
        new_density = (1.0 - opts.mixing) * fresh + opts.mixing * density
        history.append(mean_field_energy(integrals, new_density))
        change = float(np.max(np.abs(new_density - density)))
        density = new_density
        if change < opts.tol:
            converged = True
            break

    # self-consistent final quantities from the idempotent determinant density
    f = fock_matrix(integrals, density_from_orbitals(occ))
    orbital_energies, orbitals, occ = _aufbau(f, n_electrons)
    det = SlaterDeterminant(occ)
    energy = mean_field_energy(integrals, density_from_orbitals(occ))
    return MeanFieldResult(det, orbital_energies, f, energy, converged,
                           iterations, orbitals, history)
