"""Many-body state constructions: Slater determinants, wedge composition,
orbital rotations, sum-of-Slater extraction, and MPS compression.

Orbital-rotation convention (fixed here and relied on everywhere): for a
unitary U, the induced many-body map sends a_p^dag -> sum_q U[p,q] a_q^dag.
Consequences, both tested:
  * a determinant with coefficient matrix C maps to the determinant U.T @ C,
  * the one-body RDM transforms as gamma -> U^dag gamma U,
  * composition: rotate(U2, rotate(U1, psi)) = rotate(U1 @ U2, psi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .fock import (OccupationState, SectorBasis, WaveFunction,
                   enumerate_sector, parity_sign)

ORTHONORMAL_TOL = 1e-10
UNITARY_TOL = 1e-10
FULL_SPACE_CAP = 2 ** 22


@dataclass
class SlaterDeterminant:
    """Single-determinant state given by an N x n orthonormal orbital matrix."""

    orbitals: np.ndarray

    def __post_init__(self):
        self.orbitals = np.asarray(self.orbitals, dtype=np.complex128)
        if self.orbitals.ndim != 2:
            raise ValueError("orbital matrix must be two-dimensional")
        n_modes, n_occ = self.orbitals.shape
        if n_occ > n_modes:
            raise ValueError("more occupied orbitals than modes")
        gram = self.orbitals.conj().T @ self.orbitals
        if not np.allclose(gram, np.eye(n_occ), atol=ORTHONORMAL_TOL, rtol=0.0):
            raise ValueError("orbital columns are not orthonormal")

    @property
    def n_modes(self) -> int:
        return self.orbitals.shape[0]

    @property
    def n_electrons(self) -> int:
        return self.orbitals.shape[1]


def computational_determinant(n_modes: int, occupied: Sequence[int]) -> SlaterDeterminant:
    occ = sorted(occupied)
    c = np.zeros((n_modes, len(occ)))
    for col, p in enumerate(occ):
        c[p, col] = 1.0
    return SlaterDeterminant(c)


def determinant_to_wavefunction(det: SlaterDeterminant,
                                max_dim: Optional[int] = None) -> WaveFunction:
    """Expand a determinant over the sector basis by n x n minors.

    The amplitude on pattern S is det(orbitals restricted to rows S); the
    global sign follows from the package ordering convention.
    """
    basis = enumerate_sector(det.n_modes, det.n_electrons, max_dim=max_dim)
    if det.n_electrons == 0:
        return WaveFunction(basis, np.ones(1, dtype=np.complex128))
    rows = basis.occupied_positions()            # (dim, n)
    minors = det.orbitals[rows, :]               # (dim, n, n)
    return WaveFunction(basis, np.linalg.det(minors))


def overlap(phi: WaveFunction, psi: WaveFunction) -> complex:
    """<phi|psi>; raises on sector mismatch."""
    if (phi.basis.n_modes != psi.basis.n_modes
            or phi.basis.n_electrons != psi.basis.n_electrons):
        raise ValueError("states live in different sectors")
    return complex(np.vdot(phi.coeffs, psi.coeffs))


# ---------------------------------------------------------------------------
# wedge composition on disjoint mode sets
# ---------------------------------------------------------------------------

def _scatter_patterns(basis: SectorBasis, modes: Sequence[int]) -> np.ndarray:
    """Map local patterns to global bit patterns through a mode list."""
    modes = np.asarray(modes, dtype=np.int64)
    local = basis.occupation_matrix()            # (dim, len(modes))
    out = np.zeros(basis.dim, dtype=np.int64)
    for col in range(local.shape[1]):
        out += local[:, col].astype(np.int64) << modes[col]
    return out


def wedge(phi: WaveFunction, phi_modes: Sequence[int],
          theta: SlaterDeterminant, theta_modes: Sequence[int],
          n_modes: int) -> WaveFunction:
    """Antisymmetrized composition of a state on modes A with a determinant on
    modes C, A and C disjoint subsets of an n_modes register.

    The composite creation string is (A part in ascending order) then (C part
    in ascending order) applied to the vacuum; signs follow from sorting that
    string into the global convention.  Norms multiply.
    """
    a = sorted(int(p) for p in phi_modes)
    c = sorted(int(p) for p in theta_modes)
    if set(a) & set(c):
        raise ValueError("fragment and environment mode sets overlap")
    if len(a) != phi.basis.n_modes:
        raise ValueError("phi mode list does not match its basis width")
    if len(c) != theta.n_modes:
        raise ValueError("theta mode list does not match its orbital matrix")
    if a and max(a) >= n_modes or c and max(c) >= n_modes:
        raise ValueError("mode index outside the target register")

    theta_wave = determinant_to_wavefunction(theta)
    ga = _scatter_patterns(phi.basis, a)                      # (dimA,)
    gc = _scatter_patterns(theta_wave.basis, c)               # (dimC,)

    n_total = phi.basis.n_electrons + theta.n_electrons
    target = enumerate_sector(n_modes, n_total)

    # sign: for every occupied q in the C part, count occupied A modes above q
    occ_c = theta_wave.basis.occupied_positions()             # (dimC, n_c)
    if occ_c.shape[1] > 0:
        c_arr = np.asarray(c, dtype=np.int64)
        global_pos = c_arr[occ_c]                             # (dimC, n_c)
        above = (~np.int64(0)) << (global_pos + 1)            # (dimC, n_c) masks
        crossings = np.bitwise_count(
            ga[:, None, None] & above[None, :, :]).astype(np.int64).sum(axis=2)
        signs = 1 - 2 * (crossings & 1)                       # (dimA, dimC)
    else:
        signs = np.ones((len(ga), len(gc)), dtype=np.int64)

    amp = phi.coeffs[:, None] * theta_wave.coeffs[None, :] * signs
    bits = ga[:, None] | gc[None, :]
    out = np.zeros(target.dim, dtype=np.complex128)
    np.add.at(out, target.indices_of(bits.ravel()), amp.ravel())
    return WaveFunction(target, out)


# ---------------------------------------------------------------------------
# sum-of-Slater extraction
# ---------------------------------------------------------------------------

@dataclass
class SumOfSlater:
    """Top-amplitude determinant expansion, renormalized to unit norm.

    terms are sorted by descending |coefficient| with ascending-bit-pattern
    tie-break.
    """

    terms: list
    renormalized: bool
    kept_weight: float  # sum |C_i|^2 over the kept terms, before renormalizing

    def to_wavefunction(self, basis: SectorBasis) -> WaveFunction:
        c = np.zeros(basis.dim, dtype=np.complex128)
        for coeff, state in self.terms:
            c[basis.index_of(state.bits)] = coeff
        return WaveFunction(basis, c)


def sum_of_slater(psi: WaveFunction, n_terms: int) -> SumOfSlater:
    """Exact top-L extraction (no sampling) of the largest-|amplitude| terms."""
    dim = psi.basis.dim
    if not 1 <= n_terms <= dim:
        raise ValueError(f"term count must lie in 1..{dim}")
    weights = np.abs(psi.coeffs)
    order = np.lexsort((psi.basis.states, -weights))
    keep = order[:n_terms]
    kept_weight = float(np.sum(weights[keep] ** 2))
    scale = 1.0 / math.sqrt(kept_weight)
    terms = [(psi.coeffs[i] * scale, OccupationState(int(psi.basis.states[i]),
                                                     psi.basis.n_modes))
             for i in keep]
    return SumOfSlater(terms, True, kept_weight)


# ---------------------------------------------------------------------------
# orbital rotations
# ---------------------------------------------------------------------------

def _check_unitary(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=np.complex128)
    n = u.shape[0]
    if u.shape != (n, n):
        raise ValueError("rotation matrix must be square")
    if not np.allclose(u.conj().T @ u, np.eye(n), atol=UNITARY_TOL, rtol=0.0):
        raise ValueError("rotation matrix is not unitary")
    return u


def rotate_determinant(det: SlaterDeterminant, u: np.ndarray) -> SlaterDeterminant:
    """Exact determinant path of the rotation: C -> U.T @ C."""
    u = _check_unitary(u)
    return SlaterDeterminant(u.T @ det.orbitals)


def _apply_two_mode(basis: SectorBasis, coeffs: np.ndarray, i: int, j: int,
                    v: np.ndarray) -> np.ndarray:
    """Many-body action of a two-mode unitary v on modes i < j (in place safe)."""
    states = basis.states
    out = coeffs.copy()
    occ_i = ((states >> i) & 1) == 1
    occ_j = ((states >> j) & 1) == 1
    both = occ_i & occ_j
    out[both] *= np.linalg.det(v)
    only_i = occ_i & ~occ_j
    if np.any(only_i):
        si = states[only_i]
        sj = si ^ (1 << i) ^ (1 << j)
        idx_j = basis.indices_of(sj)
        between = ((1 << j) - 1) ^ ((1 << (i + 1)) - 1)
        eta = parity_sign(si & between)
        ci = coeffs[only_i]
        cj = coeffs[idx_j]
        out[only_i] = v[0, 0] * ci + eta * v[1, 0] * cj
        out[idx_j] = eta * v[0, 1] * ci + v[1, 1] * cj
    return out


def rotate_orbitals(psi: WaveFunction, u: np.ndarray) -> WaveFunction:
    """Single-particle basis change as the induced many-body transformation.

    Implemented through a Givens factorization of U into two-mode kernels and
    a diagonal phase layer; norm preserving.  See the module docstring for the
    convention (gamma -> U^dag gamma U).
    """
    u = _check_unitary(u)
    n = psi.basis.n_modes
    if u.shape[0] != n:
        raise ValueError("rotation dimension does not match the mode count")

    # Givens sweep: rows of rotations R_k reduce U to diagonal phases D,
    # U = R_1^dag R_2^dag ... D, and the induced maps compose in that order.
    m = u.copy()
    kernels = []  # (i, j, 2x2 block) applied in list order
    for col in range(n):
        for row in range(col + 1, n):
            b = m[row, col]
            if abs(b) < 1e-15:
                continue
            a = m[col, col]
            r = math.hypot(abs(a), abs(b))
            g = np.array([[np.conj(a), np.conj(b)], [-b, a]], dtype=np.complex128) / r
            rows = np.array([col, row])
            m[rows, :] = g @ m[rows, :]
            kernels.append((col, row, g.conj().T))
    phases = np.diag(m).copy()

    out = psi.coeffs.copy()
    for i, j, block in kernels:
        out = _apply_two_mode(psi.basis, out, i, j, block)
    for p in range(n):
        ph = phases[p]
        if ph != 1.0:
            occ = ((psi.basis.states >> p) & 1) == 1
            out[occ] *= ph
    return WaveFunction(psi.basis, out)


def to_mode_basis(psi: WaveFunction, basis_columns: np.ndarray) -> WaveFunction:
    """Amplitudes of psi with respect to the orthonormal modes in basis_columns.

    Inverse of from_mode_basis; a determinant C acquires coordinates B^dag C.
    """
    return rotate_orbitals(psi, np.conj(basis_columns))


def from_mode_basis(psi_in_b: WaveFunction, basis_columns: np.ndarray) -> WaveFunction:
    """Reinterpret amplitudes over the columns of B as a computational-basis state."""
    return rotate_orbitals(psi_in_b, np.asarray(basis_columns).T)


# ---------------------------------------------------------------------------
# MPS compression
# ---------------------------------------------------------------------------

@dataclass
class MPSState:
    """Left-canonical matrix product state over local dimension 2, one site per mode."""

    site_tensors: list
    bond_dims: list

    @property
    def n_modes(self) -> int:
        return len(self.site_tensors)

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims) if self.bond_dims else 1


def _full_vector(psi: WaveFunction) -> np.ndarray:
    full = np.zeros(1 << psi.basis.n_modes, dtype=np.complex128)
    full[psi.basis.states] = psi.coeffs
    return full


def mps_compress(psi: WaveFunction, bond_cap: int) -> MPSState:
    """Left-to-right sequential SVD truncation of the full amplitude tensor.

    Mode order is the computational order (site 0 = mode 0).  At most bond_cap
    singular values are kept per cut; the result is left-canonical and
    normalized.
    """
    if bond_cap < 1:
        raise ValueError("bond cap must be at least 1")
    n = psi.basis.n_modes
    if (1 << n) > FULL_SPACE_CAP:
        raise ValueError(f"2^{n} amplitudes exceed the compression cap")

    tensor = _full_vector(psi).reshape([2] * n)
    tensor = tensor.transpose(tuple(reversed(range(n))))  # axis p = mode p

    sites = []
    bonds = []
    rank = 1
    v = tensor.reshape(1, -1)
    for _ in range(n - 1):
        v = v.reshape(rank * 2, -1)
        u, s, vh = np.linalg.svd(v, full_matrices=False)
        keep = min(bond_cap, int(np.sum(s > 1e-14)) or 1)
        u, s, vh = u[:, :keep], s[:keep], vh[:keep, :]
        sites.append(u.reshape(rank, 2, keep))
        bonds.append(keep)
        v = s[:, None] * vh
        rank = keep
    last = v.reshape(rank, 2, 1)
    nrm = np.linalg.norm(last)
    if nrm == 0.0:
        raise ValueError("state vanished under compression")
    sites.append(last / nrm)
    return MPSState(sites, bonds)


def mps_to_wavefunction(mps: MPSState) -> WaveFunction:
    """Full contraction back to a normalized sector wavefunction.

    Truncation can in principle leak particle number across degenerate Schmidt
    values; the dominant-number sector is kept and renormalized.
    """
    n = mps.n_modes
    # contract left to right, keeping the open physical indices flattened
    result = mps.site_tensors[0].reshape(2, -1)  # (2, D1)
    for t in mps.site_tensors[1:]:
        dl, _, dr = t.shape
        result = result @ t.reshape(dl, 2 * dr)
        result = result.reshape(-1, dr)
    full = result.reshape([2] * n).transpose(tuple(reversed(range(n)))).reshape(-1)

    counts = np.bitwise_count(np.arange(1 << n, dtype=np.int64))
    weights = np.zeros(n + 1)
    np.add.at(weights, counts, np.abs(full) ** 2)
    n_elec = int(np.argmax(weights))
    basis = enumerate_sector(n, n_elec)
    coeffs = full[basis.states]
    return WaveFunction(basis, coeffs / np.linalg.norm(coeffs))
