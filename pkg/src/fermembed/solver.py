"""Exact ground states of sector-restricted Hamiltonians.

Two routes: a dense diagonalization oracle at tiny sizes (assembled term by
term through fock.apply_term, independent of the vectorized apply), and a
restarted Lanczos eigensolver with full reorthogonalization for desk-scale
sectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import fock
from .fock import SectorBasis, WaveFunction, enumerate_sector
from .model import MolecularIntegrals

DENSE_DIM_CAP = 4096


class ConvergenceError(Exception):
    """Iterative solve failed; carries the best residual reached."""

    def __init__(self, message: str, best_residual: float):
        super().__init__(f"{message} (best residual {best_residual:.3e})")
        self.best_residual = best_residual


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-9
    max_krylov: int = 120
    max_restarts: int = 60
    seed: int = 1234
    degeneracy_window: float = 1e-8
    max_dim: Optional[int] = None


@dataclass
class GroundStateResult:
    energy: float
    state: WaveFunction
    residual: float
    iterations: int
    degenerate: bool = False
    gap_estimate: float = math.inf


def hamiltonian_matrix(integrals: MolecularIntegrals, basis: SectorBasis) -> np.ndarray:
    """Dense sector matrix built one term and one basis state at a time.

    Deliberately scalar (fock.apply_term per entry) so it stays an independent
    oracle for the vectorized matrix-free apply.
    """
    dim = basis.dim
    mat = np.zeros((dim, dim), dtype=np.complex128)
    one = integrals.one_body_terms()
    two = integrals.two_body_terms()
    for j in range(dim):
        state = basis.state(j)
        mat[j, j] += integrals.core_energy
        for p, q, v in one:
            hit = fock.apply_term([p], [q], state)
            if hit is not None:
                out, sign = hit
                mat[basis.index_of(out.bits), j] += v * sign
        for p, q, r, s, v in two:
            if p == r or s == q:  # repeated creator/annihilator: zero operator
                continue
            hit = fock.apply_term([p, r], [s, q], state)
            if hit is not None:
                out, sign = hit
                mat[basis.index_of(out.bits), j] += 0.5 * v * sign
    if np.max(np.abs(mat.imag)) == 0.0:
        return mat.real
    return mat


def dense_spectrum(integrals: MolecularIntegrals, n_electrons: int) -> np.ndarray:
    """Full ascending sector spectrum from the explicitly assembled matrix."""
    dim = math.comb(integrals.n_modes, n_electrons)
    if dim > DENSE_DIM_CAP:
        raise fock.SectorTooLargeError(
            f"binomial({integrals.n_modes},{n_electrons}) = {dim} exceeds the dense "
            f"cap {DENSE_DIM_CAP}")
    basis = enumerate_sector(integrals.n_modes, n_electrons)
    return np.linalg.eigvalsh(hamiltonian_matrix(integrals, basis))


def _lowest_ritz(alphas, betas, n_want=1):
    k = len(alphas)
    t = np.zeros((k, k))
    t[np.arange(k), np.arange(k)] = alphas
    if k > 1:
        off = np.asarray(betas[:k - 1])
        t[np.arange(k - 1), np.arange(1, k)] = off
        t[np.arange(1, k), np.arange(k - 1)] = off
    vals, vecs = np.linalg.eigh(t)
    return vals[:n_want], vecs[:, :n_want]


def _lanczos_lowest(matvec, dim, v0, tol, max_krylov, max_restarts, rng,
                    deflate=None):
    """Lowest eigenpair by restarted Lanczos with full reorthogonalization.

    deflate, when given, is a (dim,) vector projected out of every Krylov
    vector (used for the second-eigenvalue probe).  Returns
    (theta, x, residual, matvec_count).
    """

    def project(v):
        if deflate is not None:
            v = v - deflate * np.vdot(deflate, v)
        return v

    def fresh_vector():
        v = rng.standard_normal(dim) + 0.0j
        v = project(v)
        nrm = np.linalg.norm(v)
        if nrm < 1e-12:  # pathological; retry with a new draw
            v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
            v = project(v)
            nrm = np.linalg.norm(v)
        return v / nrm

    v0 = project(v0)
    nrm = np.linalg.norm(v0)
    v0 = v0 / nrm if nrm > 1e-12 else fresh_vector()

    best = (math.inf, None, math.inf)
    matvecs = 0
    for _ in range(max_restarts):
        cols = [v0]
        alphas: list[float] = []
        betas: list[float] = []
        breakdown = False
        v = v0
        for j in range(max_krylov):
            w = matvec(v)
            matvecs += 1
            alphas.append(float(np.vdot(v, w).real))
            basis_mat = np.column_stack(cols)
            # full reorthogonalization, twice for numerical safety
            for _ in range(2):
                w = w - basis_mat @ (basis_mat.conj().T @ w)
            w = project(w)
            beta = float(np.linalg.norm(w))
            check_now = beta < 1e-13 or j == max_krylov - 1 or (j + 1) % 5 == 0
            if check_now:
                vals, vecs = _lowest_ritz(alphas, betas)
                x = basis_mat @ vecs[:, 0]
                x = x / np.linalg.norm(x)
                hx = matvec(x)
                matvecs += 1
                theta = float(np.vdot(x, hx).real)
                res = float(np.linalg.norm(hx - theta * x))
                if res < best[0] or best[1] is None:
                    best = (res, x, theta)
                if res <= tol:
                    return theta, x, res, matvecs
            if beta < 1e-13:
                breakdown = True
                break
            betas.append(beta)
            v = w / beta
            cols.append(v)
        v0 = fresh_vector() if breakdown else best[1]
    raise ConvergenceError("Lanczos did not reach the requested residual", best[0])


def ground_state(integrals: MolecularIntegrals, n_electrons: int,
                 opts: Optional[SolverOptions] = None) -> GroundStateResult:
    """Minimal eigenpair in the fixed-electron sector.

    Deterministic for a fixed starting seed.  When a second eigenvalue sits
    within the degeneracy window (estimated by a deflated second solve), the
    result is flagged so callers know the returned member is an arbitrary
    choice.
    """
    opts = opts or SolverOptions()
    basis = enumerate_sector(integrals.n_modes, n_electrons, max_dim=opts.max_dim)
    dim = basis.dim

    def matvec(vec):
        return fock.apply_hamiltonian(integrals, WaveFunction(basis, vec)).coeffs

    if dim == 1:
        v = np.ones(1, dtype=np.complex128)
        energy = float(np.vdot(v, matvec(v)).real)
        return GroundStateResult(energy, WaveFunction(basis, v), 0.0, 1)

    rng = np.random.default_rng(opts.seed)
    v0 = rng.standard_normal(dim) + 0.0j
    theta, x, res, used = _lanczos_lowest(
        matvec, dim, v0, opts.tol, min(opts.max_krylov, dim),
        opts.max_restarts, rng)

    degenerate = False
    gap = math.inf
    if dim > 1:
        try:
            theta2, _, _, used2 = _lanczos_lowest(
                matvec, dim, rng.standard_normal(dim) + 0.0j,
                max(opts.tol, 1e-10), min(opts.max_krylov, dim - 1),
                opts.max_restarts, rng, deflate=x)
            used += used2
            gap = theta2 - theta
            degenerate = gap < opts.degeneracy_window
        except ConvergenceError:
            pass  # flag stays False; gap unknown

    return GroundStateResult(float(theta), WaveFunction(basis, x), res, used,
                             degenerate, gap)
