"""One-body reduced density matrices, natural orbitals, single-orbital
entropies, and occupation-decay reporting."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fock import WaveFunction, _annihilate


@dataclass
class OneBodyRDM:
    """gamma_pq = <a_p^dag a_q>; Hermitian with eigenvalues in [0, 1]."""

    gamma: np.ndarray

    def __post_init__(self):
        self.gamma = np.asarray(self.gamma, dtype=np.complex128)
        n = self.gamma.shape[0]
        if self.gamma.shape != (n, n):
            raise ValueError("RDM must be square")
        if not np.allclose(self.gamma, self.gamma.conj().T, atol=1e-10, rtol=0.0):
            raise ValueError("RDM is not Hermitian")
        evals = np.linalg.eigvalsh(self.gamma)
        if evals.min() < -1e-10 or evals.max() > 1.0 + 1e-10:
            raise ValueError("RDM eigenvalues leave [0, 1]")
        if np.max(np.abs(self.gamma.imag)) == 0.0:
            self.gamma = self.gamma.real.astype(np.float64)

    @property
    def n_modes(self) -> int:
        return self.gamma.shape[0]

    def occupations(self) -> np.ndarray:
        """Eigenvalues sorted descending, clipped to [0, 1]."""
        return np.clip(np.linalg.eigvalsh(self.gamma)[::-1], 0.0, 1.0)


def one_rdm(psi: WaveFunction) -> OneBodyRDM:
    """gamma from the annihilated-column Gram matrix: gamma = A^dag A with
    A[:, p] the amplitudes of a_p |psi>.  Positive semidefinite by construction."""
    basis = psi.basis
    n = basis.n_modes
    psi = psi.normalized()
    if basis.n_electrons == 0:
        return OneBodyRDM(np.zeros((n, n)))
    from .fock import enumerate_sector
    lower = enumerate_sector(n, basis.n_electrons - 1)
    cols = np.zeros((lower.dim, n), dtype=np.complex128)
    for p in range(n):
        bits, amps = _annihilate(basis.states, psi.coeffs, p)
        cols[lower.indices_of(bits), p] = amps
    gamma = cols.conj().T @ cols
    tr = float(np.trace(gamma).real)
    if abs(tr - basis.n_electrons) > 1e-10:
        raise AssertionError(f"RDM trace {tr} deviates from n={basis.n_electrons}")
    return OneBodyRDM(gamma)


def natural_orbitals(rdm: OneBodyRDM):
    """Occupations sorted descending plus the unitary natural-orbital basis.

    Each eigenvector is phase-fixed (first component above 1e-12 made real
    positive); within exactly degenerate clusters the eigh ordering is kept,
    which is deterministic for identical input.
    """
    evals, evecs = np.linalg.eigh(rdm.gamma)
    evals = evals[::-1]
    evecs = evecs[:, ::-1]
    for col in range(evecs.shape[1]):
        v = evecs[:, col]
        nz = np.nonzero(np.abs(v) > 1e-12)[0]
        if len(nz):
            lead = v[nz[0]]
            evecs[:, col] = v * (np.conj(lead) / abs(lead))
    return np.clip(evals, 0.0, 1.0), evecs


def single_orbital_entropy(psi: WaveFunction, mode: int) -> float:
    """Von Neumann entropy (nats) of the one-mode reduced state.

    Particle-number superselection makes that state diagonal with weights
    (1 - gamma_pp, gamma_pp), so only the diagonal RDM entry is needed; the
    explicit partial trace survives in the tests as an oracle.
    """
    basis = psi.basis
    if not 0 <= mode < basis.n_modes:
        raise IndexError(f"mode {mode} out of range")
    psi = psi.normalized()
    occ = ((basis.states >> mode) & 1) == 1
    x = float(np.sum(np.abs(psi.coeffs[occ]) ** 2))
    return binary_entropy(x)


def binary_entropy(x: float) -> float:
    x = min(1.0, max(0.0, x))
    if x in (0.0, 1.0):
        return 0.0
    return float(-x * math.log(x) - (1.0 - x) * math.log(1.0 - x))


def mode_entropies(psi: WaveFunction) -> np.ndarray:
    return np.array([single_orbital_entropy(psi, p) for p in range(psi.basis.n_modes)])


# ---------------------------------------------------------------------------
# occupation-decay reporting
# ---------------------------------------------------------------------------

@dataclass
class DecayReport:
    """Occupation spectrum against the exponential envelope exp(-(j-1)/rate_scale).

    fitted_c is the smallest prefactor making sigma_j <= c * exp(-(j-1)/tau)
    hold for every j (1-based), with tau = 14 * M * log(2/omega); the j-1
    offset pins fitted_c = 1 for a pure determinant spectrum.  The regression
    runs over log(sigma_j) for sigma_j strictly inside (1e-12, 1 - 1e-12); a
    report with fewer than two such points is flagged empty.  Reporting only,
    no pass/fail.
    """

    occupations: np.ndarray
    m_impurity: int
    omega: float
    rate_scale: float
    fitted_c: float
    slope: Optional[float]
    r_squared: Optional[float]
    n_regression_points: int

    @property
    def regression_empty(self) -> bool:
        return self.n_regression_points < 2


def decay_report(rdm: OneBodyRDM, m_impurity: int, omega: float) -> DecayReport:
    if not 0.0 < omega <= 1.0:
        raise ValueError("omega must lie in (0, 1]")
    sigma = rdm.occupations()
    tau = 14.0 * m_impurity * math.log(2.0 / omega)
    j = np.arange(1, len(sigma) + 1)
    fitted_c = float(np.max(sigma * np.exp((j - 1) / tau))) if len(sigma) else 0.0

    inside = (sigma > 1e-12) & (sigma < 1.0 - 1e-12)
    pts = int(np.sum(inside))
    slope = r2 = None
    if pts >= 2:
        x = j[inside].astype(float)
        y = np.log(sigma[inside])
        coeffs = np.polyfit(x, y, 1)
        fit = np.polyval(coeffs, x)
        ss_res = float(np.sum((y - fit) ** 2))
        ss_tot = float(np.sum((y - np.mean(y)) ** 2))
        slope = float(coeffs[0])
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0
    return DecayReport(sigma, m_impurity, omega, tau, fitted_c, slope, r2, pts)
