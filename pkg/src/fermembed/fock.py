"""Occupation-number representation of fermionic Fock space at fixed particle number.

Modes are spin orbitals indexed 0..N-1 (0-based internally; file formats are
1-based).  A basis state is a bit pattern: mode p is occupied iff bit p is set.
The global ordering convention is

    |n_0 n_1 ...> = (a_0^dag)^{n_0} (a_1^dag)^{n_1} ... |vac>

so the sign of applying a_p or a_p^dag is the parity of the number of occupied
modes strictly below p.  Every module in the package relies on this single
convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

if TYPE_CHECKING:
    from .model import MolecularIntegrals

MAX_MODES = 63
DEFAULT_DIM_CAP = 2_000_000


class SectorTooLargeError(Exception):
    """Requested sector exceeds the configured dimension cap."""


def parity_sign(x) -> np.ndarray:
    """(-1)**popcount(x) for scalar or array int64 input."""
    return 1 - 2 * (np.bitwise_count(np.asarray(x, dtype=np.int64)) & np.int64(1))


@dataclass(frozen=True)
class OccupationState:
    """A single occupation pattern on n_modes modes."""

    bits: int
    n_modes: int

    def __post_init__(self):
        if not 0 <= self.n_modes <= MAX_MODES:
            raise ValueError(f"mode count {self.n_modes} outside [0, {MAX_MODES}]")
        if self.bits < 0 or self.bits >> self.n_modes:
            raise ValueError(f"bits {self.bits:#x} outside {self.n_modes}-mode register")

    @property
    def n_particles(self) -> int:
        return int(self.bits).bit_count()

    def occupied(self) -> tuple[int, ...]:
        return tuple(p for p in range(self.n_modes) if (self.bits >> p) & 1)

    def __str__(self) -> str:
        return "".join("1" if (self.bits >> p) & 1 else "0" for p in range(self.n_modes))


@lru_cache(maxsize=128)
def _sector_states(n_modes: int, n_electrons: int) -> np.ndarray:
    """All bit patterns with fixed popcount, strictly increasing. Cached."""
    dim = math.comb(n_modes, n_electrons)
    out = np.empty(dim, dtype=np.int64)
    if n_electrons == 0:
        out[0] = 0
    else:
        v = (1 << n_electrons) - 1
        for i in range(dim):
            out[i] = v
            # Gosper's hack: next larger integer with the same popcount
            c = v & -v
            r = v + c
            v = (((r ^ v) >> 2) // c) | r
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class SectorBasis:
    """Ordered basis of the fixed-particle-number sector.

    states are sorted ascending by integer value of the bit pattern; lookups
    invert the ordering exactly.  Immutable and safe to share between workers.
    """

    n_modes: int
    n_electrons: int
    states: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.states)

    def index_of(self, bits: int) -> int:
        i = int(np.searchsorted(self.states, bits))
        if i >= self.dim or self.states[i] != bits:
            raise KeyError(f"pattern {bits:#x} not in sector ({self.n_modes} modes, "
                           f"{self.n_electrons} electrons)")
        return i

    def indices_of(self, bits: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.states, bits)
        if np.any(self.states[idx] != bits):
            raise KeyError("pattern(s) not in sector")
        return idx

    def state(self, i: int) -> OccupationState:
        return OccupationState(int(self.states[i]), self.n_modes)

    def occupation_matrix(self) -> np.ndarray:
        """Boolean (dim, n_modes) occupancy table."""
        modes = np.arange(self.n_modes, dtype=np.int64)
        return ((self.states[:, None] >> modes[None, :]) & 1).astype(bool)

    def occupied_positions(self) -> np.ndarray:
        """(dim, n_electrons) occupied mode indices, ascending along each row."""
        occ = self.occupation_matrix()
        return np.nonzero(occ)[1].reshape(self.dim, self.n_electrons)


def enumerate_sector(n_modes: int, n_electrons: int,
                     max_dim: Optional[int] = None) -> SectorBasis:
    """Canonical basis of the (n_modes choose n_electrons) sector.

    Raises SectorTooLargeError when the binomial exceeds the cap (default
    DEFAULT_DIM_CAP); the error message names the offending dimension.
    """
    if not 0 <= n_electrons <= n_modes:
        raise ValueError(f"need 0 <= n={n_electrons} <= N={n_modes}")
    if n_modes > MAX_MODES:
        raise ValueError(f"mode count {n_modes} exceeds {MAX_MODES}")
    dim = math.comb(n_modes, n_electrons)
    cap = DEFAULT_DIM_CAP if max_dim is None else max_dim
    if dim > cap:
        raise SectorTooLargeError(
            f"binomial({n_modes},{n_electrons}) = {dim} exceeds the dimension cap {cap}")
    return SectorBasis(n_modes, n_electrons, _sector_states(n_modes, n_electrons))


@dataclass
class WaveFunction:
    """Complex amplitude vector over a SectorBasis."""

    basis: SectorBasis
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if self.coeffs.shape != (self.basis.dim,):
            raise ValueError(f"coefficient length {self.coeffs.shape} != sector "
                             f"dimension {self.basis.dim}")

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def normalized(self) -> "WaveFunction":
        nrm = self.norm()
        if nrm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return WaveFunction(self.basis, self.coeffs / nrm)

    def copy(self) -> "WaveFunction":
        return WaveFunction(self.basis, self.coeffs.copy())


def basis_state(basis: SectorBasis, bits: int) -> WaveFunction:
    c = np.zeros(basis.dim, dtype=np.complex128)
    c[basis.index_of(bits)] = 1.0
    return WaveFunction(basis, c)


def random_state(basis: SectorBasis, seed: int) -> WaveFunction:
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(basis.dim) + 1j * rng.standard_normal(basis.dim)
    return WaveFunction(basis, c / np.linalg.norm(c))


# ---------------------------------------------------------------------------
# operator application
# ---------------------------------------------------------------------------

def apply_term(creators: Sequence[int], annihilators: Sequence[int],
               state: OccupationState):
    """Apply a_{c1}^dag .. a_{ck}^dag a_{q1} .. a_{ql} to a basis state.

    Operators act right to left: the last annihilator in the list acts first,
    the first creator acts last.  Returns (OccupationState, sign) or None when
    the result vanishes (annihilating an empty mode / creating an occupied one).
    """
    n = state.n_modes
    for p in list(creators) + list(annihilators):
        if not 0 <= p < n:
            raise IndexError(f"mode {p} out of range for {n} modes")
    if len(set(creators)) != len(creators) or len(set(annihilators)) != len(annihilators):
        raise ValueError("creator/annihilator lists must be duplicate-free")

    bits = state.bits
    sign = 1
    for q in reversed(list(annihilators)):
        if not (bits >> q) & 1:
            return None
        if (bits & ((1 << q) - 1)).bit_count() & 1:
            sign = -sign
        bits ^= 1 << q
    for p in reversed(list(creators)):
        if (bits >> p) & 1:
            return None
        if (bits & ((1 << p) - 1)).bit_count() & 1:
            sign = -sign
        bits |= 1 << p
    return OccupationState(bits, n), sign


def _annihilate(bits: np.ndarray, amps: np.ndarray, q: int):
    """Vectorized a_q on (pattern, amplitude) pairs; drops vanished entries."""
    keep = ((bits >> q) & 1) == 1
    b = bits[keep]
    a = amps[keep] * parity_sign(b & ((1 << q) - 1))
    return b ^ (1 << q), a


def _create(bits: np.ndarray, amps: np.ndarray, p: int):
    keep = ((bits >> p) & 1) == 0
    b = bits[keep]
    a = amps[keep] * parity_sign(b & ((1 << p) - 1))
    return b | (1 << p), a


def apply_one_body(basis: SectorBasis, coeffs: np.ndarray, p: int, q: int,
                   value: complex, out: np.ndarray) -> None:
    """Accumulate value * a_p^dag a_q |coeffs> into out (same sector)."""
    if p == q:
        occ = ((basis.states >> q) & 1).astype(np.float64)
        out += value * occ * coeffs
        return
    b, a = _annihilate(basis.states, coeffs, q)
    b, a = _create(b, a, p)
    np.add.at(out, basis.indices_of(b), value * a)


def apply_two_body(basis: SectorBasis, coeffs: np.ndarray, p: int, q: int,
                   r: int, s: int, value: complex, out: np.ndarray) -> None:
    """Accumulate value * a_p^dag a_r^dag a_s a_q |coeffs> into out."""
    b, a = _annihilate(basis.states, coeffs, q)
    b, a = _annihilate(b, a, s)
    if len(b) == 0:
        return
    b, a = _create(b, a, r)
    b, a = _create(b, a, p)
    if len(b) == 0:
        return
    np.add.at(out, basis.indices_of(b), value * a)


def _string_action(basis: SectorBasis, creators, annihilators):
    """Scatter data (src, tgt, amp) for a normal product of ladder operators."""
    bits = basis.states
    src = np.arange(basis.dim)
    amp = np.ones(basis.dim)
    for q in reversed(list(annihilators)):
        keep = ((bits >> q) & 1) == 1
        bits, src, amp = bits[keep], src[keep], amp[keep]
        amp = amp * parity_sign(bits & ((1 << q) - 1))
        bits = bits ^ (1 << q)
    for p in reversed(list(creators)):
        keep = ((bits >> p) & 1) == 0
        bits, src, amp = bits[keep], src[keep], amp[keep]
        amp = amp * parity_sign(bits & ((1 << p) - 1))
        bits = bits | (1 << p)
    return src, basis.indices_of(bits), amp


_ACTION_CACHE: dict = {}
_ACTION_ENTRY_CAP = 30_000_000


def _hamiltonian_action(integrals: "MolecularIntegrals", basis: SectorBasis):
    """Flattened (diag, src, tgt, val) representation of the sector action.

    Cached per (integrals content, sector); falls back to None above the
    memory cap so callers stream term by term instead.
    """
    key = (integrals.content_hash(), basis.n_modes, basis.n_electrons)
    if key in _ACTION_CACHE:
        return _ACTION_CACHE[key]

    one = integrals.one_body_terms()
    two = integrals.two_body_terms()
    estimate = (len(one) + len(two)) * basis.dim
    if estimate > _ACTION_ENTRY_CAP:
        return None

    diag = np.full(basis.dim, complex(integrals.core_energy))
    srcs, tgts, vals = [], [], []
    occupancy = basis.occupation_matrix()
    for p, q, v in one:
        if p == q:
            diag += v * occupancy[:, q]
            continue
        src, tgt, amp = _string_action(basis, [p], [q])
        srcs.append(src)
        tgts.append(tgt)
        vals.append(v * amp)
    for p, q, r, s, v in two:
        src, tgt, amp = _string_action(basis, [p, r], [s, q])
        if len(src) == 0:
            continue
        same = src == tgt
        if np.all(same):
            diag[src] += 0.5 * v * amp
            continue
        srcs.append(src)
        tgts.append(tgt)
        vals.append(0.5 * v * amp)
    if srcs:
        action = (diag, np.concatenate(srcs), np.concatenate(tgts),
                  np.concatenate(vals).astype(np.complex128))
    else:
        empty = np.zeros(0, dtype=np.int64)
        action = (diag, empty, empty, np.zeros(0, dtype=np.complex128))
    if len(_ACTION_CACHE) > 32:
        _ACTION_CACHE.clear()
    _ACTION_CACHE[key] = action
    return action


def apply_hamiltonian(integrals: "MolecularIntegrals", psi: WaveFunction) -> WaveFunction:
    """Matrix-free H|psi> for H = sum h_pq a_p^dag a_q
    + 1/2 sum (pq|rs) a_p^dag a_r^dag a_s a_q + E_core.

    Linear in psi, particle conserving, Hermitian as a map.  The reduction
    order per output index is fixed, so the result is deterministic
    independent of worker count.
    """
    if integrals.n_modes != psi.basis.n_modes:
        raise ValueError(f"integrals have {integrals.n_modes} modes, state has "
                         f"{psi.basis.n_modes}")
    basis = psi.basis
    c = psi.coeffs
    action = _hamiltonian_action(integrals, basis)
    if action is not None:
        diag, src, tgt, val = action
        out = diag * c
        if len(src):
            contrib = val * c[src]
            out += np.bincount(tgt, weights=contrib.real, minlength=basis.dim)
            out = out + 1j * np.bincount(tgt, weights=contrib.imag,
                                         minlength=basis.dim)
        return WaveFunction(basis, out)
    # streaming fallback above the cache cap
    out = integrals.core_energy * c.astype(np.complex128)
    for p, q, v in integrals.one_body_terms():
        apply_one_body(basis, c, p, q, v, out)
    for p, q, r, s, v in integrals.two_body_terms():
        apply_two_body(basis, c, p, q, r, s, 0.5 * v, out)
    return WaveFunction(basis, out)


def expectation(integrals: "MolecularIntegrals", psi: WaveFunction) -> float:
    """<psi|H|psi> / <psi|psi> (real part; H is Hermitian)."""
    hpsi = apply_hamiltonian(integrals, psi)
    return float(np.vdot(psi.coeffs, hpsi.coeffs).real / np.vdot(psi.coeffs, psi.coeffs).real)
