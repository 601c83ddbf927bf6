"""Hamiltonian data containers, model builders, and the plain-text integral format.

Two-body tensors are stored in chemists' notation: g[p,q,r,s] = (pq|rs) is the
coefficient of a_p^dag a_r^dag a_s a_q (with the global 1/2 prefactor applied
at operator-application time).  Tensors are real with the full 8-fold index
symmetry; one-body matrices are Hermitian.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

HERMITICITY_TOL = 1e-12


class IntegralFormatError(Exception):
    """Malformed integral file; message carries the line number."""


def _check_two_body_symmetry(g: np.ndarray, tol: float = HERMITICITY_TOL) -> None:
    perms = [(1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1), (1, 0, 3, 2)]
    for perm in perms:
        if not np.allclose(g, g.transpose(perm), atol=tol, rtol=0.0):
            raise ValueError(f"two-body tensor violates the (pq|rs) symmetry {perm}")


@dataclass
class MolecularIntegrals:
    """Core energy, one-body matrix, and two-body tensor of a fermionic Hamiltonian."""

    core_energy: float
    h: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        self.h = np.asarray(self.h)
        self.g = np.asarray(self.g, dtype=np.float64)
        n = self.h.shape[0]
        if self.h.shape != (n, n):
            raise ValueError(f"one-body matrix must be square, got {self.h.shape}")
        if self.g.shape != (n, n, n, n):
            raise ValueError(f"two-body tensor shape {self.g.shape} does not match N={n}")
        if not np.allclose(self.h, self.h.conj().T, atol=HERMITICITY_TOL, rtol=0.0):
            raise ValueError("one-body matrix is not Hermitian")
        if np.isrealobj(self.h) or np.max(np.abs(self.h.imag)) == 0.0:
            self.h = np.real(self.h).astype(np.float64)
        _check_two_body_symmetry(self.g)

    @property
    def n_modes(self) -> int:
        return self.h.shape[0]

    def one_body_terms(self):
        ps, qs = np.nonzero(self.h)
        return [(int(p), int(q), self.h[p, q]) for p, q in zip(ps, qs)]

    def two_body_terms(self):
        idx = np.nonzero(self.g)
        return [(int(p), int(q), int(r), int(s), float(self.g[p, q, r, s]))
                for p, q, r, s in zip(*idx)]

    def shifted(self, delta: float) -> "MolecularIntegrals":
        return MolecularIntegrals(self.core_energy + delta, self.h.copy(), self.g.copy())

    def content_hash(self) -> str:
        """Stable short hash of the numerical content (provenance column)."""
        m = hashlib.sha256()
        m.update(np.int64(self.n_modes).tobytes())
        m.update(np.float64(self.core_energy).tobytes())
        m.update(np.ascontiguousarray(self.h, dtype=np.float64).tobytes())
        m.update(np.ascontiguousarray(self.g).tobytes())
        return m.hexdigest()[:12]


# ---------------------------------------------------------------------------
# impurity models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RandomEpsilons:
    """Single-particle energies drawn uniformly from [-1,-gap] u [gap,1].

    n_negative fixes how many modes carry negative energy (placement is
    shuffled deterministically from the seed); None draws each sign fairly.
    """

    gap: float = 0.0
    n_negative: Optional[int] = None


@dataclass(frozen=True)
class RandomInteraction:
    """Each symmetry-distinct (pq|rs) on the impurity block uniform in [-strength, strength]."""

    strength: float = 0.5


@dataclass(frozen=True)
class ChemistInteraction:
    """Explicit impurity block in chemists' convention, 8-fold symmetric."""

    tensor: np.ndarray


@dataclass(frozen=True)
class PhysicistInteraction:
    """Explicit impurity amplitudes w[p,q,r,s] of a_p^dag a_q^dag a_r a_s."""

    tensor: np.ndarray


InteractionSpec = Union[None, RandomInteraction, ChemistInteraction, PhysicistInteraction]
EpsilonSpec = Union[Sequence[float], np.ndarray, RandomEpsilons]


@dataclass
class ImpurityModel:
    """Free one-body Hamiltonian plus two-body terms confined to the first M modes.

    epsilons are the single-particle energies of the free part, stored in
    ascending order; free_orbitals holds the matching eigenbasis columns, so
    h = free_orbitals @ diag(epsilons) @ free_orbitals^T.  In the aligned case
    (no hybridization) free_orbitals is a permutation of the identity and h is
    literally diagonal.
    """

    integrals: MolecularIntegrals
    m_impurity: int
    epsilons: np.ndarray
    omega: float
    free_orbitals: np.ndarray

    def __post_init__(self):
        self.epsilons = np.asarray(self.epsilons, dtype=np.float64)
        self.free_orbitals = np.asarray(self.free_orbitals, dtype=np.float64)
        n = self.integrals.n_modes
        if len(self.epsilons) != n:
            raise ValueError("epsilon list length must equal the mode count")
        if np.any(np.diff(self.epsilons) < 0.0):
            raise ValueError("epsilons must be stored in ascending order")
        if np.any(np.abs(self.epsilons) > 1.0 + 1e-12):
            raise ValueError("single-particle energies must lie in [-1, 1]")
        if self.free_orbitals.shape != (n, n):
            raise ValueError("free eigenbasis must be square")
        if not np.allclose(self.free_orbitals.T @ self.free_orbitals, np.eye(n),
                           atol=1e-10, rtol=0.0):
            raise ValueError("free eigenbasis is not orthonormal")
        # the one-body matrix is the free part plus (possibly) an impurity-block
        # quadratic term, e.g. from a hole-frame re-expression
        rebuilt = (self.free_orbitals * self.epsilons) @ self.free_orbitals.T
        residual = np.asarray(self.integrals.h - rebuilt)
        m = self.m_impurity
        off = residual.copy()
        off[:m, :m] = 0.0
        if np.max(np.abs(off)) > 1e-9:
            raise ValueError("epsilons/free_orbitals do not reproduce the one-body "
                             "matrix outside the impurity block")
        m = self.m_impurity
        outside = self.integrals.g.copy()
        outside[:m, :m, :m, :m] = 0.0
        if np.max(np.abs(outside)) > 0.0:
            raise ValueError("two-body support leaks outside the impurity block")

    @property
    def n_modes(self) -> int:
        return self.integrals.n_modes

    @property
    def n_negative(self) -> int:
        return int(np.sum(self.epsilons < 0.0))

    @property
    def aligned(self) -> bool:
        """True when every free eigenmode is a computational mode."""
        return bool(np.all(np.max(np.abs(self.free_orbitals), axis=0) > 1.0 - 1e-12))


def _gap_of(epsilons: np.ndarray) -> float:
    nz = np.abs(epsilons[epsilons != 0.0])
    if len(nz) == 0:
        raise ValueError("free spectrum is identically zero; no gap to record")
    return float(np.min(nz))


def _canonical_quartic(w: np.ndarray) -> dict:
    """Coefficients of a_p^dag a_q^dag a_r a_s on canonical slots p<q, r<s."""
    m = w.shape[0]
    canon = {}
    for a in range(m):
        for b in range(a + 1, m):
            for c in range(m):
                for d in range(c + 1, m):
                    val = w[a, b, c, d] - w[b, a, c, d] - w[a, b, d, c] + w[b, a, d, c]
                    if abs(val) > 0.0:
                        canon[(a, b, c, d)] = val
    return canon


def _two_body_orbit_rep(p, q, r, s):
    return min({(p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
                (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p)})


def chemists_tensor_for_quartic(canon: dict, m: int, tol: float = 1e-10) -> np.ndarray:
    """Real 8-fold-symmetric (pq|rs) tensor representing a quartic operator.

    canon maps canonical slots (a<b, c<d) to the coefficient of
    a_a^dag a_b^dag a_c a_d.  The chemists' representation is not an index
    relabeling: it is found by solving the (tiny) linear system that matches
    every canonical coefficient, parametrized over symmetry orbits.  Raises
    when the operator is not Hermitian or admits no real-orbital
    representation.
    """
    # Hermiticity of the canonical pair matrix; complex tensors are out of scope
    for (a, b, c, d), v in canon.items():
        vh = canon.get((c, d, a, b), 0.0)
        if abs(v - np.conj(vh)) > tol:
            raise ValueError("quartic amplitudes are not Hermitian")
        if abs(np.imag(v)) > tol:
            raise ValueError("complex quartic amplitudes are not supported")

    orbits = {}
    for p in range(m):
        for q in range(m):
            for r in range(m):
                for s in range(m):
                    orbits.setdefault(_two_body_orbit_rep(p, q, r, s), []).append(
                        (p, q, r, s))
    reps = sorted(orbits)
    col = {rep: i for i, rep in enumerate(reps)}

    slots = [(a, b, c, d) for a in range(m) for b in range(a + 1, m)
             for c in range(m) for d in range(c + 1, m)]
    amat = np.zeros((len(slots), len(reps)))
    target = np.zeros(len(slots))
    for row, (a, b, c, d) in enumerate(slots):
        target[row] = np.real(canon.get((a, b, c, d), 0.0))
        # coefficient of b_a^dag b_b^dag b_c b_d produced by 1/2 (pq|rs) a_p+ a_r+ a_s a_q
        for idx, sign in (((a, d, b, c), 0.5), ((b, d, a, c), -0.5),
                          ((a, c, b, d), -0.5), ((b, c, a, d), 0.5)):
            amat[row, col[_two_body_orbit_rep(*idx)]] += sign
    x, *_ = np.linalg.lstsq(amat, target, rcond=None)
    if np.max(np.abs(amat @ x - target)) > tol:
        raise ValueError("quartic operator has no real 8-fold-symmetric "
                         "chemists' representation")
    g = np.zeros((m, m, m, m))
    for rep, members in orbits.items():
        for idx in members:
            g[idx] = x[col[rep]]
    _check_two_body_symmetry(g, tol=tol)
    return g


def chemist_from_physicist(w: np.ndarray) -> np.ndarray:
    """Chemists' (pq|rs) tensor for the operator sum w_pqrs a_p^dag a_q^dag a_r a_s."""
    w = np.asarray(w, dtype=np.float64)
    return chemists_tensor_for_quartic(_canonical_quartic(w), w.shape[0])


def random_two_body(m: int, strength: float, rng: np.random.Generator) -> np.ndarray:
    """Random real 8-fold-symmetric tensor; each distinct (pq|rs) uniform in [-u, u]."""
    g = np.zeros((m, m, m, m))
    seen = set()
    for p in range(m):
        for q in range(m):
            for r in range(m):
                for s in range(m):
                    orbit = {(p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
                             (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p)}
                    key = min(orbit)
                    if key in seen:
                        continue
                    seen.add(key)
                    v = rng.uniform(-strength, strength)
                    for idx in orbit:
                        g[idx] = v
    return g


def random_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-ish random orthogonal matrix, deterministic for a fixed generator state."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def build_impurity_model(n_modes: int, m_impurity: int, epsilon_spec: EpsilonSpec,
                         impurity_spec: InteractionSpec, seed: int = 0,
                         hybridization: Optional[str] = "random") -> ImpurityModel:
    """Free one-body Hamiltonian with prescribed spectrum plus a two-body block
    on the first M modes.

    hybridization=None keeps the free part literally diagonal (aligned case:
    the free eigenmodes are the computational modes, so a small impurity block
    commutes with everything and the model is classical).  The default
    "random" places the free eigenbasis in general position relative to the
    impurity modes, which is what makes small impurities entangle with the
    bath; the prescribed epsilons remain the exact free spectrum either way.

    Deterministic for a fixed seed.  Physicists'-convention input is converted
    by index permutation (see chemist_from_physicist); explicit chemists' input
    is validated against the 8-fold symmetry.
    """
    if not 0 <= m_impurity <= n_modes:
        raise ValueError("need 0 <= M <= N")
    if hybridization not in (None, "none", "random"):
        raise ValueError(f"unknown hybridization {hybridization!r}")
    rng = np.random.default_rng(seed)

    if isinstance(epsilon_spec, RandomEpsilons):
        gap = float(epsilon_spec.gap)
        if not 0.0 <= gap < 1.0:
            raise ValueError("gap must lie in [0, 1)")
        mags = rng.uniform(gap if gap > 0.0 else 1e-6, 1.0, size=n_modes)
        if epsilon_spec.n_negative is None:
            signs = np.where(rng.random(n_modes) < 0.5, -1.0, 1.0)
        else:
            k = epsilon_spec.n_negative
            if not 0 <= k <= n_modes:
                raise ValueError("n_negative out of range")
            signs = np.ones(n_modes)
            signs[rng.permutation(n_modes)[:k]] = -1.0
        epsilons = mags * signs
    else:
        epsilons = np.asarray(epsilon_spec, dtype=np.float64)
        if len(epsilons) != n_modes:
            raise ValueError("explicit epsilon list has the wrong length")
        if np.any(np.abs(epsilons) > 1.0):
            raise ValueError("single-particle energies must lie in [-1, 1]")

    order = np.argsort(epsilons, kind="stable")
    epsilons = epsilons[order]
    if hybridization == "random":
        basis = random_orthogonal(n_modes, rng)
        h = (basis * epsilons) @ basis.T
        h = 0.5 * (h + h.T)
    else:
        basis = np.zeros((n_modes, n_modes))
        basis[order, np.arange(n_modes)] = 1.0
        h = (basis * epsilons) @ basis.T

    m = m_impurity
    if impurity_spec is None:
        block = np.zeros((m, m, m, m))
    elif isinstance(impurity_spec, RandomInteraction):
        block = random_two_body(m, impurity_spec.strength, rng)
    elif isinstance(impurity_spec, ChemistInteraction):
        block = np.asarray(impurity_spec.tensor, dtype=np.float64)
        if block.shape != (m, m, m, m):
            raise ValueError("impurity tensor shape must be (M, M, M, M)")
        _check_two_body_symmetry(block, tol=1e-10)
    elif isinstance(impurity_spec, PhysicistInteraction):
        w = np.asarray(impurity_spec.tensor, dtype=np.float64)
        if w.shape != (m, m, m, m):
            raise ValueError("impurity tensor shape must be (M, M, M, M)")
        block = chemist_from_physicist(w)
    else:
        raise TypeError(f"unsupported impurity spec {type(impurity_spec)!r}")

    g = np.zeros((n_modes,) * 4)
    g[:m, :m, :m, :m] = block
    integrals = MolecularIntegrals(0.0, h, g)
    return ImpurityModel(integrals, m_impurity, epsilons, _gap_of(epsilons), basis)


# ---------------------------------------------------------------------------
# oligomers and spin doubling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OligomerCoupling:
    """One-body block inserted between adjacent copies, scaled."""

    block: np.ndarray
    scale: float = 1.0


def build_oligomer(monomer: MolecularIntegrals, k: int,
                   coupling: Optional[OligomerCoupling] = None) -> MolecularIntegrals:
    """k block-diagonal copies of a monomer, optionally coupled between neighbours.

    coupling = None reproduces exactly noninteracting copies; the coupling
    block sits on the (i, i+1) one-body off-diagonal and is Hermitized.
    """
    if k < 1:
        raise ValueError("need at least one copy")
    nm = monomer.n_modes
    n = k * nm
    if n > 63:
        raise ValueError(f"{k} copies of {nm} modes exceed the 63-mode register")
    if k == 1 and coupling is None:
        return monomer

    h = np.zeros((n, n), dtype=monomer.h.dtype)
    g = np.zeros((n,) * 4)
    for i in range(k):
        sl = slice(i * nm, (i + 1) * nm)
        h[sl, sl] = monomer.h
        g[sl, sl, sl, sl] = monomer.g
    if coupling is not None:
        blk = np.asarray(coupling.block, dtype=np.float64)
        if blk.shape != (nm, nm):
            raise ValueError("coupling block must match the monomer mode count")
        for i in range(k - 1):
            a = slice(i * nm, (i + 1) * nm)
            b = slice((i + 1) * nm, (i + 2) * nm)
            h[a, b] += coupling.scale * blk
            h[b, a] += coupling.scale * blk.conj().T
    return MolecularIntegrals(k * monomer.core_energy, h, g)


def spin_double(spatial: MolecularIntegrals) -> MolecularIntegrals:
    """Duplicate a spatial model into spin orbitals (alpha block then beta block).

    Coulomb couples all spin pairs; exchange between opposite spins vanishes
    automatically because a chemists' pair (pq| carries a single spin.
    """
    n = spatial.n_modes
    h = np.zeros((2 * n, 2 * n), dtype=spatial.h.dtype)
    h[:n, :n] = spatial.h
    h[n:, n:] = spatial.h
    g = np.zeros((2 * n,) * 4)
    for sa in (0, 1):
        for sb in (0, 1):
            g[sa * n:(sa + 1) * n, sa * n:(sa + 1) * n,
              sb * n:(sb + 1) * n, sb * n:(sb + 1) * n] = spatial.g
    return MolecularIntegrals(spatial.core_energy, h, g)


# ---------------------------------------------------------------------------
# integral file format
# ---------------------------------------------------------------------------
#
# UTF-8 text, one record per line, 1-based indices:
#     NORB=<N> NELEC=<n>      required header (first non-comment line)
#     p q 0 0 v               one-body h_pq
#     0 0 0 0 v               core energy
#     p q r s v               two-body (pq|rs)
# '#' begins a comment.  Unlisted entries are zero; symmetry-equivalent
# entries may be omitted.  Duplicate records: last wins, counted as warnings.

@dataclass
class IntegralFile:
    """Parse result: integrals plus header electron count and duplicate count."""

    integrals: MolecularIntegrals
    n_electrons: int
    duplicates: int = 0
    warnings: list = field(default_factory=list)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _two_body_orbit(p, q, r, s):
    return {(p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
            (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p)}


def write_integrals(integrals: MolecularIntegrals, path, *, n_electrons: int) -> None:
    """Write the canonical (symmetry-reduced) record list; round trip is value-exact."""
    n = integrals.n_modes
    lines = [f"NORB={n} NELEC={n_electrons}"]
    lines.append(f"0 0 0 0 {_fmt(integrals.core_energy)}")
    for p in range(n):
        for q in range(p, n):
            v = integrals.h[p, q]
            if v != 0.0:
                lines.append(f"{p + 1} {q + 1} 0 0 {_fmt(v)}")
    emitted = set()
    idx = np.nonzero(integrals.g)
    for p, q, r, s in zip(*idx):
        key = min(_two_body_orbit(int(p), int(q), int(r), int(s)))
        if key in emitted:
            continue
        emitted.add(key)
        kp, kq, kr, ks = key
        lines.append(f"{kp + 1} {kq + 1} {kr + 1} {ks + 1} {_fmt(integrals.g[key])}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_integrals(path) -> IntegralFile:
    """Parse an integral file; errors carry line numbers, duplicates win last."""
    with open(path, encoding="utf-8") as fh:
        raw = fh.readlines()

    header = None
    records = []  # (lineno, p, q, r, s, value)
    for lineno, line in enumerate(raw, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if header is None:
            parts = dict()
            for tok in text.replace(",", " ").split():
                if "=" not in tok:
                    raise IntegralFormatError(
                        f"line {lineno}: expected header 'NORB=<N> NELEC=<n>', got {text!r}")
                k, _, v = tok.partition("=")
                parts[k.upper()] = v
            try:
                header = (int(parts["NORB"]), int(parts["NELEC"]))
            except (KeyError, ValueError) as exc:
                raise IntegralFormatError(f"line {lineno}: bad header {text!r}") from exc
            continue
        toks = text.split()
        if len(toks) != 5:
            raise IntegralFormatError(f"line {lineno}: expected 'p q r s value', got {text!r}")
        try:
            p, q, r, s = (int(t) for t in toks[:4])
            v = float(toks[4])
        except ValueError as exc:
            raise IntegralFormatError(f"line {lineno}: unparsable record {text!r}") from exc
        records.append((lineno, p, q, r, s, v))

    if header is None:
        raise IntegralFormatError("line 1: missing 'NORB=<N> NELEC=<n>' header")
    n, nelec = header
    if n < 1 or not 0 <= nelec <= n:
        raise IntegralFormatError(f"line 1: inconsistent header NORB={n} NELEC={nelec}")

    core = 0.0
    h = np.zeros((n, n))
    g = np.zeros((n,) * 4)
    seen = {}
    duplicates = 0
    warnings = []
    for lineno, p, q, r, s, v in records:
        for name, val in (("p", p), ("q", q), ("r", r), ("s", s)):
            if val < 0 or val > n:
                raise IntegralFormatError(f"line {lineno}: index {name}={val} outside 1..{n}")
        if p == 0 and q == 0 and r == 0 and s == 0:
            key = ("core",)
        elif r == 0 and s == 0:
            if p == 0 or q == 0:
                raise IntegralFormatError(f"line {lineno}: one-body record needs p,q >= 1")
            key = ("h", min(p, q) - 1, max(p, q) - 1)
        elif 0 in (p, q, r, s):
            raise IntegralFormatError(f"line {lineno}: mixed zero/nonzero indices")
        else:
            key = ("g",) + min(_two_body_orbit(p - 1, q - 1, r - 1, s - 1))
        if key in seen:
            duplicates += 1
            warnings.append(f"line {lineno}: duplicate of line {seen[key]}; last value wins")
        seen[key] = lineno
        if key[0] == "core":
            core = v
        elif key[0] == "h":
            h[p - 1, q - 1] = v
            h[q - 1, p - 1] = v
        else:
            for idx in _two_body_orbit(p - 1, q - 1, r - 1, s - 1):
                g[idx] = v
    try:
        integrals = MolecularIntegrals(core, h, g)
    except ValueError as exc:
        raise IntegralFormatError(f"assembled integrals invalid: {exc}") from exc
    return IntegralFile(integrals, nelec, duplicates, warnings)
