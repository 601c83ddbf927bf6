"""Impurity-model machinery: particle-hole frame, low-energy truncation,
active-mode selection with a certified overlap floor, excitation projection,
and guiding-state overlap accounting.

All constructions work in the free eigenbasis of the model (ascending
single-particle energy; negative-energy modes first).  The certified bound is
basis-honest: whatever orthonormal modes end up frozen, the reported bound is
computed from the actual occupations of those modes, so the inequality

    achieved_overlap >= 1 - delta_bound

holds regardless of how good the selection policy was.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .analysis import OneBodyRDM
from .fock import SectorBasis, WaveFunction, enumerate_sector
from .model import ImpurityModel, MolecularIntegrals
from .states import SlaterDeterminant, from_mode_basis, to_mode_basis

INTERSECTION_TOL = 1e-10


class FrameError(Exception):
    """Particle-hole re-expression is not representable for this model."""


class ProjectionError(Exception):
    """Projection annihilated the state; carries the (useless) bound."""

    def __init__(self, delta_bound: float):
        super().__init__(f"projection produced the zero vector; the certified bound "
                         f"delta >= 1 carries no information (delta_bound="
                         f"{delta_bound:.3f})")
        self.delta_bound = delta_bound


# ---------------------------------------------------------------------------
# normal ordering of small operator products (Wick bookkeeping)
# ---------------------------------------------------------------------------

def _normal_order(coeff: float, ops: tuple) -> dict:
    """Normal order a product of (mode, is_creation) factors.

    Returns {(creators_tuple, annihilators_tuple): coefficient} with both
    tuples sorted ascending; anticommutation signs and contraction terms are
    accumulated exactly.
    """
    out: dict = {}
    stack = [(coeff, list(ops))]
    while stack:
        c, term = stack.pop()
        # find an annihilator immediately left of a creator
        swap_at = None
        for i in range(len(term) - 1):
            if (not term[i][1]) and term[i + 1][1]:
                swap_at = i
                break
        if swap_at is None:
            # sort creators and annihilators ascending, tracking parity
            ncre = sum(1 for _, dag in term if dag)
            cre = [m for m, dag in term if dag]
            ann = [m for m, dag in term if not dag]
            sign = 1

            def sorted_sign(lst):
                s = 1
                arr = list(lst)
                for i in range(len(arr)):
                    for j in range(len(arr) - 1 - i):
                        if arr[j] > arr[j + 1]:
                            arr[j], arr[j + 1] = arr[j + 1], arr[j]
                            s = -s
                return arr, s

            cre_sorted, s1 = sorted_sign(cre)
            ann_sorted, s2 = sorted_sign(ann)
            if len(set(cre_sorted)) != len(cre_sorted) or \
               len(set(ann_sorted)) != len(ann_sorted):
                continue  # repeated fermion operator: identically zero
            key = (tuple(cre_sorted), tuple(ann_sorted))
            out[key] = out.get(key, 0.0) + c * s1 * s2
            continue
        i = swap_at
        a_mode, c_mode = term[i][0], term[i + 1][0]
        swapped = term[:i] + [term[i + 1], term[i]] + term[i + 2:]
        stack.append((-c, swapped))
        if a_mode == c_mode:
            contracted = term[:i] + term[i + 2:]
            stack.append((c, contracted))
    return {k: v for k, v in out.items() if abs(v) > 1e-15}


def _hole_image(ops, holes: set):
    """Substitute a_j <-> a_j^dag on hole modes (same coefficient)."""
    return tuple((m, (not dag) if m in holes else dag) for m, dag in ops)


def _reexpress_in_hole_frame(integrals: MolecularIntegrals, holes: set):
    """Wick-reordered (constant, one-body, chemists' two-body) in the b frame.

    Raises FrameError when a particle-number-violating term survives, i.e.
    when the b-frame Hamiltonian is not expressible as MolecularIntegrals.
    """
    n = integrals.n_modes
    collected: dict = {}

    def add(coeff, ops):
        for key, val in _normal_order(coeff, _hole_image(ops, holes)).items():
            collected[key] = collected.get(key, 0.0) + val

    for p, q, v in integrals.one_body_terms():
        add(float(np.real(v)), ((p, True), (q, False)))
    for p, q, r, s, v in integrals.two_body_terms():
        add(0.5 * v, ((p, True), (r, True), (s, False), (q, False)))

    const = integrals.core_energy
    h = np.zeros((n, n))
    canon: dict = {}  # coefficients of b_a^dag b_b^dag b_c b_d, a<b, c<d
    for (cre, ann), v in collected.items():
        if abs(v) < 1e-14:
            continue
        if len(cre) == 0 and len(ann) == 0:
            const += v
        elif len(cre) == 1 and len(ann) == 1:
            h[cre[0], ann[0]] += v
        elif len(cre) == 2 and len(ann) == 2:
            key = (cre[0], cre[1], ann[0], ann[1])
            canon[key] = canon.get(key, 0.0) + v
        else:
            raise FrameError(
                f"hole transform produced a particle-number-violating term "
                f"{len(cre)} creators / {len(ann)} annihilators; the b-frame "
                f"Hamiltonian is not a number-conserving two-body operator")
    h = 0.5 * (h + h.T)
    g = np.zeros((n, n, n, n))
    if canon:
        from .model import chemists_tensor_for_quartic
        m_block = 1 + max(max(k) for k in canon)
        try:
            g[:m_block, :m_block, :m_block, :m_block] = \
                chemists_tensor_for_quartic(canon, m_block)
        except ValueError as exc:
            raise FrameError(str(exc)) from exc
    return const, h, g


# ---------------------------------------------------------------------------
# particle-hole frame
# ---------------------------------------------------------------------------

@dataclass
class ParticleHoleFrame:
    """Hole-transformed view of an impurity model.

    The b-vacuum (all negative free eigenmodes filled) is the reference
    determinant.  transformed is the re-expressed model when the hole frame is
    number conserving (aligned models); None otherwise, with the reason kept.
    """

    model: ImpurityModel
    n_electrons: int
    n_negative: int
    energy_shift: float
    reference_determinant: SlaterDeterminant
    transformed: Optional[ImpurityModel]
    transform_note: str = ""

    @property
    def free_orbitals(self) -> np.ndarray:
        return self.model.free_orbitals


def particle_hole(model: ImpurityModel, n_electrons: int) -> ParticleHoleFrame:
    """Build the hole frame: b_j = a_j^dag on negative free eigenmodes.

    energy_shift is the summed negative free energy, so the original spectrum
    equals the transformed spectrum plus the shift (checked by the dense
    oracle in the tests, over the whole Fock space since the hole frame
    reshuffles particle-number sectors).
    """
    nneg = model.n_negative
    reference = SlaterDeterminant(model.free_orbitals[:, :nneg])
    shift = float(np.sum(model.epsilons[model.epsilons < 0.0]))

    transformed = None
    note = ""
    if nneg == 0:
        transformed = model  # no holes: the transform is the identity
    elif model.aligned:
        # hole modes are the computational coordinates with negative energy
        mode_energy = np.real(np.diag(model.integrals.h))
        holes = {j for j in range(model.n_modes) if mode_energy[j] < 0.0}
        try:
            const, h, g = _reexpress_in_hole_frame(model.integrals, holes)
            eps_abs = np.sort(np.abs(model.epsilons))
            residual = h - np.diag(np.abs(mode_energy))
            order = np.argsort(np.abs(mode_energy), kind="stable")
            basis = np.zeros((model.n_modes, model.n_modes))
            basis[order, np.arange(model.n_modes)] = 1.0
            # quadratic corrections from Wick live on the impurity block, so the
            # transformed free part is diag(|eps|) plus an impurity one-body term
            m = model.m_impurity
            off_block = residual.copy()
            off_block[:m, :m] = 0.0
            if np.max(np.abs(off_block)) > 1e-12:
                raise FrameError("hole-frame one-body correction leaks off the "
                                 "impurity block")
            transformed = ImpurityModel(
                MolecularIntegrals(const - shift, h, g), model.m_impurity,
                eps_abs, model.omega, basis)
        except FrameError as exc:
            note = str(exc)
    else:
        note = ("free eigenbasis is hybridized with the impurity; the hole-frame "
                "Hamiltonian has number-violating terms and is kept implicit")
    return ParticleHoleFrame(model, n_electrons, nneg, shift, reference,
                             transformed, note)


def frame_covariance(psi: WaveFunction, frame: ParticleHoleFrame) -> OneBodyRDM:
    """Covariance matrix <b_j^dag b_k> of a fixed-number state, eigen ordering.

    Computed directly from b_k|psi> Gram matrices (independent of the
    analysis-module RDM path).  Mixed negative/positive blocks vanish for
    number-conserving states because they are anomalous correlators.
    """
    basis = psi.basis
    n = basis.n_modes
    nneg = frame.n_negative
    v = frame.free_orbitals
    psi = psi.normalized()
    gamma = np.zeros((n, n), dtype=np.complex128)

    from .fock import _annihilate, _create

    def mode_apply(vec_coeffs, column, create):
        """a(x) or a^dag(x) applied to the sector state, x = column."""
        target = enumerate_sector(n, basis.n_electrons + (1 if create else -1))
        out = np.zeros(target.dim, dtype=np.complex128)
        for p in range(n):
            wgt = column[p] if create else np.conj(column[p])
            if abs(wgt) < 1e-15:
                continue
            op = _create if create else _annihilate
            bits, amps = op(basis.states, vec_coeffs, p)
            np.add.at(out, target.indices_of(bits), wgt * amps)
        return out

    if nneg and basis.n_electrons < n:
        cols = np.column_stack([mode_apply(psi.coeffs, v[:, j], create=True)
                                for j in range(nneg)])
        gamma[:nneg, :nneg] = cols.conj().T @ cols
    elif nneg:
        gamma[:nneg, :nneg] = 0.0  # full sector: b_j = a^dag(v_j) annihilates it
    if n - nneg and basis.n_electrons > 0:
        cols = np.column_stack([mode_apply(psi.coeffs, v[:, j], create=False)
                                for j in range(nneg, n)])
        gamma[nneg:, nneg:] = cols.conj().T @ cols
    gamma = 0.5 * (gamma + gamma.conj().T)
    return OneBodyRDM(gamma)


# ---------------------------------------------------------------------------
# low-energy truncation
# ---------------------------------------------------------------------------

def _impurity_term_count(model: ImpurityModel) -> int:
    from .model import _two_body_orbit
    seen = set()
    for p, q, r, s, _ in model.integrals.two_body_terms():
        seen.add(min(_two_body_orbit(p, q, r, s)))
    return max(1, len(seen))


def truncate_low_energy(model: ImpurityModel, eps: float,
                        m_cut: Optional[int] = None) -> ImpurityModel:
    """Remove bath modes with |energy| <= eps/m_cut, frozen at their
    noninteracting occupation (negative modes fold their energy into the core).

    m_cut defaults to the impurity interaction term count.  Only aligned bath
    modes can be removed coordinate-wise; a hybridized model with sub-threshold
    energies is rejected.
    """
    if eps <= 0.0:
        raise ValueError("target precision must be positive")
    cut = eps / float(m_cut if m_cut is not None else _impurity_term_count(model))
    if not np.any(np.abs(model.epsilons) <= cut):
        return model
    if not model.aligned:
        raise FrameError("low-energy truncation needs coordinate-aligned bath modes")

    mode_energy = np.real(np.diag(model.integrals.h))
    m = model.m_impurity
    drop = [j for j in range(model.n_modes)
            if j >= m and abs(mode_energy[j]) <= cut]
    if not drop:
        return model
    keep = [j for j in range(model.n_modes) if j not in set(drop)]
    folded = sum(mode_energy[j] for j in drop if mode_energy[j] < 0.0)

    h = model.integrals.h[np.ix_(keep, keep)]
    g = model.integrals.g[np.ix_(keep, keep, keep, keep)]
    integrals = MolecularIntegrals(model.integrals.core_energy + folded, h, g)
    eps_kept = np.sort(np.real(np.diag(h)))
    order = np.argsort(np.real(np.diag(h)), kind="stable")
    basis = np.zeros((len(keep), len(keep)))
    basis[order, np.arange(len(keep))] = 1.0
    nz = np.abs(eps_kept[eps_kept != 0.0])
    omega = float(np.min(nz)) if len(nz) else model.omega
    return ImpurityModel(integrals, m, eps_kept, omega, basis)


# ---------------------------------------------------------------------------
# active-mode selection with certified bound
# ---------------------------------------------------------------------------

@dataclass
class ActiveSelection:
    """Orthonormal selection basis split into active and frozen columns.

    Columns are ordered [active..., frozen-filled..., frozen-empty...]; each
    column lies entirely in the negative- or positive-energy subspace of the
    free Hamiltonian (column_is_negative).  delta_bound is the certified
    overlap loss sum(sqrt(1-occ)) over frozen-filled plus sum(sqrt(occ)) over
    frozen-empty, evaluated in this basis.
    """

    basis: np.ndarray                 # (N, N) orthonormal
    n_active: int
    frozen_filled: tuple              # column indices (I minus)
    frozen_empty: tuple               # column indices (I plus)
    delta_bound: float
    column_occupations: np.ndarray
    column_is_negative: np.ndarray
    n_negative: int
    m_impurity: int

    @property
    def active_columns(self) -> np.ndarray:
        return self.basis[:, :self.n_active]


def _branch_split(eigvecs: np.ndarray, impurity_rows: int):
    """Split a sign-definite eigenmode span into impurity-row range and null parts.

    Returns (completion, bath_like): completion spans the impurity-row
    components (rank <= M), bath_like is orthogonal to every impurity
    coordinate (the intersection with the impurity-free subspace).
    """
    if eigvecs.shape[1] == 0:
        z = eigvecs.reshape(eigvecs.shape[0], 0)
        return z, z
    block = eigvecs[:impurity_rows, :]
    u, s, vh = np.linalg.svd(block, full_matrices=True)
    svals = np.zeros(eigvecs.shape[1])
    svals[:len(s)] = s
    row_combos = vh.conj().T[:, svals > INTERSECTION_TOL]
    null_combos = vh.conj().T[:, svals <= INTERSECTION_TOL]
    return eigvecs @ row_combos, eigvecs @ null_combos


def select_active(rdm: OneBodyRDM, model: ImpurityModel, n_electrons: int,
                  n_active: int) -> ActiveSelection:
    """Choose K modes to keep active; freeze the rest empty or filled.

    The impurity-free parts of the negative/positive free-eigenmode subspaces
    are diagonalized against the state's RDM; modes with occupations nearest
    one are frozen filled, nearest zero frozen empty, splitting the freeze
    budget evenly with the remainder going to the branch with the smaller
    marginal bound contribution.  The impurity-row completions always stay
    active, so the certified bound only ever freezes impurity-commuting modes.
    """
    n = model.n_modes
    k = n_active
    m = model.m_impurity
    if k > n:
        raise ValueError(f"cannot keep {k} active modes out of {n}")
    if k < 2 * m:
        raise ValueError(f"active count {k} below 2M = {2 * m}; impurity modes "
                         f"could not stay active")
    if rdm.n_modes != n:
        raise ValueError("RDM dimension does not match the model")

    nneg = model.n_negative
    v = model.free_orbitals
    comp_neg, bath_neg = _branch_split(v[:, :nneg], m)
    comp_pos, bath_pos = _branch_split(v[:, nneg:], m)

    gamma = rdm.gamma

    def branch_modes(cols):
        if cols.shape[1] == 0:
            return cols, np.zeros(0)
        block = cols.conj().T @ gamma @ cols
        occ, combos = np.linalg.eigh(0.5 * (block + block.conj().T))
        return cols @ combos, np.clip(np.real(occ), 0.0, 1.0)

    neg_modes, neg_occ = branch_modes(bath_neg)     # freeze candidates, filled side
    pos_modes, pos_occ = branch_modes(bath_pos)     # freeze candidates, empty side

    # freeze orders: negative branch by descending occupation (closest to 1
    # first), positive branch ascending (closest to 0 first)
    neg_order = np.argsort(-neg_occ, kind="stable")
    pos_order = np.argsort(pos_occ, kind="stable")
    d_neg, d_pos = len(neg_order), len(pos_order)

    budget = n - k
    if budget > d_neg + d_pos:
        raise ValueError(f"freeze budget {budget} exceeds the {d_neg + d_pos} "
                         f"impurity-commuting modes; lower the active count floor")
    # even split; odd remainder goes to the branch whose next freeze costs less
    f_neg = budget // 2
    if budget % 2:
        base = budget // 2
        cost_neg = math.sqrt(max(0.0, 1.0 - neg_occ[neg_order[base]])) \
            if base < d_neg else math.inf
        cost_pos = math.sqrt(max(0.0, pos_occ[pos_order[base]])) \
            if base < d_pos else math.inf
        if cost_neg <= cost_pos:
            f_neg += 1
    # cap by branch sizes, overflow to the other branch
    f_neg = min(d_neg, max(budget - d_pos, f_neg))
    f_pos = budget - f_neg

    frozen_neg_ids = list(neg_order[:f_neg])
    kept_neg_ids = [i for i in range(d_neg) if i not in set(frozen_neg_ids)]
    frozen_pos_ids = list(pos_order[:f_pos])
    kept_pos_ids = [i for i in range(d_pos) if i not in set(frozen_pos_ids)]

    def take(modes, ids):
        return modes[:, ids] if len(ids) else modes[:, :0]

    frozen_filled_cols = take(neg_modes, frozen_neg_ids)
    frozen_empty_cols = take(pos_modes, frozen_pos_ids)
    basis = np.hstack([comp_neg, comp_pos, take(neg_modes, kept_neg_ids),
                       take(pos_modes, kept_pos_ids),
                       frozen_filled_cols, frozen_empty_cols])
    if basis.shape != (n, n):
        raise AssertionError("selection basis is not square; branch bookkeeping bug")
    if np.iscomplexobj(basis) and np.max(np.abs(basis.imag)) == 0.0:
        basis = np.real(basis)

    n_act = n - budget
    filled = tuple(range(n_act, n_act + f_neg))
    empty = tuple(range(n_act + f_neg, n))

    occ_all = np.real(np.einsum("pi,pq,qi->i", basis.conj(), gamma, basis))
    occ_all = np.clip(occ_all, 0.0, 1.0)
    delta = float(np.sum(np.sqrt(1.0 - occ_all[list(filled)]))
                  + np.sum(np.sqrt(occ_all[list(empty)])))

    negcount = comp_neg.shape[1]
    tags = ([True] * negcount + [False] * comp_pos.shape[1]
            + [True] * len(kept_neg_ids) + [False] * len(kept_pos_ids)
            + [True] * f_neg + [False] * f_pos)
    return ActiveSelection(basis, n_act, filled, empty, delta, occ_all,
                           np.array(tags, dtype=bool), nneg, m)


@dataclass
class ProjectionResult:
    state: WaveFunction
    achieved_overlap: float
    delta_bound: float


def _freeze_mask(basis: SectorBasis, filled: tuple, empty: tuple) -> np.ndarray:
    states = basis.states
    ok = np.ones(basis.dim, dtype=bool)
    for j in filled:
        ok &= ((states >> j) & 1) == 1
    for j in empty:
        ok &= ((states >> j) & 1) == 0
    return ok


def project_excitations(psi: WaveFunction, sel: ActiveSelection) -> ProjectionResult:
    """Zero every amplitude violating the freezes (in the selection basis),
    renormalize, and rotate back.

    The returned overlap |<projected|psi>| equals the surviving norm and is
    guaranteed to be at least 1 - delta_bound.
    """
    c_sel = to_mode_basis(psi.normalized(), sel.basis)
    mask = _freeze_mask(c_sel.basis, sel.frozen_filled, sel.frozen_empty)
    surv = np.where(mask, c_sel.coeffs, 0.0)
    norm = float(np.linalg.norm(surv))
    if norm < 1e-14:
        raise ProjectionError(sel.delta_bound)
    achieved = float(abs(np.vdot(c_sel.coeffs, surv)) / norm)
    projected = from_mode_basis(WaveFunction(c_sel.basis, surv / norm), sel.basis)
    return ProjectionResult(projected, achieved, sel.delta_bound)


def factor_projected_state(psi: WaveFunction, sel: ActiveSelection):
    """Factor the projected state as (active-space state) wedge (frozen determinant).

    The determinant occupies exactly the frozen-filled selection columns; the
    active factor lives on the first n_active selection columns.  Returns
    (phi_active, frozen_determinant, achieved_overlap).
    """
    c_sel = to_mode_basis(psi.normalized(), sel.basis)
    mask = _freeze_mask(c_sel.basis, sel.frozen_filled, sel.frozen_empty)
    surv = np.where(mask, c_sel.coeffs, 0.0)
    norm = float(np.linalg.norm(surv))
    if norm < 1e-14:
        raise ProjectionError(sel.delta_bound)
    achieved = float(abs(np.vdot(c_sel.coeffs, surv)) / norm)
    surv = surv / norm

    k = sel.n_active
    n_frozen_filled = len(sel.frozen_filled)
    n_act_elec = psi.basis.n_electrons - n_frozen_filled
    if n_act_elec < 0:
        raise ValueError("more frozen-filled modes than electrons")
    active_basis = enumerate_sector(k, n_act_elec)
    filled_bits = 0
    for j in sel.frozen_filled:
        filled_bits |= 1 << j
    sector = c_sel.basis
    phi = np.zeros(active_basis.dim, dtype=np.complex128)
    source_bits = active_basis.states | filled_bits
    phi[:] = surv[sector.indices_of(source_bits)]
    # frozen-filled columns sit above every active column, so no wedge sign
    phi_active = WaveFunction(active_basis, phi)
    frozen_det = SlaterDeterminant(sel.basis[:, list(sel.frozen_filled)])
    return phi_active, frozen_det, achieved


def max_projected_excitations(phi_active: WaveFunction, sel: ActiveSelection,
                              support_tol: float = 1e-13) -> int:
    """Largest hole-frame excitation number on the support of the factored state.

    Well defined because every selection column has a definite free-energy
    sign: excitations = (negative-subspace holes) + (positive-subspace
    particles).
    """
    neg_active = sel.column_is_negative[:sel.n_active]
    occ = phi_active.basis.occupation_matrix()
    weights = np.abs(phi_active.coeffs) > support_tol
    if not np.any(weights):
        raise ValueError("state has no support above the tolerance")
    occ = occ[weights]
    n_neg_occupied = occ[:, neg_active].sum(axis=1) + len(sel.frozen_filled)
    n_pos_occupied = occ[:, ~neg_active].sum(axis=1)
    holes = sel.n_negative - n_neg_occupied
    return int(np.max(holes + n_pos_occupied))


def mixed_guiding_overlap(psi: WaveFunction, k_exc: int,
                          frame: ParticleHoleFrame):
    """Overlap with the maximally mixed state over at most k_exc excitations.

    V spans every Fock state (any particle number) with at most k_exc
    hole-frame excitations relative to the reference determinant; returns
    (<psi|P_V|psi> / dim V, dim V).
    """
    n = psi.basis.n_modes
    if not 0 <= k_exc <= n:
        raise ValueError("excitation cap outside 0..N")
    c_eig = to_mode_basis(psi.normalized(), frame.free_orbitals)
    states = c_eig.basis.states
    neg_mask = (1 << frame.n_negative) - 1
    holes = frame.n_negative - np.bitwise_count(states & neg_mask)
    particles = np.bitwise_count(states & ~np.int64(neg_mask))
    exc = holes + particles
    weight = float(np.sum(np.abs(c_eig.coeffs[exc <= k_exc]) ** 2))
    dim_v = sum(math.comb(n, j) for j in range(k_exc + 1))
    return weight / dim_v, dim_v


# ---------------------------------------------------------------------------
# partial number statistics
# ---------------------------------------------------------------------------

@dataclass
class PartialNumberStats:
    """Block sums of the sorted hole-frame occupation spectrum.

    Blocks of size block_size are compared against the fitted envelope
    c0 * M * log(2/omega) * exp(-s); reporting only.
    """

    block_size: int
    rows: list            # (s, block_sum, reference)
    fitted_c0: float
    m_impurity: int
    omega: float


def partial_number_stats(rdm: OneBodyRDM, model: ImpurityModel) -> PartialNumberStats:
    if model.omega <= 0.0:
        raise ValueError("model gap must be positive")
    sigma = rdm.occupations()
    q = int(math.ceil(14.0 * model.m_impurity * math.log(2.0 / model.omega)))
    scale = model.m_impurity * math.log(2.0 / model.omega)
    sums = []
    s = 1
    for start in range(0, len(sigma), q):
        sums.append((s, float(np.sum(sigma[start:start + q]))))
        s += 1
    c0 = max((val * math.exp(s) / scale for s, val in sums), default=0.0)
    rows = [(s, val, c0 * scale * math.exp(-s)) for s, val in sums]
    return PartialNumberStats(q, rows, c0, model.m_impurity, model.omega)
