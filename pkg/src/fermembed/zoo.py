"""Shipped model instances used by the tests, the docs, and the harness.

Every entry is deterministic (fixed seeds) so regression values pinned in the
test suite stay meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (ImpurityModel, MolecularIntegrals, OligomerCoupling,
                    RandomEpsilons, RandomInteraction, build_impurity_model,
                    build_oligomer)


@dataclass(frozen=True)
class ShippedModel:
    name: str
    model: ImpurityModel
    n_electrons: int

    @property
    def integrals(self) -> MolecularIntegrals:
        return self.model.integrals


def impurity8() -> ShippedModel:
    """8-mode, M=2 gapped impurity instance; the workbench default."""
    m = build_impurity_model(8, 2, RandomEpsilons(gap=0.25, n_negative=4),
                             RandomInteraction(0.5), seed=7)
    return ShippedModel("impurity8", m, 4)


def general6() -> ShippedModel:
    """6-mode model with two-body terms on every mode (M = N)."""
    m = build_impurity_model(6, 6, RandomEpsilons(gap=0.05, n_negative=3),
                             RandomInteraction(0.3), seed=11)
    return ShippedModel("general6", m, 3)


def monomer4() -> ShippedModel:
    """4-mode interacting monomer; the oligomer building block.

    The interaction is strong enough that the mean-field overlap sits visibly
    below one, so overlap decay across oligomer copies is observable.
    """
    m = build_impurity_model(4, 2, RandomEpsilons(gap=0.3, n_negative=2),
                             RandomInteraction(2.5), seed=3)
    return ShippedModel("monomer4", m, 2)


def aligned6() -> ShippedModel:
    """Aligned (literally diagonal free part) 6-mode model with a straddling
    two-mode impurity; exercises the particle-hole re-expression."""
    eps = [-0.8, 0.5, -0.4, 0.9, -0.6, 0.7]
    m = build_impurity_model(6, 2, eps, RandomInteraction(0.8), seed=13,
                             hybridization=None)
    return ShippedModel("aligned6", m, 3)


def monomer_coupling(scale: float = 0.05) -> OligomerCoupling:
    """Fixed inter-monomer one-body block for weakly coupled oligomers."""
    rng = np.random.default_rng(21)
    block = rng.uniform(-1.0, 1.0, size=(4, 4))
    return OligomerCoupling(block, scale)


def oligomer(k: int, coupling_scale: float | None = None) -> tuple[MolecularIntegrals, int]:
    mono = monomer4()
    coup = None if coupling_scale is None else monomer_coupling(coupling_scale)
    return build_oligomer(mono.integrals, k, coup), k * mono.n_electrons


def ensemble_instance(seed: int, n_modes: int = 10, m_impurity: int = 2,
                      gap: float = 0.2, strength: float = 0.5) -> ShippedModel:
    """One member of the random gapped ensemble (half filling)."""
    n_electrons = n_modes // 2
    m = build_impurity_model(
        n_modes, m_impurity,
        RandomEpsilons(gap=gap, n_negative=n_electrons),
        RandomInteraction(strength), seed=seed)
    return ShippedModel(f"ensemble{seed}", m, n_electrons)


SHIPPED = {
    "impurity8": impurity8,
    "general6": general6,
    "monomer4": monomer4,
    "aligned6": aligned6,
}


def get(name: str) -> ShippedModel:
    try:
        return SHIPPED[name]()
    except KeyError:
        raise KeyError(f"unknown shipped model {name!r}; have {sorted(SHIPPED)}") from None
