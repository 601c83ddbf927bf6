"""Phase-estimation resource model: repetition counts and evolution times as a
function of ground-state overlap eta and target precision eps, plus
guiding-state preparation gate counts.

Every asymptotic constant is set to one and log factors are dropped except
where a named bound carries them; reports say so explicitly.  These are
scaling estimates, not circuit budgets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

ASSUMPTIONS = ("asymptotic scaling with all constants set to 1; logarithms base 2 "
               "in gate counts; not a circuit-level budget")

MODES = ("standard", "amplified", "single-ancilla", "high-overlap")


@dataclass(frozen=True)
class CostReport:
    mode: str
    eta: float
    eps: float
    repetitions: float
    max_evolution_time: float
    total_evolution_time: float
    assumptions: str = ASSUMPTIONS

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "eta": self.eta,
            "eps": self.eps,
            "repetitions": self.repetitions,
            "max_evolution_time": self.max_evolution_time,
            "total_evolution_time": self.total_evolution_time,
            "assumptions": self.assumptions,
        }


def qpe_cost(eta: float, eps: float, mode: str = "standard") -> CostReport:
    """Phase-estimation cost for ground-state overlap eta and precision eps.

    standard:       repetitions eta^-2, evolution time eps^-1 per run.
    amplified:      amplitude amplification, eta^-1 preparations, time
                    eps^-1 eta^-1.
    single-ancilla: eta^-4 repetitions of eps^-1 evolutions.
    high-overlap:   requires eta^2 > 1/2; with delta = 1 - eta^2 the maximal
                    evolution shrinks to delta/eps at total cost delta/eps^2.
    """
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"overlap eta must lie in (0, 1], got {eta}")
    if eps <= 0.0:
        raise ValueError(f"precision eps must be positive, got {eps}")
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; choose from {MODES}")

    if mode == "standard":
        reps = eta ** -2
        max_t = 1.0 / eps
        total = reps * max_t
    elif mode == "amplified":
        reps = 1.0 / eta
        max_t = 1.0 / (eps * eta)
        total = max_t  # reps count state preparations, not separate evolutions
    elif mode == "single-ancilla":
        reps = eta ** -4
        max_t = 1.0 / eps
        total = reps * max_t
    else:  # high-overlap
        delta = 1.0 - eta ** 2
        if delta >= 0.5:
            raise ValueError(f"high-overlap mode needs eta^2 > 1/2, got eta={eta}")
        max_t = delta / eps
        total = delta / eps ** 2
        reps = total / max_t if max_t > 0.0 else 0.0
    return CostReport(mode, eta, eps, float(reps), float(max_t), float(total))


@dataclass(frozen=True)
class GateCountReport:
    kind: str
    params: dict
    two_qubit: float
    toffoli: float | None
    assumptions: str = ASSUMPTIONS

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": self.params, "two_qubit": self.two_qubit,
                "toffoli": self.toffoli, "assumptions": self.assumptions}


def guiding_gate_counts(kind: str, *, n_modes: int | None = None,
                        n_electrons: int | None = None,
                        n_terms: int | None = None,
                        max_excitation: int | None = None,
                        bond_dim: int | None = None) -> GateCountReport:
    """Preparation gate counts per guiding-state family (unit constants).

    givens:              orbital-rotated determinant, n(N-n) two-qubit gates.
    sum-of-slater:       L-term superposition, N*L two-qubit or L*log2(L) Toffoli.
    bounded-excitation:  L terms within k excitations of the reference, L*k
                         two-qubit gates.
    mps:                 sequential preparation, N*D^2 gates of either kind.
    """
    def need(value, name):
        if value is None:
            raise ValueError(f"{kind!r} needs parameter {name}")
        if value < 0:
            raise ValueError(f"{name} must be nonnegative")
        return value

    if kind == "givens":
        n = need(n_modes, "n_modes")
        ne = need(n_electrons, "n_electrons")
        return GateCountReport(kind, {"n_modes": n, "n_electrons": ne},
                               float(ne * (n - ne)), None)
    if kind == "sum-of-slater":
        n = need(n_modes, "n_modes")
        terms = need(n_terms, "n_terms")
        toff = terms * math.log2(terms) if terms > 1 else 0.0
        return GateCountReport(kind, {"n_modes": n, "n_terms": terms},
                               float(n * terms), float(toff))
    if kind == "bounded-excitation":
        terms = need(n_terms, "n_terms")
        k = need(max_excitation, "max_excitation")
        return GateCountReport(kind, {"n_terms": terms, "max_excitation": k},
                               float(terms * k), None)
    if kind == "mps":
        n = need(n_modes, "n_modes")
        d = need(bond_dim, "bond_dim")
        gates = float(n * d * d)
        return GateCountReport(kind, {"n_modes": n, "bond_dim": d}, gates, gates)
    raise ValueError(f"unknown guiding-state kind {kind!r}")
