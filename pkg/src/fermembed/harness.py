"""Experiment runner: config-driven sweeps with CSV and manifest emission.

Configs are JSON documents (schema shipped in configs/config.schema.json and
enforced by validate()).  Outputs are deterministic for a fixed seed: floats
are printed with 17 significant digits, tasks run sequentially, and ensemble
member seeds derive from the global seed by a splitmix64 sequence.
"""

from __future__ import annotations

import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, analysis, embedding, impurity, meanfield, qpecost, states, zoo
from .fock import DEFAULT_DIM_CAP
from .model import (ImpurityModel, MolecularIntegrals, RandomEpsilons,
                    RandomInteraction, build_impurity_model, build_oligomer,
                    read_integrals)
from .solver import SolverOptions, ground_state
from .states import SlaterDeterminant, determinant_to_wavefunction, overlap


def fmt(value) -> str:
    """Stable decimal rendering used in every CSV cell."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def splitmix64(seed: int, index: int) -> int:
    """Member seed sequence: splitmix64 applied to seed + index (documented)."""
    z = (seed + 0x9E3779B97F4A7C15 * (index + 1)) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return (z ^ (z >> 31)) & 0x7FFFFFFF


class TaskError(Exception):
    """A task failed at runtime; carried as a machine-readable record."""


@dataclass
class ExperimentConfig:
    model: Optional[dict]
    electrons: Optional[int]
    tasks: list
    seed: int = 0
    output: Optional[str] = None

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ValueError("config root must be a JSON object")
        return cls(model=data.get("model"), electrons=data.get("electrons"),
                   tasks=list(data.get("tasks", [])), seed=int(data.get("seed", 0)),
                   output=data.get("output"))

    def to_dict(self) -> dict:
        out = {"seed": self.seed, "tasks": self.tasks}
        if self.model is not None:
            out["model"] = self.model
        if self.electrons is not None:
            out["electrons"] = self.electrons
        if self.output is not None:
            out["output"] = self.output
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return ExperimentConfig.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# model resolution
# ---------------------------------------------------------------------------

@dataclass
class ResolvedModel:
    name: str
    integrals: MolecularIntegrals
    n_electrons: int
    impurity: Optional[ImpurityModel] = None

    @property
    def content_hash(self) -> str:
        return self.integrals.content_hash()


def _build_from_spec(spec: dict, default_electrons: Optional[int]) -> ResolvedModel:
    kind = spec.get("kind")
    if kind == "zoo":
        shipped = zoo.get(spec["name"])
        n = default_electrons if default_electrons is not None else shipped.n_electrons
        return ResolvedModel(shipped.name, shipped.integrals, n, shipped.model)
    if kind == "file":
        parsed = read_integrals(spec["path"])
        n = default_electrons if default_electrons is not None else parsed.n_electrons
        return ResolvedModel(Path(spec["path"]).name, parsed.integrals, n, None)
    if kind == "impurity":
        eps = spec.get("epsilons")
        eps_spec = eps if eps is not None else RandomEpsilons(
            gap=float(spec.get("gap", 0.0)),
            n_negative=spec.get("n_negative"))
        inter = RandomInteraction(float(spec.get("strength", 0.5)))
        model = build_impurity_model(
            int(spec["n_modes"]), int(spec["m_impurity"]), eps_spec, inter,
            seed=int(spec.get("seed", 0)),
            hybridization=spec.get("hybridization", "random"))
        n = default_electrons if default_electrons is not None else model.n_negative
        return ResolvedModel(f"impurity{model.n_modes}", model.integrals, n, model)
    if kind == "oligomer":
        inner = _build_from_spec(spec["monomer"], None)
        scale = spec.get("coupling_scale")
        coupling = None if scale is None else zoo.monomer_coupling(float(scale))
        integrals = build_oligomer(inner.integrals, int(spec["copies"]), coupling)
        n = default_electrons if default_electrons is not None \
            else inner.n_electrons * int(spec["copies"])
        return ResolvedModel(f"oligomer{spec['copies']}x{inner.name}", integrals, n)
    raise ValueError(f"unknown model kind {kind!r}")


# ---------------------------------------------------------------------------
# validation (static checks; diagnostics returned, never raised)
# ---------------------------------------------------------------------------

KNOWN_TASKS = ("solve", "mean_field", "embed", "guiding", "oligomer",
               "impurity_ensemble", "qpe_cost")


def validate(config: ExperimentConfig, max_dim: Optional[int] = None) -> list:
    """Static diagnostics: caps, missing files, inconsistent electron counts."""
    cap = DEFAULT_DIM_CAP if max_dim is None else max_dim
    diags = []
    n_modes = None
    n_elec = config.electrons

    model_tasks = [t for t in config.tasks
                   if isinstance(t, dict) and t.get("kind") not in ("qpe_cost",)]
    if config.model is None and model_tasks:
        diags.append("config has model-dependent tasks but no model")
    if config.model is not None:
        kind = config.model.get("kind") if isinstance(config.model, dict) else None
        if kind == "zoo":
            name = config.model.get("name")
            if name not in zoo.SHIPPED:
                diags.append(f"unknown shipped model {name!r}")
            else:
                shipped = zoo.get(name)
                n_modes = shipped.integrals.n_modes
                n_elec = n_elec if n_elec is not None else shipped.n_electrons
        elif kind == "file":
            path = config.model.get("path", "")
            if not Path(path).is_file():
                diags.append(f"integrals file not found: {path!r}")
            else:
                try:
                    with open(path, encoding="utf-8") as fh:
                        for line in fh:
                            text = line.split("#", 1)[0].strip()
                            if text:
                                parts = dict(t.partition("=")[::2] for t in text.split())
                                n_modes = int(parts["NORB"])
                                if n_elec is None:
                                    n_elec = int(parts["NELEC"])
                                break
                except Exception as exc:  # header unreadable: one diagnostic
                    diags.append(f"cannot read header of {path!r}: {exc}")
        elif kind == "impurity":
            n_modes = config.model.get("n_modes")
            m = config.model.get("m_impurity", 0)
            if n_modes is None:
                diags.append("impurity model spec needs n_modes")
            elif not 0 <= m <= n_modes:
                diags.append(f"impurity size {m} outside 0..{n_modes}")
            if n_elec is None:
                n_elec = config.model.get("n_negative")
        elif kind == "oligomer":
            mono = config.model.get("monomer", {})
            copies = int(config.model.get("copies", 1))
            inner_n = mono.get("n_modes")
            if mono.get("kind") == "zoo" and mono.get("name") in zoo.SHIPPED:
                inner = zoo.get(mono["name"])
                inner_n = inner.integrals.n_modes
                if n_elec is None:
                    n_elec = copies * inner.n_electrons
            if inner_n is not None:
                n_modes = copies * inner_n
                if n_modes > 63:
                    diags.append(f"oligomer needs {n_modes} modes > 63")
        else:
            diags.append(f"unknown model kind {kind!r}")

    if n_modes is not None and n_elec is not None:
        if not 0 <= n_elec <= n_modes:
            diags.append(f"electron count {n_elec} outside 0..{n_modes}")
        else:
            dim = math.comb(n_modes, n_elec)
            if dim > cap:
                diags.append(f"sector binomial({n_modes},{n_elec}) = {dim} "
                             f"exceeds the cap {cap}")

    for i, task in enumerate(config.tasks):
        if not isinstance(task, dict) or task.get("kind") not in KNOWN_TASKS:
            diags.append(f"task {i}: unknown kind "
                         f"{task.get('kind') if isinstance(task, dict) else task!r}")
            continue
        kind = task["kind"]
        if kind == "guiding":
            ansatz = task.get("ansatz")
            if ansatz not in ("hf", "sos", "mps", "projection"):
                diags.append(f"task {i}: unknown guiding ansatz {ansatz!r}")
            if ansatz == "mps" and n_modes is not None and 2 ** n_modes > states.FULL_SPACE_CAP:
                diags.append(f"task {i}: 2^{n_modes} amplitudes exceed the "
                             f"compression cap")
            if ansatz == "sos" and not task.get("terms"):
                diags.append(f"task {i}: sos sweep needs a terms list")
            if ansatz == "mps" and not task.get("bond_dims"):
                diags.append(f"task {i}: mps sweep needs a bond_dims list")
            if ansatz == "projection":
                if not task.get("active_counts"):
                    diags.append(f"task {i}: projection sweep needs active_counts")
                if config.model is None or config.model.get("kind") not in ("zoo", "impurity"):
                    diags.append(f"task {i}: projection sweep needs an impurity model")
        elif kind == "embed":
            if task.get("scheme") not in ("dmet", "projection"):
                diags.append(f"task {i}: unknown embedding scheme "
                             f"{task.get('scheme')!r}")
            if task.get("scheme") == "dmet" and not task.get("fragment"):
                diags.append(f"task {i}: dmet embedding needs a fragment mode list")
            if task.get("scheme") == "projection" and not task.get("active_orbitals"):
                diags.append(f"task {i}: projection embedding needs active_orbitals")
        elif kind == "oligomer":
            copies = task.get("copies", [])
            if not copies:
                diags.append(f"task {i}: oligomer sweep needs a copies list")
            mono_modes, mono_elec = n_modes, n_elec
            mono_spec = task.get("monomer")
            if mono_spec is not None and mono_spec.get("kind") == "zoo" \
                    and mono_spec.get("name") in zoo.SHIPPED:
                inner = zoo.get(mono_spec["name"])
                mono_modes, mono_elec = inner.integrals.n_modes, inner.n_electrons
            if mono_modes is not None and copies:
                biggest = max(copies) * mono_modes
                if biggest > 63:
                    diags.append(f"task {i}: largest oligomer needs {biggest} modes > 63")
                elif mono_elec is not None:
                    dim = math.comb(biggest, max(copies) * mono_elec)
                    if dim > cap:
                        diags.append(f"task {i}: oligomer sector "
                                     f"binomial({biggest},{max(copies) * mono_elec}) = "
                                     f"{dim} exceeds the cap {cap}")
        elif kind == "impurity_ensemble":
            nn = int(task.get("n_modes", 10))
            ne = nn // 2
            dim = math.comb(nn, ne)
            if dim > cap:
                diags.append(f"task {i}: ensemble sector binomial({nn},{ne}) = {dim} "
                             f"exceeds the cap {cap}")
            if task.get("count", 0) < 1:
                diags.append(f"task {i}: ensemble needs count >= 1")
        elif kind == "qpe_cost":
            for eta in task.get("etas", [1.0]):
                if not 0.0 < eta <= 1.0:
                    diags.append(f"task {i}: eta {eta} outside (0, 1]")
            for eps in task.get("epsilons", [1e-3]):
                if eps <= 0.0:
                    diags.append(f"task {i}: eps {eps} not positive")
    return diags


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------

@dataclass
class RunResult:
    status: int
    outputs: list = field(default_factory=list)
    error: Optional[dict] = None


def _write_csv(path: Path, header: list, rows: list) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(cell) for cell in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _reference(resolved: ResolvedModel, opts: SolverOptions):
    return ground_state(resolved.integrals, resolved.n_electrons, opts)


def run(config: ExperimentConfig, out_dir, seed: Optional[int] = None,
        max_dim: Optional[int] = None, threads: int = 1) -> RunResult:
    """Execute the tasks in order; write one CSV per task plus a run manifest.

    The first failing task aborts with a machine-readable error record; CSV
    bodies are byte-identical across runs with the same seed.
    """
    t_start = time.time()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = config.seed if seed is None else seed
    opts = SolverOptions(max_dim=max_dim)
    outputs = []

    resolved = None
    reference = None
    mf = None

    def model_ctx():
        nonlocal resolved, reference
        if resolved is None:
            resolved = _build_from_spec(config.model, config.electrons)
        if reference is None:
            reference = _reference(resolved, opts)
        return resolved, reference

    def mean_field_ctx():
        nonlocal mf
        res, _ = model_ctx()
        if mf is None:
            mf = meanfield.hartree_fock(res.integrals, res.n_electrons)
        return mf

    error = None
    try:
        for i, task in enumerate(config.tasks):
            kind = task.get("kind")
            name = f"{i:02d}_{kind}"
            if kind == "solve":
                res, ref = model_ctx()
                rows = [[seed, res.content_hash, res.name, res.integrals.n_modes,
                         res.n_electrons, ref.energy, ref.residual, ref.iterations,
                         ref.degenerate]]
                path = out / f"{name}.csv"
                _write_csv(path, ["seed", "model_hash", "model", "n_modes",
                                  "electrons", "energy", "residual", "iterations",
                                  "degenerate"], rows)
                outputs.append(path.name)
            elif kind == "mean_field":
                res, ref = model_ctx()
                scf = mean_field_ctx()
                path = out / f"{name}.csv"
                _write_csv(path, ["seed", "model_hash", "energy", "converged",
                                  "iterations", "energy_minus_reference"],
                           [[seed, res.content_hash, scf.energy, scf.converged,
                             scf.iterations, scf.energy - ref.energy]])
                outputs.append(path.name)
            elif kind == "guiding":
                path = out / f"{name}_{task['ansatz']}.csv"
                written = _run_guiding(task, path, model_ctx, mean_field_ctx, seed)
                outputs.extend(written)
            elif kind == "embed":
                res, ref = model_ctx()
                path = out / f"{name}_{task['scheme']}.csv"
                _run_embed(task, path, res, ref, mean_field_ctx, seed, opts)
                outputs.append(path.name)
            elif kind == "oligomer":
                path = out / f"{name}.csv"
                _run_oligomer(task, path, config, seed, opts)
                outputs.append(path.name)
            elif kind == "impurity_ensemble":
                path = out / f"{name}.csv"
                _run_ensemble(task, path, seed, opts)
                outputs.append(path.name)
            elif kind == "qpe_cost":
                path = out / f"{name}.csv"
                _run_qpe(task, path, seed)
                outputs.append(path.name)
            else:
                raise TaskError(f"unknown task kind {kind!r}")
    except Exception as exc:  # first failing task aborts the run
        error = {"task_index": i, "kind": kind, "error": str(exc),
                 "type": type(exc).__name__}

    manifest = {
        "version": __version__,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "seed": seed,
        "max_dim": DEFAULT_DIM_CAP if max_dim is None else max_dim,
        "threads": threads,
        "tasks": [t.get("kind") for t in config.tasks],
        "outputs": outputs,
        "wall_time_s": time.time() - t_start,
        "config": config.to_dict(),
    }
    if error is not None:
        manifest["error"] = error
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1),
                                       encoding="utf-8")
    return RunResult(3 if error else 0, outputs, error)


def _run_guiding(task, path, model_ctx, mean_field_ctx, seed):
    res, ref = model_ctx()
    ansatz = task["ansatz"]
    header = ["seed", "model_hash"]
    rows = []
    written = [path.name]
    exact = ref.state
    if ansatz == "hf":
        scf = mean_field_ctx()
        w = determinant_to_wavefunction(SlaterDeterminant(scf.determinant.orbitals))
        energy = scf.energy
        rows.append([seed, res.content_hash, abs(overlap(w, exact)), energy,
                     energy - ref.energy])
        header += ["overlap", "energy", "energy_minus_reference"]
    elif ansatz == "sos":
        # determinants are taken in the mean-field orbital basis, where the
        # expansion is compact; the truncation identity holds in any basis
        from .fock import expectation
        scf = mean_field_ctx()
        in_mo = states.to_mode_basis(exact, scf.orbitals)
        header += ["L", "overlap", "energy", "energy_minus_reference"]
        for L in task["terms"]:
            sos = states.sum_of_slater(in_mo, int(L))
            w_mo = sos.to_wavefunction(in_mo.basis)
            w = states.from_mode_basis(w_mo, scf.orbitals)
            energy = expectation(res.integrals, w)
            rows.append([seed, res.content_hash, int(L), abs(overlap(w, exact)),
                         energy, energy - ref.energy])
        if task.get("dump_terms"):
            biggest = states.sum_of_slater(in_mo, int(max(task["terms"])))
            term_rows = [[seed, res.content_hash, rank, coeff.real, coeff.imag,
                          str(state)]
                         for rank, (coeff, state) in enumerate(biggest.terms, 1)]
            terms_path = path.with_name(path.stem + "_terms.csv")
            _write_csv(terms_path,
                       ["seed", "model_hash", "rank", "amplitude_re",
                        "amplitude_im", "pattern"], term_rows)
            written.append(terms_path.name)
    elif ansatz == "mps":
        from .fock import expectation
        scf = mean_field_ctx()
        in_mo = states.to_mode_basis(exact, scf.orbitals)
        header += ["D", "overlap", "energy", "energy_minus_reference"]
        for d in task["bond_dims"]:
            mps = states.mps_compress(in_mo, int(d))
            w_mo = states.mps_to_wavefunction(mps)
            w = states.from_mode_basis(w_mo, scf.orbitals)
            energy = expectation(res.integrals, w)
            rows.append([seed, res.content_hash, int(d), abs(overlap(w, exact)),
                         energy, energy - ref.energy])
    elif ansatz == "projection":
        if res.impurity is None:
            raise TaskError("projection sweep needs an impurity model")
        header += ["K", "delta_bound", "achieved_overlap"]
        rdm = analysis.one_rdm(exact)
        for k in task["active_counts"]:
            sel = impurity.select_active(rdm, res.impurity, res.n_electrons, int(k))
            proj = impurity.project_excitations(exact, sel)
            rows.append([seed, res.content_hash, int(k), sel.delta_bound,
                         proj.achieved_overlap])
    else:
        raise TaskError(f"unknown guiding ansatz {ansatz!r}")
    _write_csv(path, header, rows)
    return written


def _run_embed(task, path, res, ref, mean_field_ctx, seed, opts):
    scheme = task["scheme"]
    if scheme == "dmet":
        scf = mean_field_ctx()
        part = embedding.schmidt_bath(SlaterDeterminant(scf.determinant.orbitals),
                                      [int(p) for p in task["fragment"]])
        prob = embedding.dmet_effective(res.integrals, part)
        label = ";".join(str(p) for p in task["fragment"])
    else:
        scf = mean_field_ctx()
        prob = embedding.huzinaga_effective(
            res.integrals, scf, [int(i) for i in task["active_orbitals"]],
            level_shift=float(task.get("level_shift", 1e3)))
        label = ";".join(str(i) for i in task["active_orbitals"])
    sol = embedding.embed_solve(prob, opts)
    ov = abs(overlap(sol.guiding, ref.state))
    _write_csv(path, ["seed", "model_hash", "scheme", "subset", "n_active_modes",
                      "n_active_electrons", "env_energy", "e_total", "e_exact",
                      "e_total_minus_exact", "guiding_overlap"],
               [[seed, res.content_hash, scheme, label, prob.n_active_modes,
                 prob.n_active, prob.env_energy, sol.e_total, ref.energy,
                 sol.e_total - ref.energy, ov]])


def _run_oligomer(task, path, config, seed, opts):
    if "monomer" in task:
        mono_spec = task["monomer"]
    elif (config.model or {}).get("kind") == "oligomer":
        mono_spec = config.model["monomer"]
    else:
        mono_spec = config.model
    mono = _build_from_spec(mono_spec, None)
    scale = task.get("coupling_scale")
    ref1 = ground_state(mono.integrals, mono.n_electrons, opts)
    mf1 = meanfield.hartree_fock(mono.integrals, mono.n_electrons)
    ov1 = abs(overlap(determinant_to_wavefunction(
        SlaterDeterminant(mf1.determinant.orbitals)), ref1.state))
    rows = []
    for k in task["copies"]:
        k = int(k)
        coupling = None if scale is None else zoo.monomer_coupling(float(scale))
        integrals = build_oligomer(mono.integrals, k, coupling)
        n_k = k * mono.n_electrons
        ref_k = ground_state(integrals, n_k, opts)
        mf_k = meanfield.hartree_fock(integrals, n_k)
        w = determinant_to_wavefunction(SlaterDeterminant(mf_k.determinant.orbitals))
        ov = abs(overlap(w, ref_k.state))
        rows.append([seed, integrals.content_hash(), k,
                     0.0 if scale is None else float(scale), ov, ov1 ** k,
                     ref_k.energy])
    _write_csv(path, ["seed", "model_hash", "k", "coupling_scale", "overlap",
                      "monomer_overlap_power", "energy"], rows)


def _run_ensemble(task, path, seed, opts):
    count = int(task.get("count", 20))
    n_modes = int(task.get("n_modes", 10))
    m_imp = int(task.get("m_impurity", 2))
    gap = float(task.get("gap", 0.2))
    strength = float(task.get("strength", 0.5))
    k_active = int(task.get("active_count", 2 * m_imp + 2))
    base_seed = int(task.get("seed", seed))  # per-task override
    rows = []
    for i in range(count):
        member_seed = splitmix64(base_seed, i)
        shipped = zoo.ensemble_instance(member_seed, n_modes, m_imp, gap, strength)
        model = shipped.model
        ref = ground_state(model.integrals, shipped.n_electrons, opts)
        rdm = analysis.one_rdm(ref.state)
        sel = impurity.select_active(rdm, model, shipped.n_electrons, k_active)
        proj = impurity.project_excitations(ref.state, sel)
        frame = impurity.particle_hole(model, shipped.n_electrons)
        phi, _, ov = impurity.factor_projected_state(ref.state, sel)
        k_exc = impurity.max_projected_excitations(phi, sel)
        tau_ov, dim_v = impurity.mixed_guiding_overlap(ref.state, k_exc, frame)
        rows.append([member_seed, model.integrals.content_hash(), n_modes, m_imp,
                     model.omega, k_active, sel.delta_bound, proj.achieved_overlap,
                     dim_v, tau_ov])
    _write_csv(path, ["seed", "model_hash", "n_modes", "m_impurity", "omega",
                      "active_count", "delta_bound", "achieved_overlap", "dim_v",
                      "mixed_overlap"], rows)


def _run_qpe(task, path, seed):
    rows = []
    modes = task.get("modes", list(qpecost.MODES))
    etas = task.get("etas", [1.0])
    epsilons = task.get("epsilons", [1e-3])
    for mode in modes:
        for eta in etas:
            for eps in epsilons:
                try:
                    rep = qpecost.qpe_cost(float(eta), float(eps), mode)
                except ValueError:
                    continue  # outside the mode's domain (e.g. high-overlap)
                rows.append([seed, "none", mode, rep.eta, rep.eps, rep.repetitions,
                             rep.max_evolution_time, rep.total_evolution_time])
    _write_csv(path, ["seed", "model_hash", "mode", "eta", "eps", "repetitions",
                      "max_evolution_time", "total_evolution_time"], rows)
