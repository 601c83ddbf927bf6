"""Command-line interface.

Exit codes: 0 success, 2 validation failure, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__, embedding, harness, meanfield, qpecost
from .model import read_integrals
from .solver import SolverOptions, ground_state
from .states import SlaterDeterminant


def _add_common(parser):
    parser.add_argument("--seed", type=int, default=None, help="global seed override")
    parser.add_argument("--max-dim", type=int, default=None,
                        help="sector dimension cap override")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker count (results are thread-count independent)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fermembed",
        description="fermionic embedding and guiding-state workbench")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None, help="output directory")
    _add_common(p_run)

    p_val = sub.add_parser("validate", help="static checks of a config")
    p_val.add_argument("--config", required=True)
    p_val.add_argument("--max-dim", type=int, default=None)

    p_solve = sub.add_parser("solve", help="ground state of an integrals file")
    p_solve.add_argument("--integrals", required=True)
    p_solve.add_argument("--electrons", type=int, default=None)
    p_solve.add_argument("--out", default=None, help="write the JSON result here")
    _add_common(p_solve)

    p_embed = sub.add_parser("embed", help="build and solve an embedding")
    p_embed.add_argument("--integrals", required=True)
    p_embed.add_argument("--electrons", type=int, default=None)
    p_embed.add_argument("--scheme", choices=("dmet", "projection"), default="dmet")
    p_embed.add_argument("--fragment", default=None,
                         help="comma-separated fragment modes (dmet)")
    p_embed.add_argument("--active-orbitals", default=None,
                         help="comma-separated orbital indices (projection)")
    p_embed.add_argument("--level-shift", type=float, default=1e3)
    p_embed.add_argument("--out", default=None,
                         help="basepath to serialize the embedding problem")
    _add_common(p_embed)

    p_cost = sub.add_parser("cost", help="emit a JSON phase-estimation cost report")
    p_cost.add_argument("--mode", choices=qpecost.MODES, default="standard")
    p_cost.add_argument("--eta", type=float, required=True)
    p_cost.add_argument("--eps", type=float, required=True)
    return parser


def _cmd_run(args) -> int:
    try:
        config = harness.load_config(args.config)
    except Exception as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    diags = harness.validate(config, max_dim=args.max_dim)
    if diags:
        for d in diags:
            print(f"invalid: {d}", file=sys.stderr)
        return 2
    out_dir = args.out or config.output or "runs"
    result = harness.run(config, out_dir, seed=args.seed, max_dim=args.max_dim,
                         threads=args.threads)
    if result.error:
        print(json.dumps(result.error), file=sys.stderr)
        return 3
    for name in result.outputs:
        print(f"{out_dir}/{name}")
    return 0


def _cmd_validate(args) -> int:
    try:
        config = harness.load_config(args.config)
    except Exception as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    diags = harness.validate(config, max_dim=args.max_dim)
    for d in diags:
        print(d)
    return 2 if diags else 0


def _cmd_solve(args) -> int:
    parsed = read_integrals(args.integrals)
    n = args.electrons if args.electrons is not None else parsed.n_electrons
    default_seed = SolverOptions().seed
    opts = SolverOptions(seed=args.seed if args.seed is not None else default_seed,
                         max_dim=args.max_dim)
    res = ground_state(parsed.integrals, n, opts)
    payload = {"energy": res.energy, "residual": res.residual,
               "iterations": res.iterations, "degenerate": res.degenerate,
               "electrons": n, "n_modes": parsed.integrals.n_modes,
               "model_hash": parsed.integrals.content_hash()}
    text = json.dumps(payload, indent=1)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def _cmd_embed(args) -> int:
    parsed = read_integrals(args.integrals)
    n = args.electrons if args.electrons is not None else parsed.n_electrons
    mf = meanfield.hartree_fock(parsed.integrals, n)
    if args.scheme == "dmet":
        if not args.fragment:
            print("dmet embedding needs --fragment", file=sys.stderr)
            return 2
        frag = [int(t) for t in args.fragment.split(",")]
        part = embedding.schmidt_bath(SlaterDeterminant(mf.determinant.orbitals), frag)
        prob = embedding.dmet_effective(parsed.integrals, part)
    else:
        if not args.active_orbitals:
            print("projection embedding needs --active-orbitals", file=sys.stderr)
            return 2
        active = [int(t) for t in args.active_orbitals.split(",")]
        prob = embedding.huzinaga_effective(parsed.integrals, mf, active,
                                            level_shift=args.level_shift)
    opts = SolverOptions(max_dim=args.max_dim)
    sol = embedding.embed_solve(prob, opts)
    payload = {"scheme": args.scheme, "e_total": sol.e_total,
               "env_energy": prob.env_energy, "n_active": prob.n_active,
               "n_active_modes": prob.n_active_modes,
               "fragment_energy": sol.fragment.energy}
    if args.out:
        embedding.save_embedding_problem(prob, args.out)
        payload["written"] = [f"{args.out}.ints", f"{args.out}.json"]
    print(json.dumps(payload, indent=1))
    return 0


def _cmd_cost(args) -> int:
    try:
        report = qpecost.qpe_cost(args.eta, args.eps, args.mode)
    except ValueError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(report.to_dict(), indent=1))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "validate": _cmd_validate, "solve": _cmd_solve,
                "embed": _cmd_embed, "cost": _cmd_cost}
    try:
        return handlers[args.command](args)
    except BrokenPipeError:
        return 0
    except Exception as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
