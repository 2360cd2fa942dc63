"""Command-line interface.

Structures and reducts are JSON files or ``catalog:NAME`` references.  Exit
codes: 0 every check passed, 1 a check was refuted, 2 bad input or usage,
3 a resource bound was hit.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from typing import Sequence

from . import catalog
from .clone import render_clone
from .core import (
    DualforgeError,
    FiniteStructure,
    ReductSpec,
    Relation,
    ResourceLimitError,
    apply_reduct,
    keep_reduct,
    limits,
)
from .hom import hom_maps
from .piggyback import (
    THEOREMS,
    PiggybackProblem,
    build_alter_ego_D,
    build_alter_ego_S,
    carriers,
    check_theorem,
    entails,
    omega_max_detailed,
    order_reduct,
)
from .verify import coincidence_check, verify_bruteforce

EXIT_OK, EXIT_REFUTED, EXIT_USAGE, EXIT_LIMIT = 0, 1, 2, 3

BASES = {"D": ("D", "TWOPOS"), "S": ("S", "STILDE"), "S01": ("SEMI", "SEMI01")}


class UsageError(DualforgeError):
    pass


# ---------------------------------------------------------------- loading


def _catalog_name(ref: str) -> str | None:
    return ref[len("catalog:"):] if ref.startswith("catalog:") else None


def _read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from None


def load_structure(ref: str) -> FiniteStructure:
    name = _catalog_name(ref)
    if name is not None:
        return catalog.structure(name)
    return FiniteStructure.from_json(_read_json(ref))


def load_reduct(ref: str) -> ReductSpec:
    name = _catalog_name(ref)
    if name is not None:
        return catalog.reduct(name)
    return ReductSpec.from_json(_read_json(ref))


def load_relation(ref: str, universe: int | None = None) -> Relation:
    """A relation file, ``catalog:STRUCT.REL``, or ``delta`` (needs ``universe``)."""
    if ref == "delta":
        if universe is None:
            raise UsageError("'delta' needs a known universe")
        return Relation.diagonal(universe)
    name = _catalog_name(ref)
    if name is not None:
        struct, _, rel = name.partition(".")
        S = catalog.structure(struct)
        if rel not in S.rels:
            raise UsageError(f"{struct} has no relation {rel!r}")
        return S.rel(rel)
    data = _read_json(ref)
    if isinstance(data, dict):
        return Relation(int(data["arity"]), tuple(tuple(t) for t in data["tuples"]))
    return Relation.of(data)


def load_maps(ref: str) -> list[tuple[int, ...]]:
    data = _read_json(ref)
    if data and isinstance(data[0], int):
        data = [data]
    return [tuple(int(x) for x in w) for w in data]


def _catalog_problem(ref: str) -> PiggybackProblem | None:
    name = _catalog_name(ref)
    if name is not None and name in catalog.list_names()["problems"]:
        return catalog.problem(name)
    return None


def _base_for(reduct: ReductSpec) -> tuple[FiniteStructure, FiniteStructure]:
    try:
        return catalog.infer_base(reduct.target)
    except catalog.UnknownEntry as exc:
        raise UsageError(str(exc)) from None


def _ego_reduct(Mt: FiniteStructure, Nt: FiniteStructure) -> ReductSpec:
    if Nt.sig.purely_relational:
        return order_reduct(Mt)
    return keep_reduct(Nt.sig)


def _problem_json(P: PiggybackProblem) -> dict:
    out = {"M": P.M.to_json(), "reduct": P.reduct.to_json(), "N": P.N.to_json(), "Nt": P.Nt.to_json(),
           "Omega": [list(w) for w in P.Omega]}
    if P.Mt is not None:
        out["Mt"] = P.Mt.to_json()
    if P.Mt_reduct is not None:
        out["Mt_reduct"] = P.Mt_reduct.to_json()
    return out


def _rel_json(r: Relation) -> list:
    return [list(t) for t in r.tuples]


# ---------------------------------------------------------------- commands


def cmd_homs(a) -> tuple[dict, int]:
    hs = hom_maps(load_structure(a.A), load_structure(a.B))
    return {"count": len(hs), "homs": [list(h) for h in hs]}, EXIT_OK


def cmd_clo1(a):
    return {"clo1": render_clone(load_structure(a.M))}, EXIT_OK


def cmd_reduct(a):
    return apply_reduct(load_structure(a.M), load_reduct(a.SPEC)).to_json(), EXIT_OK


def cmd_carriers(a):
    Mf = apply_reduct(load_structure(a.M), load_reduct(a.SPEC))
    cs = carriers(Mf, load_structure(a.BASE))
    return {"count": len(cs), "carriers": [list(c) for c in cs]}, EXIT_OK


def cmd_omegamax(a):
    M = load_structure(a.M)
    red = load_reduct(a.SPEC)
    N = load_structure(a.BASE)
    Omega = load_maps(a.omega) if a.omega else carriers(apply_reduct(M, red), N)
    if a.rel in ("delta", "eq"):
        r = Relation.diagonal(N.size)
    elif a.rel in N.rels:
        r = N.rel(a.rel)
    else:
        _, Nt = _base_for(red)
        r = Nt.rel(a.rel) if a.rel in Nt.rels else load_relation(a.rel, N.size)
    found = omega_max_detailed(M, Omega, r, drop_diagonal=not a.keep_diagonal, strategy=a.strategy)
    return {"omega": [list(w) for w in Omega], "relation": _rel_json(r),
            "maximal": [{"tuples": _rel_json(s), "carriers": [[list(w) for w in ws] for ws in src]}
                        for s, src in found]}, EXIT_OK


def cmd_entails(a):
    M, Mt = load_structure(a.M), load_structure(a.MT)
    r = load_relation(a.R, M.size)
    ok, wit = entails(M, Mt, r)
    out = {"relation": _rel_json(r), "verdict": "pass" if ok else "fail"}
    if wit is not None:
        out["witness"] = wit
    return out, EXIT_OK if ok else EXIT_REFUTED


def cmd_piggyback(a):
    M = load_structure(a.M)
    red = load_reduct(a.SPEC)
    n_name, _ = BASES[a.base]
    if red.target != catalog.structure(n_name).sig:
        raise UsageError(f"the reduct does not target the signature of base {a.base}")
    prob = _catalog_problem(a.M)
    if a.omega:
        Omega = load_maps(a.omega)
    elif prob is not None and prob.reduct.target == red.target:
        Omega = prob.Omega
    else:
        Omega = None
    if a.base == "D":
        Mt, rep = build_alter_ego_D(M, red, Omega)
    else:
        if Omega is None:
            Omega = carriers(apply_reduct(M, red), catalog.structure(n_name))
        if len(Omega) != 1:
            raise UsageError(f"base {a.base} needs exactly one carrier; pass --omega")
        Mt, rep = build_alter_ego_S(M, red, Omega[0])
    out = {"alter_ego": Mt.to_json(), "report": rep.to_json()}
    return out, EXIT_OK if rep.verdict == "pass" else EXIT_REFUTED


def _problem_from_args(a) -> PiggybackProblem:
    prob = _catalog_problem(a.M) if a.MT is None else None
    if prob is not None:
        return dataclasses.replace(prob, Omega=load_maps(a.omega)) if a.omega else prob
    if a.MT is None or a.SPEC is None:
        raise UsageError("give M MT SPEC, or a catalog problem as M")
    M, Mt, red = load_structure(a.M), load_structure(a.MT), load_reduct(a.SPEC)
    N, Nt = _base_for(red)
    Omega = load_maps(a.omega) if a.omega else carriers(apply_reduct(M, red), N)
    Mt_red = load_reduct(a.mt_reduct) if a.mt_reduct else _ego_reduct(Mt, Nt)
    return PiggybackProblem(M, red, N, Nt, Omega, Mt, Mt_red)


def cmd_conditions(a):
    rep = check_theorem(_problem_from_args(a), a.theorem, sq=a.sq)
    return rep.to_json(), EXIT_OK if rep.verdict == "pass" else EXIT_REFUTED


def cmd_verify(a):
    rep = verify_bruteforce(load_structure(a.M), load_structure(a.MT), a.depth, a.mode, a.workers)
    return rep, EXIT_OK if rep["verdict"] == "pass" else EXIT_REFUTED


def cmd_coincide(a):
    M, Mt = load_structure(a.M), load_structure(a.MT)
    red_a, red_x = load_reduct(a.SPECA), load_reduct(a.SPECX)
    N, Nt = _base_for(red_a)
    omegas = load_maps(a.omega)
    if len(omegas) != 1:
        raise UsageError("coincide needs exactly one carrier")
    rep = coincidence_check(omegas[0], M, Mt, red_a, red_x, N, Nt, a.depth, objects=[M])
    return rep, EXIT_OK if rep["verdict"] == "pass" else EXIT_REFUTED


def cmd_catalog(a):
    if a.action == "list":
        return catalog.list_names(), EXIT_OK
    if not a.name:
        raise UsageError("catalog get needs a NAME")
    obj = catalog.get(a.name)
    if isinstance(obj, PiggybackProblem):
        return _problem_json(obj), EXIT_OK
    return obj.to_json(), EXIT_OK


# ---------------------------------------------------------------- rendering


def render_text(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        lines = []
        for k in sorted(obj):
            v = obj[k]
            if isinstance(v, (dict, list)) and not _flat(v):
                lines.append(f"{pad}{k}:")
                lines.append(render_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {_scalar(v)}")
        return "\n".join(lines)
    if isinstance(obj, list):
        if _flat(obj):
            return pad + _scalar(obj)
        return "\n".join(f"{pad}-\n{render_text(v, indent + 1)}" if isinstance(v, (dict, list)) and not _flat(v)
                         else f"{pad}- {_scalar(v)}" for v in obj)
    return pad + _scalar(obj)


def _flat(v) -> bool:
    if isinstance(v, dict):
        return not v
    return all(not isinstance(x, (dict, list)) or (isinstance(x, list) and _flat(x)) for x in v)


def _scalar(v) -> str:
    return json.dumps(v, separators=(",", ":")) if isinstance(v, (list, dict)) else str(v)


# ---------------------------------------------------------------- parser


GLOBAL_DEFAULTS = {"fmt": "json", "max_power": None, "max_closed_sets": None, "max_nodes": None,
                   "seed_order": 0, "workers": None}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    g = common.add_argument_group("global options")
    g.add_argument("--max-power", type=int, help="largest direct power size to build")
    g.add_argument("--max-closed-sets", type=int, help="cap on subuniverse search states")
    g.add_argument("--max-nodes", type=int, help="cap on homomorphism search nodes (also DUALFORGE_MAX_NODES)")
    fmt = g.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="fmt", action="store_const", const="json", help="JSON output (default)")
    fmt.add_argument("--text", dest="fmt", action="store_const", const="text", help="plain text output")
    g.add_argument("--seed-order", type=int, choices=(0, 1), help="search branch order")
    g.add_argument("--workers", type=int, help="processes for brute-force verification")
    p = argparse.ArgumentParser(prog="dualforge", description="Piggyback dualities for finite structures.",
                                parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("homs", parents=[common], help="enumerate homomorphisms A -> B")
    s.add_argument("A")
    s.add_argument("B")
    s.set_defaults(func=cmd_homs)

    s = sub.add_parser("clo1", parents=[common], help="unary term functions with witnessing terms")
    s.add_argument("M")
    s.set_defaults(func=cmd_clo1)

    s = sub.add_parser("reduct", parents=[common], help="apply a reduct definition")
    s.add_argument("M")
    s.add_argument("SPEC")
    s.set_defaults(func=cmd_reduct)

    s = sub.add_parser("carriers", parents=[common], help="homomorphisms from the reduct into a base")
    s.add_argument("M")
    s.add_argument("SPEC")
    s.add_argument("BASE")
    s.set_defaults(func=cmd_carriers)

    s = sub.add_parser("omegamax", parents=[common], help="maximal subuniverses inside carrier preimages")
    s.add_argument("M")
    s.add_argument("SPEC")
    s.add_argument("BASE")
    s.add_argument("--rel", required=True, help="relation name on the base or its alter ego, 'delta', or a file")
    s.add_argument("--omega", help="JSON file with carrier maps (default: all carriers)")
    s.add_argument("--keep-diagonal", action="store_true", help="keep a result equal to the diagonal")
    s.add_argument("--strategy", choices=("topdown", "extension"), default="topdown")
    s.set_defaults(func=cmd_omegamax)

    s = sub.add_parser("entails", parents=[common], help="does MT entail the relation R on M")
    s.add_argument("M")
    s.add_argument("MT")
    s.add_argument("R", help="relation file, catalog:STRUCT.REL or 'delta'")
    s.set_defaults(func=cmd_entails)

    s = sub.add_parser("piggyback", parents=[common], help="build an alter ego over a base duality")
    s.add_argument("M")
    s.add_argument("SPEC")
    s.add_argument("--base", choices=sorted(BASES), required=True)
    s.add_argument("--omega", help="JSON file with carrier maps")
    s.set_defaults(func=cmd_piggyback)

    s = sub.add_parser("conditions", parents=[common], help="check the hypotheses of a piggyback theorem")
    s.add_argument("M", help="structure, or a catalog problem when MT and SPEC are omitted")
    s.add_argument("MT", nargs="?")
    s.add_argument("SPEC", nargs="?")
    s.add_argument("--theorem", choices=THEOREMS, required=True)
    s.add_argument("--sq", help="reflexive antisymmetric relation name for the order-based variant")
    s.add_argument("--omega", help="JSON file with carrier maps")
    s.add_argument("--mt-reduct", help="reduct of MT into the base alter ego type")
    s.set_defaults(func=cmd_conditions)

    s = sub.add_parser("verify", parents=[common], help="brute-force evaluation-map checks")
    s.add_argument("M")
    s.add_argument("MT")
    s.add_argument("--mode", choices=("duality", "coduality", "full", "strong"), default="duality")
    s.add_argument("--depth", type=int, default=2)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("coincide", parents=[common], help="check that the piggybacked and base duals coincide")
    s.add_argument("M")
    s.add_argument("MT")
    s.add_argument("SPECA")
    s.add_argument("SPECX")
    s.add_argument("--omega", required=True)
    s.add_argument("--depth", type=int, default=1)
    s.set_defaults(func=cmd_coincide)

    s = sub.add_parser("catalog", parents=[common], help="built-in structures, reducts and problems")
    s.add_argument("action", choices=("list", "get"))
    s.add_argument("name", nargs="?")
    s.set_defaults(func=cmd_catalog)
    return p


def run(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    # parent actions are shared with every subparser, so defaults are filled in here
    for k, v in GLOBAL_DEFAULTS.items():
        if not hasattr(a, k):
            setattr(a, k, v)
    try:
        with limits(max_power=a.max_power, max_closed_sets=a.max_closed_sets,
                    max_nodes=a.max_nodes, seed_order=a.seed_order):
            data, code = a.func(a)
    except ResourceLimitError as exc:
        data, code = {"error": str(exc), "kind": "resource-limit"}, EXIT_LIMIT
    except (DualforgeError, ValueError, KeyError) as exc:
        data, code = {"error": str(exc), "kind": "input"}, EXIT_USAGE
    if a.fmt == "text":
        out.write(render_text(data) + "\n")
    else:
        out.write(json.dumps(data, sort_keys=True, indent=2) + "\n")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
