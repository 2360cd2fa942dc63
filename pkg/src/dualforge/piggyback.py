"""Carriers, maximal relations, entailment, alter-ego builders and theorem checkers.

A piggyback problem fixes ``M``, a structural reduct ``M_flat`` in the prevariety
of a base structure ``N`` (with a known full duality via ``Nt``), and a set of
carrier maps ``Omega`` in ``hom(M_flat, N)``.  Optionally it also fixes a
candidate alter ego ``Mt`` and its reduct ``Mt_flat`` on the ``Nt`` side.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

from .clone import clo1_maps, compose_family, endomorphisms, named_constants
from .core import (
    LIMITS,
    Closure,
    DualforgeError,
    FiniteStructure,
    Relation,
    ReductSpec,
    ResourceLimitError,
    Signature,
    apply_reduct,
    branch_order,
    closed_sets_within,
    decode,
    elems_of,
    encode,
    keep_reduct,
    power,
    preimage,
    relation_is_subuniverse,
    subpower,
    table_index,
)
from .hom import check_compatible, hom_maps, in_prevariety, is_hom, separates_points, separates_structure

VACUOUS = "vacuous (discrete topology)"


class MissingField(DualforgeError):
    """A theorem needs a problem field that was not supplied."""


# ---------------------------------------------------------------- problem and report


@dataclass
class PiggybackProblem:
    M: FiniteStructure
    reduct: ReductSpec
    N: FiniteStructure
    Nt: FiniteStructure
    Omega: list[tuple[int, ...]]
    Mt: FiniteStructure | None = None
    Mt_reduct: ReductSpec | None = None

    def __post_init__(self):
        self.Omega = [tuple(w) for w in self.Omega]
        for w in self.Omega:
            if not is_hom(w, self.M_flat, self.N):
                raise DualforgeError(f"carrier {list(w)} is not a homomorphism M_flat -> {self.N.name or 'N'}")
        if not in_prevariety(self.M_flat, self.N):
            raise DualforgeError("M_flat is not in the prevariety generated by N")

    @cached_property
    def M_flat(self) -> FiniteStructure:
        return apply_reduct(self.M, self.reduct)

    @cached_property
    def Mt_flat(self) -> FiniteStructure:
        if self.Mt is None or self.Mt_reduct is None:
            raise MissingField("this check needs the alter ego Mt and its reduct Mt_reduct")
        return apply_reduct(self.Mt, self.Mt_reduct)

    def require_Mt(self, theorem: str) -> FiniteStructure:
        if self.Mt is None:
            raise MissingField(f"{theorem} needs a candidate alter ego Mt")
        return self.Mt

    def swapped(self) -> "PiggybackProblem":
        """Roles of ``(M, N)`` and ``(Mt, Nt)`` exchanged."""
        if self.Mt is None or self.Mt_reduct is None:
            raise MissingField("swapping needs Mt and Mt_reduct")
        return PiggybackProblem(self.Mt, self.Mt_reduct, self.Nt, self.N, self.Omega,
                                self.M, self.reduct)


@dataclass
class ConditionReport:
    theorem: str
    conditions: list[dict] = field(default_factory=list)

    def add(self, cid: str, ok: bool | None, witness=None, note: str | None = None) -> bool:
        entry = {"id": cid, "verdict": "not-applicable" if ok is None else ("pass" if ok else "fail")}
        if witness is not None:
            entry["witness"] = witness
        if note:
            entry["note"] = note
        self.conditions.append(entry)
        return bool(ok) or ok is None

    def vacuous(self, cid: str) -> None:
        self.conditions.append({"id": cid, "verdict": "pass", "note": VACUOUS})

    def absorb(self, prefix: str, other: "ConditionReport") -> None:
        for c in other.conditions:
            self.conditions.append({**c, "id": f"{prefix}.{c['id']}"})

    @property
    def verdict(self) -> str:
        return "pass" if all(c["verdict"] != "fail" for c in self.conditions) else "fail"

    def to_json(self) -> dict:
        return {"theorem": self.theorem, "conditions": self.conditions, "verdict": self.verdict}


# ---------------------------------------------------------------- carriers and Omega_max


def carriers(M_flat: FiniteStructure, N: FiniteStructure) -> list[tuple[int, ...]]:
    return hom_maps(M_flat, N)


def _maximal_topdown(P: FiniteStructure, cl: Closure, bound: int) -> list[int]:
    """Maximal subuniverses of ``P`` inside the bitmask ``bound``.

    Start from ``K = bound``.  Drop every ``t`` whose generated subuniverse
    leaves ``K``; if what remains is closed it is a candidate, otherwise some
    operation maps arguments ``a1..ak`` in it outside, and every subuniverse
    inside misses at least one ``ai``, so branch on removing each.
    """
    sg = {}
    for t in elems_of(bound):
        res = cl.close([t], bound)
        if res is not None:
            sg[t] = res[1]
    base = cl.close([], bound)
    if base is None:
        return []
    consts = base[1]
    n = P.size
    ops = [(a, t) for a, t in P.ops.values() if a >= 2]
    seen: set[int] = set()
    leaves: list[int] = []
    stack = [bound]
    cap = LIMITS.max_closed_sets
    while stack:
        K = stack.pop()
        while True:
            S = 0
            for t, m in sg.items():
                if K >> t & 1 and m & ~K == 0:
                    S |= 1 << t
            if S == K:
                break
            K = S
        if K & consts != consts or K == 0:
            continue
        if K in seen:
            continue
        seen.add(K)
        if len(seen) > cap:
            raise ResourceLimitError(f"more than {cap} search states; raise max_closed_sets to continue")
        members = elems_of(K)
        bad = None
        for arity, table in ops:
            for args in itertools.product(members, repeat=arity):
                if not K >> table[table_index(args, n)] & 1:
                    bad = args
                    break
            if bad is not None:
                break
        if bad is None:
            leaves.append(K)
            continue
        for a in branch_order(sorted(set(bad))):
            stack.append(K & ~(1 << a))
    leaves = sorted(set(leaves), key=lambda m: -bin(m).count("1"))
    maximal: list[int] = []
    for m in leaves:
        if not any(m & ~big == 0 for big in maximal):
            maximal.append(m)
    return maximal


def _maximal_extension(P: FiniteStructure, cl: Closure, bound: int) -> list[int]:
    """Same as :func:`_maximal_topdown` by closure-extension DFS (independent oracle)."""
    return [m for m in closed_sets_within(P, elems_of(bound), maximal_only=True, closure=cl) if m]


def omega_max_detailed(M: FiniteStructure, Omega: Sequence[Sequence[int]], r: Relation,
                       drop_diagonal: bool = True,
                       strategy: str = "topdown") -> list[tuple[Relation, list[list[tuple[int, ...]]]]]:
    """``Omega_max(M, r)`` with, for each relation, the carrier tuples that produce it.

    All ``k``-tuples of carriers are used (with repetition).  With
    ``drop_diagonal`` a binary result equal to the diagonal of ``M`` is left
    out when ``r`` is reflexive; it is always entailed.
    """
    if strategy not in ("topdown", "extension"):
        raise ValueError(f"unknown strategy {strategy!r}")
    Omega = [tuple(w) for w in Omega]
    k = r.arity
    n = M.size
    P = power(M, k)
    cl = Closure(P)
    search = _maximal_topdown if strategy == "topdown" else _maximal_extension
    found: dict[Relation, list] = {}
    for ws in itertools.product(Omega, repeat=k):
        pre = preimage(ws, r)
        bound = 0
        for t in pre.tuples:
            bound |= 1 << encode(t, n)
        for m in search(P, cl, bound):
            rel = Relation(k, tuple(decode(c, n, k) for c in elems_of(m)))
            found.setdefault(rel, []).append(list(ws))
    diag = Relation.diagonal(n) if k == 2 else None
    drop = drop_diagonal and k == 2 and r.is_reflexive(max(max(w) for w in Omega) + 1 if Omega else 0)
    out = [(rel, sorted(src)) for rel, src in found.items() if not (drop and rel == diag)]
    return sorted(out, key=lambda e: e[0].sort_key())


def omega_max(M: FiniteStructure, Omega: Sequence[Sequence[int]], r: Relation,
              drop_diagonal: bool = True, strategy: str = "topdown") -> list[Relation]:
    return [rel for rel, _ in omega_max_detailed(M, Omega, r, drop_diagonal, strategy)]


def is_maximal_in(M: FiniteStructure, s: Relation, bound: Relation) -> bool:
    """``s`` is a subuniverse inside ``bound`` with no proper subuniverse extension there."""
    if not (s <= bound and relation_is_subuniverse(M, s)):
        return False
    k = s.arity
    P = power(M, k)
    cl = Closure(P)
    n = M.size
    bmask = 0
    for t in bound.tuples:
        bmask |= 1 << encode(t, n)
    codes = [encode(t, n) for t in s.tuples]
    smask = 0
    for c in codes:
        smask |= 1 << c
    for t in elems_of(bmask & ~smask):
        if cl.extend(codes, smask, [t], bmask) is not None:
            return False
    return True


# ---------------------------------------------------------------- entailment


def entails(M: FiniteStructure, Mt: FiniteStructure, r: Relation) -> tuple[bool, dict | None]:
    """Does the alter ego ``Mt`` entail ``r`` (a subuniverse of ``M^k``)?

    Test-algebra method: with ``A`` the substructure of ``M^k`` on ``r``, every
    morphism ``D(A) -> Mt`` must send the coordinate projections into ``r``.
    Swap the arguments to ask whether ``M`` entails a relation of ``Mt``.
    """
    from .verify import dual

    if not relation_is_subuniverse(M, r):
        raise DualforgeError("relation is not a subuniverse of the power")
    k = r.arity
    A = subpower(M, k, r.tuples, name="r")
    DA = dual(A, M, Mt)
    pts = sorted(r.tuples)
    proj = []
    for i in range(k):
        rho = tuple(p[i] for p in pts)
        proj.append(DA._pos[rho])
    for alpha in hom_maps(DA.structure, Mt):
        img = tuple(alpha[p] for p in proj)
        if img not in r:
            return False, {"alpha": list(alpha), "carrier": [list(x) for x in DA.carrier],
                           "image": list(img)}
    return True, None


def entails_bruteforce(M: FiniteStructure, Mt: FiniteStructure, r: Relation,
                       depth: int = 2) -> tuple[bool, dict | None]:
    """Semantic check restricted to ``A`` ranging over substructures of ``M^n``, ``n <= depth``.

    For each ``A`` the ``k``-tuples of ``D(A)`` that lie in ``r`` pointwise
    form a relation ``r_A``; every morphism ``D(A) -> Mt`` must carry ``r_A``
    into ``r``.  The verdict only depends on ``A`` up to isomorphism.
    """
    import numpy as np

    from .hom import color_refinement, find_isomorphism
    from .verify import dual, test_family

    if not relation_is_subuniverse(M, r):
        raise DualforgeError("relation is not a subuniverse of the power")
    k = r.arity
    R = np.zeros((M.size,) * k, dtype=bool)
    R[tuple(np.array(r.tuples).T)] = True
    tag = "_entailed"
    while tag in Mt.rels:
        tag += "_"
    target = Mt.with_relations({tag: r})
    passed: dict = {}
    for n, sub, A in test_family(M, depth):
        colors = color_refinement(A)
        key = (A.size, tuple(sorted(colors)))
        if any(find_isomorphism(A, B, (colors, cb)) is not None for B, cb in passed.get(key, [])):
            continue
        DA = dual(A, M, Mt)
        c = len(DA.carrier)
        if c:
            C = np.array(DA.carrier, dtype=np.int64)
            idx = tuple(C.reshape((1,) * i + (c,) + (1,) * (k - 1 - i) + (A.size,)) for i in range(k))
            rA = Relation(k, tuple(map(tuple, np.argwhere(R[idx].all(axis=-1)).tolist())))
        else:
            rA = Relation(k, ())
        plain = hom_maps(DA.structure, Mt)
        if len(hom_maps(DA.structure.with_relations({tag: rA}), target)) == len(plain):
            passed.setdefault(key, []).append((A, colors))
            continue
        for alpha in plain:
            for xs in rA.tuples:
                if tuple(alpha[x] for x in xs) not in r:
                    return False, {"n": n, "carrier": list(sub), "alpha": list(alpha),
                                   "maps": [list(DA.carrier[x]) for x in xs]}
    return True, None


def derive_delta_entailment(M: FiniteStructure, Mt: FiniteStructure, Omega: Sequence[Sequence[int]],
                            sq: Relation, base_size: int | None = None) -> tuple[bool, dict]:
    """Each ``s`` in ``Omega_max(M, Delta_N)`` as ``t1 & t2`` with ``t1``, ``t2`` from ``sq`` and its converse."""
    n = base_size if base_size is not None else 1 + max(max(t) for t in sq.tuples)
    if not (sq.arity == 2 and sq.is_reflexive(n) and sq.is_antisymmetric()):
        raise DualforgeError("sq must be a reflexive, antisymmetric binary relation on the base")
    deltas = omega_max(M, Omega, Relation.diagonal(n), drop_diagonal=False)
    ups = omega_max(M, Omega, sq, drop_diagonal=False)
    downs = omega_max(M, Omega, sq.converse(), drop_diagonal=False)
    cache: dict[Relation, bool] = {}

    def ok(t):
        if t not in cache:
            cache[t] = entails(M, Mt, t)[0]
        return cache[t]

    parts = []
    for s in deltas:
        pair = next(((t1, t2) for t1 in ups for t2 in downs if (t1 & t2) == s), None)
        if pair is None:
            return False, {"decomposition": parts, "missing": [list(t) for t in s.tuples]}
        t1, t2 = pair
        parts.append({"s": [list(t) for t in s.tuples], "t1": [list(t) for t in t1.tuples],
                      "t2": [list(t) for t in t2.tuples]})
        for t in (t1, t2):
            if not ok(t):
                return False, {"decomposition": parts, "not_entailed": [list(x) for x in t.tuples]}
    return True, {"decomposition": parts}


# ---------------------------------------------------------------- builders


def _base(sig: Signature) -> tuple[FiniteStructure, FiniteStructure]:
    from .catalog import infer_base

    return infer_base(sig)


def _relation_names(rels: Sequence[Relation], taken: Sequence[str]) -> dict[str, Relation]:
    out = {}
    i = 0
    for r in rels:
        while f"r{i}" in taken:
            i += 1
        out[f"r{i}"] = r
        i += 1
    return out


def order_reduct(Mt: FiniteStructure) -> ReductSpec:
    """``le`` defined as the conjunction of every partial order among the relations of ``Mt``."""
    n = Mt.size
    orders = [k for k, r in sorted(Mt.rels.items())
              if r.arity == 2 and r.is_reflexive(n) and r.is_antisymmetric()
              and all((a, c) in r for a, b in r.tuples for b2, c in r.tuples if b == b2)]
    if not orders:
        raise DualforgeError("the alter ego has no partial order to serve as its reduct")
    atoms = tuple(("rel", k, (0, 1)) for k in orders)
    return ReductSpec(Signature.of({}, {"le": 2}), {}, {"le": atoms})


def build_alter_ego_D(M: FiniteStructure, reduct: ReductSpec, Omega: Sequence[Sequence[int]] | None = None,
                      endomorphisms_mode: str = "auto", name: str | None = None
                      ) -> tuple[FiniteStructure, ConditionReport]:
    """Alter ego ``<M; Omega_max(M, <=)>`` over the lattice base.

    ``endomorphisms_mode`` is ``auto`` (add endomorphisms of ``M`` as unary
    operations only when ``Omega o Clo1`` would not separate points), ``always``
    or ``never``.
    """
    from .catalog import structure

    D, TWO = structure("D"), structure("TWOPOS")
    if reduct.target != D.sig:
        raise DualforgeError("the reduct must target the bounded lattice signature (join, meet, bot, top)")
    Mf = apply_reduct(M, reduct)
    if not in_prevariety(Mf, D):
        raise DualforgeError("the lattice reduct is not in the prevariety generated by D")
    Omega = [tuple(w) for w in (Omega if Omega is not None else carriers(Mf, D))]
    for w in Omega:
        if not is_hom(w, Mf, D):
            raise DualforgeError(f"carrier {list(w)} is not a lattice homomorphism into D")
    rels = omega_max(M, Omega, TWO.rel("le"))
    Mt = FiniteStructure(M.size, {}, _relation_names(rels, []), name=name or f"{M.name}_EGO", labels=M.labels)
    sep, _ = separates_points(compose_family(Omega, clo1_maps(Mt)), M.size)
    if endomorphisms_mode == "always" or (endomorphisms_mode == "auto" and not sep):
        extra = {f"e{i}": (1, e) for i, e in enumerate(endomorphisms(M)) if e != tuple(range(M.size))}
        Mt = Mt.with_operations(extra)
    elif endomorphisms_mode not in ("auto", "never"):
        raise ValueError(f"unknown endomorphisms mode {endomorphisms_mode!r}")
    report = ConditionReport("D-based")
    report.vacuous("0")
    ok, wit = separates_points(compose_family(Omega, clo1_maps(Mt)), M.size)
    report.add("1", ok, wit)
    report.add("2", True, note="the relations are in the type of the alter ego")
    ok, wit = check_compatible(M, Mt)
    report.add("compatible", ok, wit)
    return Mt, report


def build_alter_ego_S(M: FiniteStructure, reduct: ReductSpec, omega: Sequence[int],
                      Mt: FiniteStructure | None = None, Mt_reduct: ReductSpec | None = None,
                      name: str | None = None) -> tuple[FiniteStructure, ConditionReport]:
    """Alter ego over a semilattice base, checked against the single carrier ``omega``.

    Without ``Mt`` the candidate is ``M`` restricted to the reduct operations
    plus every relation maximal in ``ker(omega)`` other than the diagonal.
    """
    omega = tuple(omega)
    N, Nt = _base(reduct.target)
    Mf = apply_reduct(M, reduct)
    if not is_hom(omega, Mf, N):
        raise DualforgeError("omega is not a homomorphism of the semilattice reduct")
    kernel = omega_max(M, [omega], Relation.diagonal(N.size))
    if Mt is None:
        ops = dict(M.ops)
        meet = Mf.table("meet")
        n = M.size
        bounds = {"bot": [a for a in range(n) if all(meet[a * n + b] == a for b in range(n))],
                  "top": [a for a in range(n) if all(meet[a * n + b] == b for b in range(n))]}
        # name the bounds of the meet order when the base alter ego needs them
        for b, found in bounds.items():
            if b in Nt.sig.op_arities and b not in ops:
                if not found:
                    raise DualforgeError(f"the meet order of {M.name or 'M'} has no {b}")
                ops[b] = (0, found)
        Mt = FiniteStructure(M.size, ops, _relation_names(kernel, M.rel_names()),
                             name=name or f"{M.name}_EGO", labels=M.labels)
        Mt_reduct = keep_reduct(Nt.sig)
    if Mt_reduct is None:
        Mt_reduct = keep_reduct(Nt.sig)
    Mtf = apply_reduct(Mt, Mt_reduct)
    report = ConditionReport("S-based")
    report.vacuous("0")
    if Mtf.sig != Nt.sig:
        report.add("omega-in-Y", False, {"reason": "the alter ego reduct does not match the base alter ego signature"})
    else:
        report.add("omega-in-Y", is_hom(omega, Mtf, Nt) and in_prevariety(Mtf, Nt))
    ok, wit = separates_points(compose_family([omega], clo1_maps(Mt)), M.size)
    report.add("1", ok, wit)
    bad = None
    for r in kernel:
        good, w = entails(M, Mt, r)
        if not good:
            bad = {"relation": [list(t) for t in r.tuples], **w}
            break
    report.add("2", bad is None, bad)
    ok, wit = check_compatible(M, Mt)
    report.add("compatible", ok, wit)
    return Mt, report


# ---------------------------------------------------------------- theorem checkers

THEOREMS = ("pig-simple", "pig-general", "copig-simple", "copig-general",
            "strong-I", "strong-II", "strong-III", "two-for-one")


def _entail_all(first: FiniteStructure, second: FiniteStructure, rels: Sequence[Relation]):
    for r in rels:
        ok, w = entails(first, second, r)
        if not ok:
            return False, {"relation": [list(t) for t in r.tuples], **w}
    return True, None


def _single(problem: PiggybackProblem, theorem: str) -> tuple[int, ...]:
    if len(problem.Omega) != 1:
        raise MissingField(f"{theorem} needs exactly one carrier, got {len(problem.Omega)}")
    return problem.Omega[0]


def _omega_in_Y(problem: PiggybackProblem, Omega) -> tuple[bool, dict | None]:
    Mtf = problem.Mt_flat
    if Mtf.sig != problem.Nt.sig:
        return False, {"reason": "Mt_flat and Nt have different signatures"}
    if not in_prevariety(Mtf, problem.Nt):
        return False, {"reason": "Mt_flat is not in the prevariety of Nt"}
    for w in Omega:
        if not is_hom(w, Mtf, problem.Nt):
            return False, {"carrier": list(w)}
    return True, None


def _sq_condition(report: ConditionReport, problem: PiggybackProblem, sq: str, side: str) -> None:
    base = problem.Nt if side == "D" else problem.N
    if sq not in base.rels:
        raise MissingField(f"--sq names no relation of {base.name or 'the base'}")
    r = base.rel(sq)
    ok = r.arity == 2 and r.is_reflexive(base.size) and r.is_antisymmetric()
    if side == "D":
        first, second = problem.M, problem.require_Mt("sq")
    else:
        first, second = problem.require_Mt("sq"), problem.M
    witness = None
    if ok:
        ok, witness = derive_delta_entailment(first, second, problem.Omega, r, base.size)
    report.add("3.ii'", ok, witness, note=f"{sq} is reflexive and antisymmetric")


def _pig(problem: PiggybackProblem, general: bool, sq: str | None) -> ConditionReport:
    name = "pig-general" if general else "pig-simple"
    Mt = problem.require_Mt(name)
    Omega = problem.Omega if general else [_single(problem, name)]
    rep = ConditionReport(name)
    rep.vacuous("0")
    ok, w = separates_structure(compose_family(Omega, clo1_maps(Mt)), problem.M_flat, problem.N)
    rep.add("1", ok, w)
    if problem.Nt.sig.purely_relational:
        rep.add("2", True, note="Nt is purely relational")
    else:
        if problem.Mt_reduct is None:
            raise MissingField(f"{name} condition (2)(ii) needs Mt_reduct")
        ok, w = _omega_in_Y(problem, Omega)
        if general and ok and any(a > 1 for a in problem.Nt.sig.op_arities.values()):
            ok, w = False, {"reason": "Nt has an operation of arity > 1"}
        rep.add("2", ok, w)
    rels = [s for r in problem.Nt.rels.values() for s in omega_max(problem.M, Omega, r)]
    ok, w = _entail_all(problem.M, Mt, rels)
    rep.add("3.i", ok, w)
    if sq is not None:
        _sq_condition(rep, problem, sq, "D")
    elif general:
        ok, w = _entail_all(problem.M, Mt, omega_max(problem.M, Omega, Relation.diagonal(problem.N.size)))
        rep.add("3.ii", ok, w)
    else:
        omega = Omega[0]
        ok, w = separates_points(compose_family([omega], clo1_maps(problem.M)), problem.M.size)
        if ok:
            rep.add("3.ii", True, note="(b) omega o Clo1(M) separates points")
        else:
            ok, w = _entail_all(problem.M, Mt, omega_max(problem.M, [omega], Relation.diagonal(problem.N.size)))
            rep.add("3.ii", ok, w, note="(a) kernel-maximal relations entailed")
    return rep


def _copig(problem: PiggybackProblem, general: bool, sq: str | None) -> ConditionReport:
    name = "copig-general" if general else "copig-simple"
    Mt = problem.require_Mt(name)
    if problem.Mt_reduct is None:
        raise MissingField(f"{name} needs Mt_reduct")
    Omega = problem.Omega if general else [_single(problem, name)]
    rep = ConditionReport(name)
    ok, info = named_constants(Mt)
    rep.add("named-constants", ok, None if ok else info)
    ok, w = _omega_in_Y(problem, Omega)
    rep.add("omega-in-Y", ok, w)
    ok, w = separates_structure(compose_family(Omega, clo1_maps(problem.M)), problem.Mt_flat, problem.Nt)
    rep.add("1", ok, w)
    if problem.N.sig.purely_relational:
        rep.add("2", True, note="N is purely relational")
    else:
        ok = not general or all(a <= 1 for a in problem.N.sig.op_arities.values())
        rep.add("2", ok, None if ok else {"reason": "N has an operation of arity > 1"})
    rep.vacuous("3.i.a")
    rels = [s for r in problem.N.rels.values() for s in omega_max(Mt, Omega, r)]
    ok, w = _entail_all(Mt, problem.M, rels)
    rep.add("3.i.b", ok, w)
    if sq is not None:
        _sq_condition(rep, problem, sq, "coD")
    elif general:
        ok, w = _entail_all(Mt, problem.M, omega_max(Mt, Omega, Relation.diagonal(problem.N.size)))
        rep.add("3.ii", ok, w)
    else:
        omega = Omega[0]
        ok, w = separates_points(compose_family([omega], clo1_maps(Mt)), Mt.size)
        if ok:
            rep.add("3.ii", True, note="(b) omega o Clo1(Mt) separates points")
        else:
            ok, w = _entail_all(Mt, problem.M, omega_max(Mt, [omega], Relation.diagonal(problem.N.size)))
            rep.add("3.ii", ok, w, note="(a) kernel-maximal relations entailed")
    return rep


def _strong(problem: PiggybackProblem, part: str) -> ConditionReport:
    name = f"strong-{part}"
    Mt = problem.require_Mt(name)
    if problem.Mt_reduct is None:
        raise MissingField(f"{name} needs Mt_reduct")
    omega = _single(problem, name)
    rep = ConditionReport(name)
    rep.vacuous("0")
    ok, w = _omega_in_Y(problem, [omega])
    rep.add("omega", ok, w, note="omega in B(M_flat, N) and Y(Mt_flat, Nt)")
    ok, w = check_compatible(problem.M, Mt)
    rep.add("compatible", ok, w)
    sep_Mt = compose_family([omega], clo1_maps(Mt))
    sep_M = compose_family([omega], clo1_maps(problem.M))
    if part == "I":
        rep.add("1", problem.N.sig.total_algebra, note="N is a total algebra")
        ok, w = separates_points(sep_Mt, problem.M.size)
        rep.add("2.i", ok, w)
        ok, w = separates_structure(sep_M, problem.Mt_flat, problem.Nt)
        rep.add("2.ii", ok, w)
        rels = [s for r in problem.Nt.rels.values() for s in omega_max(problem.M, [omega], r)]
        ok, w = _entail_all(problem.M, Mt, rels)
        rep.add("2.iii", ok, w)
    elif part == "II":
        rep.add("1", problem.Nt.sig.total_algebra, note="Nt is a total algebra")
        ok, w = separates_structure(sep_Mt, problem.M_flat, problem.N)
        rep.add("2.i", ok, w)
        ok, w = separates_points(sep_M, problem.M.size)
        rep.add("2.ii", ok, w)
        if problem.N.rels:
            rels = [s for r in problem.N.rels.values() for s in omega_max(Mt, [omega], r)]
            ok, w = _entail_all(Mt, problem.M, rels)
            rep.add("2.iii", ok, w)
        else:
            rep.add("2.iii", None, note="N has no relations")
    else:
        both = problem.N.sig.total_algebra and problem.Nt.sig.total_algebra
        rep.add("1", both, note="N and Nt are total algebras")
        ok, w = separates_points(sep_Mt, problem.M.size)
        rep.add("2.i", ok, w)
        ok, w = separates_points(sep_M, problem.M.size)
        rep.add("2.ii", ok, w)
    return rep


def strong_part(problem: PiggybackProblem) -> str:
    """The strong-duality variant whose shape matches the base pair."""
    if problem.N.sig.total_algebra and problem.Nt.sig.total_algebra:
        return "III"
    if problem.N.sig.total_algebra:
        return "I"
    if problem.Nt.sig.total_algebra:
        return "II"
    raise DualforgeError("neither N nor Nt is a total algebra; no strong theorem applies")


def check_theorem(problem: PiggybackProblem, theorem: str, sq: str | None = None) -> ConditionReport:
    if theorem == "pig-simple":
        return _pig(problem, False, sq)
    if theorem == "pig-general":
        if len(problem.Omega) == 1:
            simple = _pig(problem, False, sq)
            if simple.verdict == "pass":
                rep = ConditionReport(theorem)
                rep.absorb("single", simple)
                return rep
        return _pig(problem, True, sq)
    if theorem == "copig-simple":
        return _copig(problem, False, sq)
    if theorem == "copig-general":
        if len(problem.Omega) == 1:
            simple = _copig(problem, False, sq)
            if simple.verdict == "pass":
                rep = ConditionReport(theorem)
                rep.absorb("single", simple)
                return rep
        return _copig(problem, True, sq)
    if theorem in ("strong-I", "strong-II", "strong-III"):
        return _strong(problem, theorem.split("-")[1])
    if theorem == "two-for-one":
        rep = ConditionReport(theorem)
        rep.absorb("forward", _strong(problem, strong_part(problem)))
        swapped = problem.swapped()
        rep.absorb("swapped", _strong(swapped, strong_part(swapped)))
        return rep
    raise DualforgeError(f"unknown theorem {theorem!r}; choose from {', '.join(THEOREMS)}")
