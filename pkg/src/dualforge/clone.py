"""Unary term functions, constants and the named-constants test."""

from __future__ import annotations

import itertools
from typing import Iterable, Sequence

from .core import FiniteStructure, generate_substructure, table_index, term_str
from .hom import hom_maps


def clo1(M: FiniteStructure) -> list[tuple[tuple[int, ...], object]]:
    """All unary term functions of ``M`` with a minimal-depth witnessing term.

    Rounds of a breadth-first fixpoint: round ``d`` applies every operation to
    maps found before it, so a map first seen in round ``d`` has depth ``d``.
    """
    n = M.size
    found: dict[tuple[int, ...], object] = {tuple(range(n)): 0}
    order = [tuple(range(n))]
    ops = sorted(M.ops.items())
    for name, (arity, table) in ops:
        if arity == 0:
            const = (table[0],) * n
            if const not in found:
                found[const] = (name,)
                order.append(const)
    old: set = set()
    while True:
        snapshot = list(order)
        fresh = []
        for name, (arity, table) in ops:
            if arity == 0:
                continue
            for args in itertools.product(snapshot, repeat=arity):
                if all(a in old for a in args):
                    continue  # already combined in an earlier round
                img = tuple(table[table_index([a[x] for a in args], n)] for x in range(n))
                if img not in found:
                    found[img] = (name, *(found[a] for a in args))
                    fresh.append(img)
        if not fresh:
            break
        old = set(snapshot)
        order.extend(fresh)
    return sorted(found.items())


def clo1_maps(M: FiniteStructure) -> list[tuple[int, ...]]:
    return [m for m, _ in clo1(M)]


def endomorphisms(M: FiniteStructure) -> list[tuple[int, ...]]:
    return hom_maps(M, M)


def compose_family(omegas: Iterable[Sequence[int]], fns: Iterable[Sequence[int]]) -> list[tuple[int, ...]]:
    """``{w o f}`` deduplicated and sorted."""
    fns = [tuple(f) for f in fns]
    return sorted({tuple(w[x] for x in f) for w in omegas for f in fns})


def named_constants(Mt: FiniteStructure) -> tuple[bool, dict]:
    """Is every constant unary term value also the value of a nullary term?"""
    named = generate_substructure(Mt, [])
    consts = sorted({m[0] for m, _ in clo1(Mt) if len(set(m)) == 1})
    unnamed = [c for c in consts if c not in named]
    report = {"constants": consts, "nullary_values": named}
    if unnamed:
        report["witness"] = {"unnamed_constant": unnamed[0]}
    return not unnamed, report


def render_clone(M: FiniteStructure) -> list[dict]:
    return [{"map": list(m), "term": term_str(t)} for m, t in clo1(M)]
