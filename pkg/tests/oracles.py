"""Slow, independent reference computations used as test oracles.

Nothing here calls the package's search code; structures are read only
through their raw tables.
"""

from __future__ import annotations

import itertools


def apply(M, op, args):
    arity, table = M.ops[op]
    idx = 0
    for a in args:
        idx = idx * M.size + a
    return table[idx]


def naive_homs(A, B):
    out = []
    for h in itertools.product(range(B.size), repeat=A.size):
        ok = True
        for op, (arity, _) in A.ops.items():
            for args in itertools.product(range(A.size), repeat=arity):
                if h[apply(A, op, args)] != apply(B, op, [h[a] for a in args]):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            for rel, r in A.rels.items():
                rb = B.rel(rel)
                if any(tuple(h[a] for a in t) not in rb for t in r.tuples):
                    ok = False
                    break
        if ok:
            out.append(h)
    return out


def power_apply(M, op, tuples):
    """Coordinatewise ``op`` on ``k``-tuples of elements of ``M``."""
    k = len(tuples[0]) if tuples else 1
    return tuple(apply(M, op, [t[i] for t in tuples]) for i in range(k))


def is_closed(M, S, k):
    S = set(S)
    for op, (arity, table) in M.ops.items():
        if arity == 0:
            if (table[0],) * k not in S:
                return False
            continue
        for args in itertools.product(S, repeat=arity):
            if power_apply(M, op, args) not in S:
                return False
    return True


def generated(M, seed, k):
    S = set(seed)
    for op, (arity, table) in M.ops.items():
        if arity == 0:
            S.add((table[0],) * k)
    while True:
        new = set()
        for op, (arity, _) in M.ops.items():
            if arity == 0:
                continue
            for args in itertools.product(S, repeat=arity):
                v = power_apply(M, op, args)
                if v not in S:
                    new.add(v)
        if not new:
            return S
        S |= new


def preimage(omegas, r):
    n = len(omegas[0])
    return {t for t in itertools.product(range(n), repeat=len(omegas))
            if tuple(w[a] for w, a in zip(omegas, t)) in set(r)}


def maximal_subuniverses_exhaustive(M, bound, k):
    """Every subset of ``bound`` tested for closure; returns the maximal nonempty ones."""
    bound = sorted(bound)
    closed = []
    for bits in range(1, 1 << len(bound)):
        S = {bound[i] for i in range(len(bound)) if bits >> i & 1}
        if is_closed(M, S, k):
            closed.append(frozenset(S))
    return sorted((set(S) for S in closed if not any(S < T for T in closed)), key=sorted)


def unique_maximal_by_union(M, bound, k):
    """If the union of all one-generated subuniverses inside ``bound`` is closed it is the unique maximum."""
    bound = set(bound)
    U = set()
    for t in bound:
        g = generated(M, [t], k)
        if g <= bound:
            U |= g
    return U if is_closed(M, U, k) else None
