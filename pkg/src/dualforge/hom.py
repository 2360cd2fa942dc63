"""Homomorphisms between finite structures.

The enumerator is a backtracking search over the generators of the domain.
Each assignment is pushed through the operation tables (values of derived
elements are forced) and through the relations (a fully known tuple must
land in the target relation; a binary tuple with one unknown entry shrinks
the candidate set of that entry).  Every element outside the generators is
forced by propagation, so the search branches only on generators.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import (
    LIMITS,
    Closure,
    FiniteStructure,
    ResourceLimitError,
    SignatureError,
    branch_order,
    table_index,
)


@dataclass(frozen=True, order=True)
class Hom:
    """A structure-preserving map, stored as the tuple of images."""

    map: tuple[int, ...]
    cod_size: int = 0

    @property
    def dom_size(self) -> int:
        return len(self.map)

    def __call__(self, a: int) -> int:
        return self.map[a]

    def __iter__(self):
        return iter(self.map)

    def __len__(self) -> int:
        return len(self.map)

    def __getitem__(self, i):
        return self.map[i]

    def compose(self, inner: Sequence[int]) -> "Hom":
        """``self o inner``."""
        return Hom(tuple(self.map[x] for x in inner), self.cod_size)

    @classmethod
    def verified(cls, mapping: Sequence[int], A: FiniteStructure, B: FiniteStructure) -> "Hom":
        ok, why = check_hom(mapping, A, B)
        if not ok:
            raise SignatureError(f"not a homomorphism: {why}")
        return cls(tuple(mapping), B.size)


def _same_signature(A: FiniteStructure, B: FiniteStructure) -> None:
    if A.sig != B.sig:
        raise SignatureError(f"signature mismatch: {A.sig} vs {B.sig}")


def check_hom(h: Sequence[int], A: FiniteStructure, B: FiniteStructure) -> tuple[bool, str | None]:
    """Return ``(True, None)`` or ``(False, reason)``."""
    _same_signature(A, B)
    h = tuple(h)
    if len(h) != A.size or any(not 0 <= v < B.size for v in h):
        return False, "map has the wrong shape"
    n, m = A.size, B.size
    for op, (arity, ta) in A.ops.items():
        tb = B.table(op)
        for args in itertools.product(range(n), repeat=arity):
            if h[ta[table_index(args, n)]] != tb[table_index([h[a] for a in args], m)]:
                return False, f"{op}{args}"
    for rel, r in A.rels.items():
        rb = B.rel(rel)
        for t in r.tuples:
            if tuple(h[a] for a in t) not in rb:
                return False, f"{rel}{t}"
    return True, None


def is_hom(h: Sequence[int], A: FiniteStructure, B: FiniteStructure) -> bool:
    return check_hom(h, A, B)[0]


def generator_order(A: FiniteStructure, cl: Closure | None = None) -> list[int]:
    """Greedy ascending generating set: each element not yet generated becomes a generator."""
    cl = cl or Closure(A)
    members, mask = cl.close([])
    gens = []
    for a in range(A.size):
        if not mask >> a & 1:
            gens.append(a)
            members, mask = cl.extend(members, mask, [a])
    return gens


class _Search:
    def __init__(self, A: FiniteStructure, B: FiniteStructure):
        self.A, self.B = A, B
        n, m = A.size, B.size
        self.n, self.m = n, m
        self.nullary = []
        self.unary = []
        self.binary = []
        self.higher = []
        for op, (arity, ta) in A.ops.items():
            tb = B.table(op)
            if arity == 0:
                self.nullary.append((ta[0], tb[0]))
            elif arity == 1:
                self.unary.append((ta, tb))
            elif arity == 2:
                self.binary.append(([ta[i * n:(i + 1) * n] for i in range(n)],
                                    [tb[i * m:(i + 1) * m] for i in range(m)]))
            else:
                self.higher.append((arity, ta, tb))
        # relation tuples of A indexed by element
        self.rel_at: list[list] = [[] for _ in range(n)]
        for rel, r in A.rels.items():
            rb = B.rel(rel)
            succ = pred = None
            if r.arity == 2:
                succ = [0] * m
                pred = [0] * m
                for x, y in rb.tuples:
                    succ[x] |= 1 << y
                    pred[y] |= 1 << x
            else:
                unary_mask = 0
                if r.arity == 1:
                    for (x,) in rb.tuples:
                        unary_mask |= 1 << x
            entry_info = (rb, succ, pred, unary_mask if r.arity == 1 else None)
            for t in r.tuples:
                for a in set(t):
                    self.rel_at[a].append((t, entry_info))
        self.order = generator_order(A)
        self.nodes = 0
        self.results: list[tuple[int, ...]] = []

    def _assign(self, h, dom, known, x, v) -> bool:
        """Set h[x]=v and propagate; False on conflict.  Mutates the arguments."""
        stack = []

        def setv(y, val) -> bool:
            cur = h[y]
            if cur == -1:
                if not dom[y] >> val & 1:
                    return False
                h[y] = val
                dom[y] = 1 << val
                stack.append(y)
                return True
            return cur == val

        def restrict(y, mask) -> bool:
            if h[y] != -1:
                return bool(mask >> h[y] & 1)
            d = dom[y] & mask
            if not d:
                return False
            dom[y] = d
            if d & (d - 1) == 0:
                return setv(y, d.bit_length() - 1)
            return True

        if not setv(x, v):
            return False
        n = self.n
        while stack:
            x = stack.pop()
            v = h[x]
            known.append(x)
            for ta, tb in self.unary:
                if not setv(ta[x], tb[v]):
                    return False
            for rowsA, rowsB in self.binary:
                ra, rb = rowsA[x], rowsB[v]
                for y in known:
                    hy = h[y]
                    if not setv(ra[y], rb[hy]):
                        return False
                    if not setv(rowsA[y][x], rowsB[hy][v]):
                        return False
            for arity, ta, tb in self.higher:
                others = [y for y in known if y != x]
                for p in range(arity):
                    for head in itertools.product(others, repeat=p):
                        for tail in itertools.product(known, repeat=arity - p - 1):
                            args = head + (x,) + tail
                            if not setv(ta[table_index(args, n)],
                                        tb[table_index([h[a] for a in args], self.m)]):
                                return False
            for t, (rb, succ, pred, umask) in self.rel_at[x]:
                if umask is not None:
                    if not umask >> v & 1:
                        return False
                    continue
                if succ is not None:
                    a, b = t
                    ha, hb = h[a], h[b]
                    if ha != -1 and hb != -1:
                        if not succ[ha] >> hb & 1:
                            return False
                    elif ha != -1:
                        if not restrict(b, succ[ha]):
                            return False
                    elif hb != -1:
                        if not restrict(a, pred[hb]):
                            return False
                    continue
                img = tuple(h[a] for a in t)
                if -1 not in img and img not in rb:
                    return False
        return True

    def run(self) -> list[tuple[int, ...]]:
        n, m = self.n, self.m
        if n == 0:
            return [()]
        if m == 0:
            return []
        h = [-1] * n
        dom = [(1 << m) - 1] * n
        known: list[int] = []
        for ca, cb in self.nullary:
            if not self._assign(h, dom, known, ca, cb):
                return []
        # unary relations and loops constrain domains before search
        for a in range(n):
            for t, (rb, succ, pred, umask) in self.rel_at[a]:
                if umask is not None and h[a] == -1:
                    dom[a] &= umask
                elif succ is not None and t == (a, a) and h[a] == -1:
                    dom[a] &= mask_loops(succ)
            if not dom[a]:
                return []
        self._dfs(h, dom, known)
        return self.results

    def _dfs(self, h, dom, known):
        self.nodes += 1
        if self.nodes > LIMITS.max_nodes:
            raise ResourceLimitError(
                f"homomorphism search exceeded {LIMITS.max_nodes} nodes; raise max_nodes")
        x = next((g for g in self.order if h[g] == -1), None)
        if x is None:
            x = next((a for a in range(self.n) if h[a] == -1), None)
            if x is None:
                self.results.append(tuple(h))
                return
        d = dom[x]
        values = branch_order(v for v in range(self.m) if d >> v & 1)
        for v in values:
            h2, dom2, known2 = list(h), list(dom), list(known)
            if self._assign(h2, dom2, known2, x, v):
                self._dfs(h2, dom2, known2)


def mask_loops(succ: list[int]) -> int:
    out = 0
    for v, s in enumerate(succ):
        if s >> v & 1:
            out |= 1 << v
    return out


class _PlanSearch:
    """Search for algebras whose operations have arity at most two.

    The domain is built up as a chain of subuniverses ``Sg(g1..gi)``.  Each
    non-generator comes with a derivation ``f(x, y)`` from earlier elements,
    so its value is computed, not searched.  After each generator the new
    part of every operation table is compared with the target in one
    vectorised step, and relation tuples are checked once fully known.
    Target tables are flattened into one array; unary ones ignore ``y``.
    """

    def __init__(self, A: FiniteStructure, B: FiniteStructure):
        n, m = A.size, B.size
        self.n, self.m = n, m
        ops, TB, self.consts = [], [], []  # ops: (offset into TB, unary?, table of A)
        for op, (arity, ta) in sorted(A.ops.items()):
            tb = B.table(op)
            if arity == 0:
                self.consts.append((ta[0], tb[0]))
                continue
            if arity == 1:
                tb = [v for v in tb for _ in range(m)]
            ops.append((len(TB) * m * m, arity == 1, ta))
            TB.append(np.array(tb, dtype=np.int64))
        self.TB = np.concatenate(TB) if TB else np.zeros(0, np.int64)
        known = [False] * n
        K: list[int] = []
        levels = []

        # plain Python: the domains are small and numpy call overhead dominates
        def grow(seeds):
            rounds = []
            frontier = sorted({a for a in seeds if not known[a]})
            before = list(K)
            for a in frontier:
                known[a] = True
            K.extend(frontier)
            new_all = list(frontier)
            while frontier:
                fresh: dict[int, tuple[int, int, int]] = {}
                for off, un, ta in ops:
                    for f in frontier:
                        if un:
                            v = ta[f]
                            if not known[v] and v not in fresh:
                                fresh[v] = (off, f, f)
                            continue
                        row = f * n
                        for k in K:
                            v = ta[row + k]
                            if not known[v] and v not in fresh:
                                fresh[v] = (off, f, k)
                            v = ta[k * n + f]
                            if not known[v] and v not in fresh:
                                fresh[v] = (off, k, f)
                if not fresh:
                    break
                frontier = sorted(fresh)
                for v in frontier:
                    known[v] = True
                K.extend(frontier)
                new_all.extend(frontier)
                rounds.append(tuple(np.array(c, dtype=np.int64) for c in
                                    zip(*((v, *fresh[v]) for v in frontier))))
            return rounds, new_all, checks(new_all, before)

        def checks(new, before):
            L, O, X, Y = [], [], [], []
            for off, un, ta in ops:
                if un:
                    pairs = [(x, x) for x in new]
                else:
                    pairs = [(x, y) for x in new for y in K] + [(x, y) for x in before for y in new]
                for x, y in pairs:
                    L.append(ta[x] if un else ta[x * n + y])
                    O.append(off)
                    X.append(x)
                    Y.append(y)
            if not L:
                return None
            return tuple(np.array(v, dtype=np.int64) for v in (L, O, X, Y))

        self.start = {}
        for ca, cb in self.consts:
            if self.start.setdefault(ca, cb) != cb:
                self.start = None
                break
        self.gens = []
        if self.start is not None:
            rounds, new, chk = grow(list(self.start))
            levels.append((rounds, chk, new))
            for a in range(n):
                if not known[a]:
                    self.gens.append(a)
                    rounds, new, chk = grow([a])
                    levels.append((rounds, chk, new))
        self.levels = levels
        position = np.zeros(n, dtype=np.int64)
        for li, (_, _, new) in enumerate(levels):
            position[new] = li
        self.rel_checks = [[] for _ in levels]
        for rel, r in A.rels.items():
            Rb = np.zeros((m,) * r.arity, dtype=bool)
            Rb[tuple(np.array(B.rel(rel).tuples).T)] = True
            by_level: dict[int, list] = {}
            for t in r.tuples:
                by_level.setdefault(int(max(position[a] for a in t)), []).append(t)
            for li, ts in by_level.items():
                self.rel_checks[li].append((Rb, np.array(ts, dtype=np.int64).T))
        self.nodes = 0
        self.results: list[tuple[int, ...]] = []

    def _fill(self, H, li):
        """Complete level ``li`` on every row of ``H``; return the rows that survive."""
        rounds, chk, _ = self.levels[li]
        m, TB = self.m, self.TB
        for E, J, X, Y in rounds:
            H[:, E] = TB[J + H[:, X] * m + H[:, Y]]
        keep = np.ones(len(H), dtype=bool)
        if chk is not None:
            L, O, X, Y = chk
            keep &= (H[:, L] == TB[O + H[:, X] * m + H[:, Y]]).all(axis=1)
        for Rb, cols in self.rel_checks[li]:
            keep &= Rb[tuple(H[:, c] for c in cols)].all(axis=1)
        return H[keep]

    def run(self) -> list[tuple[int, ...]]:
        if self.start is None:
            return []
        H = np.full((1, self.n), -1, dtype=np.int64)
        for ca, cb in self.start.items():
            H[0, ca] = cb
        H = self._fill(H, 0)
        if len(H):
            self._expand(H, 1)
        return self.results

    _CHUNK = 2048

    def _expand(self, H, li):
        # all rows branch together; chunks keep memory bounded
        self.nodes += len(H)
        if self.nodes > LIMITS.max_nodes:
            raise ResourceLimitError(
                f"homomorphism search exceeded {LIMITS.max_nodes} nodes; raise max_nodes")
        if li == len(self.levels):
            self.results.extend(map(tuple, H.tolist()))
            return
        values = np.array(list(branch_order(range(self.m))), dtype=np.int64)
        H = np.repeat(H, self.m, axis=0)
        H[:, self.gens[li - 1]] = np.tile(values, len(H) // self.m)
        H = self._fill(H, li)
        for i in range(0, len(H), self._CHUNK):
            self._expand(H[i:i + self._CHUNK], li + 1)


def _use_plan(A: FiniteStructure) -> bool:
    arities = [a for a, _ in A.ops.values()]
    return A.size >= 12 and any(a == 2 for a in arities) and all(a <= 2 for a in arities)


def hom_maps(A: FiniteStructure, B: FiniteStructure) -> list[tuple[int, ...]]:
    """All homomorphisms ``A -> B`` as map tuples, lexicographically sorted."""
    _same_signature(A, B)
    if B.size and _use_plan(A):
        return sorted(_PlanSearch(A, B).run())
    return sorted(_Search(A, B).run())


def enumerate_homs(A: FiniteStructure, B: FiniteStructure) -> list[Hom]:
    return [Hom(t, B.size) for t in hom_maps(A, B)]


def count_search_nodes(A: FiniteStructure, B: FiniteStructure) -> int:
    s = _Search(A, B)
    s.run()
    return s.nodes


def separates_structure(X: Iterable[Sequence[int]], A: FiniteStructure,
                        M: FiniteStructure) -> tuple[bool, dict | None]:
    """Does the family ``X`` of maps ``A -> M`` separate the structure ``A``?

    Points: distinct ``a, b`` are split by some ``x``.  Relations: every tuple
    outside ``r^A`` is sent outside ``r^M`` by some ``x``.
    """
    X = [tuple(x) for x in X]
    n = A.size
    for a in range(n):
        for b in range(a + 1, n):
            if not any(x[a] != x[b] for x in X):
                return False, {"kind": "points", "pair": [a, b]}
    for rel, r in A.rels.items():
        rm = M.rel(rel)
        for t in itertools.product(range(n), repeat=r.arity):
            if t in r:
                continue
            if not any(tuple(x[a] for a in t) not in rm for x in X):
                return False, {"kind": "relation", "rel": rel, "tuple": list(t)}
    return True, None


def separates_points(X: Iterable[Sequence[int]], n: int) -> tuple[bool, dict | None]:
    X = [tuple(x) for x in X]
    for a in range(n):
        for b in range(a + 1, n):
            if not any(x[a] != x[b] for x in X):
                return False, {"kind": "points", "pair": [a, b]}
    return True, None


def in_prevariety(A: FiniteStructure, N: FiniteStructure) -> bool:
    """``A`` lies in ISP(``N``) iff ``hom(A, N)`` separates the structure ``A``."""
    return separates_structure(hom_maps(A, N), A, N)[0]


def is_isomorphism(h: Sequence[int], A: FiniteStructure, B: FiniteStructure) -> bool:
    h = tuple(h)
    if A.size != B.size or not is_hom(h, A, B) or len(set(h)) != A.size:
        return False
    inv = [0] * B.size
    for a, b in enumerate(h):
        inv[b] = a
    for rel, r in B.rels.items():
        ra = A.rel(rel)
        for t in r.tuples:
            if tuple(inv[b] for b in t) not in ra:
                return False
    return True


def is_embedding(h: Sequence[int], A: FiniteStructure, B: FiniteStructure) -> bool:
    """Injective hom that also reflects every relation."""
    h = tuple(h)
    if not is_hom(h, A, B) or len(set(h)) != A.size:
        return False
    for rel, r in A.rels.items():
        rb = B.rel(rel)
        for t in itertools.product(range(A.size), repeat=r.arity):
            if t not in r and tuple(h[a] for a in t) in rb:
                return False
    return True


_MASK = (1 << 64) - 1


def _mix(x):
    # splitmix64 finaliser on uint64 arrays
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def color_refinement(A: FiniteStructure, rounds: int | None = None) -> list[int]:
    """Isomorphism-invariant element colours (1-dimensional Weisfeiler-Leman).

    A colour is a hash of the element's neighbourhood multiset, so colours are
    comparable across structures.  Collisions can only merge colours, which
    costs the isomorphism search time but never correctness.
    """
    n = A.size
    if n == 0:
        return []
    blocks = []  # (name salt, tuples as an (entries, width) array)
    for op, (arity, table) in sorted(A.ops.items()):
        args = np.array(list(itertools.product(range(n), repeat=arity)), dtype=np.int64)
        args = args.reshape(n**arity, arity)
        blocks.append((op, np.hstack([args, np.array(table, dtype=np.int64)[:, None]])))
    for rel, r in sorted(A.rels.items()):
        if len(r):
            blocks.append((rel, np.array(r.tuples, dtype=np.int64)))
    salts = [np.uint64(hash(name) & _MASK) for name, _ in blocks]
    color = np.zeros(n, dtype=np.uint64)
    count = 1
    with np.errstate(over="ignore"):
        for _ in range(rounds if rounds is not None else n):
            acc = np.zeros(n, dtype=np.uint64)
            for salt, (_, T) in zip(salts, blocks):
                w = T.shape[1]
                ct = color[T]  # entries x width
                base = np.full(len(T), salt, dtype=np.uint64)
                for j in range(w):
                    base = _mix(base * np.uint64(31) + ct[:, j])
                for pos in range(w):
                    np.add.at(acc, T[:, pos], _mix(base + np.uint64(pos + 1)))
            new = _mix(color * np.uint64(1000003) + acc)
            k = len(np.unique(new))
            color = new
            if k == count:
                break
            count = k
    return color.tolist()


def structure_invariant(A: FiniteStructure) -> tuple:
    return (A.size, tuple(sorted((k, len(r)) for k, r in A.rels.items())),
            tuple(sorted(color_refinement(A))))


def find_isomorphism(A: FiniteStructure, B: FiniteStructure,
                     colors: tuple[list[int], list[int]] | None = None) -> tuple[int, ...] | None:
    """An isomorphism ``A -> B`` or ``None``."""
    _same_signature(A, B)
    if A.size != B.size or any(len(r) != len(B.rel(k)) for k, r in A.rels.items()):
        return None
    ca, cb = colors if colors is not None else (color_refinement(A), color_refinement(B))
    if sorted(ca) != sorted(cb):
        return None
    n = A.size
    by_color: dict[int, list[int]] = {}
    for b in range(n):
        by_color.setdefault(cb[b], []).append(b)
    order = sorted(range(n), key=lambda a: (len(by_color[ca[a]]), a))
    rank = {a: i for i, a in enumerate(order)}
    # each constraint is checked when its last element gets assigned
    pending: list[list] = [[] for _ in range(n)]
    for op, (arity, table) in A.ops.items():
        tb = B.table(op)
        for i, args in enumerate(itertools.product(range(n), repeat=arity)):
            involved = (*args, table[i])
            last = max(involved, key=rank.__getitem__)
            pending[rank[last]].append(("op", tb, args, table[i]))
    for rel, r in A.rels.items():
        rb = B.rel(rel)
        for t in r.tuples:
            last = max(t, key=rank.__getitem__)
            pending[rank[last]].append(("rel", rb, t, None))
    h = [-1] * n
    used = [False] * n

    def consistent(i):
        for kind, target, args, v in pending[i]:
            if kind == "op":
                if target[table_index([h[x] for x in args], n)] != h[v]:
                    return False
            elif tuple(h[x] for x in args) not in target:
                return False
        return True

    def dfs(i):
        if i == n:
            return True
        a = order[i]
        for b in by_color[ca[a]]:
            if not used[b]:
                h[a], used[b] = b, True
                if consistent(i) and dfs(i + 1):
                    return True
                h[a], used[b] = -1, False
        return False

    return tuple(h) if dfs(0) else None


def check_compatible(M: FiniteStructure, Mt: FiniteStructure) -> tuple[bool, dict | None]:
    """Is ``Mt`` an alter ego of ``M`` (finite, discrete topology)?

    Every operation of ``Mt`` must commute with every operation of ``M`` and
    preserve every relation of ``M``; every relation of ``Mt`` must be a
    subuniverse of the matching power of ``M``.
    """
    if M.size != Mt.size:
        return False, {"reason": "different universes"}
    n = M.size
    for f, (k, tf) in sorted(Mt.ops.items()):
        for g, (j, tg) in sorted(M.ops.items()):
            # f applied to the g-images of the columns of a j x k matrix, and vice versa
            for cells in itertools.product(range(n), repeat=j * k):
                cols = [tg[table_index([cells[r * k + c] for r in range(j)], n)] for c in range(k)]
                rows = [tf[table_index(cells[r * k:(r + 1) * k], n)] for r in range(j)]
                if tf[table_index(cols, n)] != tg[table_index(rows, n)]:
                    return False, {"reason": "operations do not commute", "op": f, "with": g,
                                   "matrix": list(cells)}
        for rel, r in sorted(M.rels.items()):
            for args in itertools.product(r.tuples, repeat=k):
                img = tuple(tf[table_index([a[i] for a in args], n)] for i in range(r.arity))
                if img not in r:
                    return False, {"reason": "relation not preserved", "op": f, "rel": rel,
                                   "args": [list(a) for a in args]}
    for rel, r in sorted(Mt.rels.items()):
        for g, (j, tg) in sorted(M.ops.items()):
            for args in itertools.product(r.tuples, repeat=j):
                img = tuple(tg[table_index([a[i] for a in args], n)] for i in range(r.arity))
                if img not in r:
                    return False, {"reason": "relation not a subuniverse", "rel": rel, "op": g,
                                   "args": [list(a) for a in args]}
    return True, None
