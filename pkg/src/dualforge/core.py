"""Finite signatures, structures, powers, subuniverses and structural reducts.

Elements of a structure of size ``n`` are the integers ``0..n-1``.  An
operation of arity ``k`` is a flat table of length ``n**k`` indexed in
mixed-radix big-endian order, so ``f(a0, .., a_{k-1})`` lives at
``sum(a_i * n**(k-1-i))``.  Relations are canonically sorted tuple sets.

All structures are finite, hence every topology in sight is discrete:
closedness and continuity hold vacuously and are not modelled.
"""

from __future__ import annotations

import itertools
import json
import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence


class DualforgeError(Exception):
    """Base class for all library errors."""


class StructureError(DualforgeError):
    """Malformed structure, relation, term or reduct."""


class PartialOperationError(StructureError):
    """Raised for partial operations: the duality theorems assume total structures."""


class SignatureError(DualforgeError):
    """Two structures that must share a signature do not."""


class ResourceLimitError(DualforgeError):
    """A configured resource bound was exceeded (never silently truncated)."""


@dataclass
class Limits:
    max_power: int = 10**6
    max_closed_sets: int = 10**5
    max_nodes: int = 10**8
    # 0: ascending branch order, 1: descending.  Results are canonicalised either way.
    seed_order: int = 0


def _default_limits() -> Limits:
    lim = Limits()
    env = os.environ.get("DUALFORGE_MAX_NODES")
    if env:
        lim.max_nodes = int(env)
    return lim


LIMITS = _default_limits()


@contextmanager
def limits(**overrides):
    """Temporarily override fields of the global :data:`LIMITS`."""
    saved = {k: getattr(LIMITS, k) for k in overrides}
    for k, v in overrides.items():
        if v is not None:
            setattr(LIMITS, k, v)
    try:
        yield LIMITS
    finally:
        for k, v in saved.items():
            setattr(LIMITS, k, v)


def branch_order(items: Iterable[int]) -> list[int]:
    items = sorted(items)
    return items[::-1] if LIMITS.seed_order else items


# ---------------------------------------------------------------- signatures


@dataclass(frozen=True)
class Signature:
    ops: tuple[tuple[str, int], ...] = ()
    rels: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(sorted((str(n), int(a)) for n, a in self.ops)))
        object.__setattr__(self, "rels", tuple(sorted((str(n), int(a)) for n, a in self.rels)))
        names = [n for n, _ in self.ops] + [n for n, _ in self.rels]
        if len(set(names)) != len(names):
            raise StructureError(f"duplicate symbol names in signature: {names}")
        for n, a in self.ops:
            if a < 0:
                raise StructureError(f"operation {n!r} has negative arity")
        for n, a in self.rels:
            if a < 1:
                raise StructureError(f"relation {n!r} must have arity >= 1")

    @classmethod
    def of(cls, ops: dict[str, int] | None = None, rels: dict[str, int] | None = None) -> "Signature":
        return cls(tuple((ops or {}).items()), tuple((rels or {}).items()))

    @property
    def op_arities(self) -> dict[str, int]:
        return dict(self.ops)

    @property
    def rel_arities(self) -> dict[str, int]:
        return dict(self.rels)

    @property
    def has_nullary(self) -> bool:
        return any(a == 0 for _, a in self.ops)

    @property
    def purely_relational(self) -> bool:
        return not self.ops

    @property
    def total_algebra(self) -> bool:
        return not self.rels

    def to_json(self) -> dict:
        return {"ops": dict(self.ops), "rels": dict(self.rels)}

    @classmethod
    def from_json(cls, data: dict) -> "Signature":
        return cls.of(data.get("ops", {}), data.get("rels", {}))


# ---------------------------------------------------------------- relations


@dataclass(frozen=True, eq=False)
class Relation:
    """A finite set of ``arity``-tuples, kept sorted and duplicate-free."""

    arity: int
    tuples: tuple[tuple[int, ...], ...]
    _set: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.arity < 1:
            raise StructureError("relation arity must be >= 1")
        canon = tuple(sorted({tuple(map(int, t)) for t in self.tuples}))
        for t in canon:
            if len(t) != self.arity:
                raise StructureError(f"tuple {t} does not have arity {self.arity}")
        object.__setattr__(self, "tuples", canon)
        object.__setattr__(self, "_set", frozenset(canon))

    @classmethod
    def of(cls, tuples: Iterable[Sequence[int]], arity: int | None = None) -> "Relation":
        tuples = [tuple(t) for t in tuples]
        if arity is None:
            if not tuples:
                raise StructureError("cannot infer the arity of an empty relation")
            arity = len(tuples[0])
        return cls(arity, tuple(tuples))

    @classmethod
    def diagonal(cls, n: int, arity: int = 2) -> "Relation":
        return cls(arity, tuple((a,) * arity for a in range(n)))

    @classmethod
    def full(cls, n: int, arity: int) -> "Relation":
        return cls(arity, tuple(itertools.product(range(n), repeat=arity)))

    def __contains__(self, t) -> bool:
        return tuple(t) in self._set

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        return iter(self.tuples)

    def __len__(self) -> int:
        return len(self.tuples)

    def __eq__(self, other) -> bool:
        return isinstance(other, Relation) and self.arity == other.arity and self.tuples == other.tuples

    def __hash__(self) -> int:
        return hash((self.arity, self.tuples))

    def __le__(self, other: "Relation") -> bool:
        return self._set <= other._set

    def __lt__(self, other: "Relation") -> bool:
        return self._set < other._set

    def __and__(self, other: "Relation") -> "Relation":
        return Relation(self.arity, tuple(self._set & other._set))

    def sort_key(self):
        return (self.arity, len(self.tuples), self.tuples)

    def converse(self) -> "Relation":
        return Relation(self.arity, tuple(t[::-1] for t in self.tuples))

    def is_reflexive(self, n: int) -> bool:
        return self.arity == 2 and all((a, a) in self._set for a in range(n))

    def is_antisymmetric(self) -> bool:
        return self.arity == 2 and all(a == b or (b, a) not in self._set for a, b in self.tuples)

    def within_diagonal(self) -> bool:
        return all(len(set(t)) == 1 for t in self.tuples)

    def to_json(self) -> dict:
        return {"arity": self.arity, "tuples": [list(t) for t in self.tuples]}


# ---------------------------------------------------------------- structures


def table_index(args: Sequence[int], n: int) -> int:
    idx = 0
    for a in args:
        idx = idx * n + a
    return idx


class FiniteStructure:
    """A finite total structure ``<{0..n-1}; operations, relations>``.

    Treat instances as immutable; every library function returns new ones.
    """

    __slots__ = ("name", "size", "_ops", "_rels", "labels", "sig")

    def __init__(
        self,
        size: int,
        operations: dict[str, tuple[int, Sequence[int]]] | None = None,
        relations: dict[str, Relation | Iterable[Sequence[int]]] | None = None,
        name: str = "",
        labels: Sequence[str] | None = None,
        allow_empty: bool = False,
    ):
        if size < 1 and not (allow_empty and size == 0):
            raise StructureError("a structure needs at least one element")
        self.name = name
        self.size = size
        self._ops: dict[str, tuple[int, tuple[int, ...]]] = {}
        for op, (arity, table) in (operations or {}).items():
            table = tuple(table)
            if None in table:
                raise PartialOperationError(
                    f"operation {op!r} is partial; only total structures are admitted")
            table = tuple(map(int, table))
            if len(table) != size**arity:
                raise StructureError(
                    f"operation {op!r}: table has {len(table)} entries, expected {size**arity}")
            if table and (min(table) < 0 or max(table) >= size):
                raise StructureError(f"operation {op!r}: table entry out of range")
            self._ops[op] = (int(arity), table)
        self._rels: dict[str, Relation] = {}
        for rel, tuples in (relations or {}).items():
            if not isinstance(tuples, Relation):
                tuples = Relation.of(tuples)
            flat = list(itertools.chain.from_iterable(tuples.tuples))
            if flat and (min(flat) < 0 or max(flat) >= size):
                raise StructureError(f"relation {rel!r}: entry out of range")
            self._rels[rel] = tuples
        self.labels = tuple(labels) if labels is not None else None
        if self.labels is not None and len(self.labels) != size:
            raise StructureError("labels must name every element")
        self.sig = Signature(
            tuple((k, a) for k, (a, _) in self._ops.items()),
            tuple((k, r.arity) for k, r in self._rels.items()),
        )

    # -- access

    @property
    def ops(self) -> dict[str, tuple[int, tuple[int, ...]]]:
        return dict(self._ops)

    @property
    def rels(self) -> dict[str, Relation]:
        return dict(self._rels)

    def op_names(self) -> list[str]:
        return list(self._ops)

    def rel_names(self) -> list[str]:
        return list(self._rels)

    def arity(self, op: str) -> int:
        return self._ops[op][0]

    def table(self, op: str) -> tuple[int, ...]:
        return self._ops[op][1]

    def rel(self, name: str) -> Relation:
        return self._rels[name]

    def apply(self, op: str, *args: int) -> int:
        arity, table = self._ops[op]
        if len(args) != arity:
            raise StructureError(f"{op!r} takes {arity} arguments")
        return table[table_index(args, self.size)]

    def nullary_values(self) -> list[int]:
        return sorted({t[0] for a, t in self._ops.values() if a == 0})

    def label(self, a: int) -> str:
        return self.labels[a] if self.labels else str(a)

    def elements(self) -> range:
        return range(self.size)

    # -- derived structures

    def renamed(self, name: str) -> "FiniteStructure":
        return FiniteStructure(self.size, self._ops, self._rels, name=name, labels=self.labels)

    def with_relations(self, extra: dict[str, Relation], name: str | None = None) -> "FiniteStructure":
        rels = dict(self._rels)
        rels.update(extra)
        return FiniteStructure(self.size, self._ops, rels, name=name or self.name, labels=self.labels)

    def with_operations(self, extra: dict[str, tuple[int, Sequence[int]]],
                        name: str | None = None) -> "FiniteStructure":
        ops = dict(self._ops)
        ops.update(extra)
        return FiniteStructure(self.size, ops, self._rels, name=name or self.name, labels=self.labels)

    def restrict_type(self, ops: Iterable[str] = (), rels: Iterable[str] = (),
                      name: str | None = None) -> "FiniteStructure":
        return FiniteStructure(
            self.size, {k: self._ops[k] for k in ops}, {k: self._rels[k] for k in rels},
            name=name or self.name, labels=self.labels)

    # -- equality and serialisation

    def same_data(self, other: "FiniteStructure") -> bool:
        return self.size == other.size and self._ops == other._ops and self._rels == other._rels

    def __eq__(self, other) -> bool:
        return isinstance(other, FiniteStructure) and self.same_data(other)

    def __hash__(self) -> int:
        return hash((self.size, tuple(sorted(self._ops.items())),
                     tuple(sorted((k, r.tuples) for k, r in self._rels.items()))))

    def __repr__(self) -> str:
        return f"FiniteStructure({self.name or '?'}, size={self.size}, sig={self.sig})"

    def __getstate__(self):
        return {s: getattr(self, s) for s in self.__slots__}

    def __setstate__(self, state):
        for k, v in state.items():
            object.__setattr__(self, k, v)

    def to_json(self) -> dict:
        out: dict = {"name": self.name, "size": self.size}
        if self.labels is not None:
            out["elements"] = list(self.labels)
        out["operations"] = {k: {"arity": a, "table": list(t)} for k, (a, t) in self._ops.items()}
        out["relations"] = {k: r.to_json() for k, r in self._rels.items()}
        return out

    @classmethod
    def from_json(cls, data: dict) -> "FiniteStructure":
        try:
            size = int(data["size"])
            ops = {}
            for k, spec in data.get("operations", {}).items():
                if spec.get("partial") or "domain" in spec:
                    raise PartialOperationError(
                        f"operation {k!r} is declared partial; the duality theorems "
                        "used here assume total structures")
                ops[k] = (int(spec["arity"]), spec["table"])
            rels = {}
            for k, spec in data.get("relations", {}).items():
                arity = int(spec["arity"])
                rels[k] = Relation(arity, tuple(tuple(t) for t in spec["tuples"]))
                if not len(rels[k]):
                    raise StructureError(f"relation {k!r} is empty; relations must be non-empty")
            return cls(size, ops, rels, name=data.get("name", ""), labels=data.get("elements"))
        except (KeyError, TypeError, ValueError) as exc:
            raise StructureError(f"malformed structure file: {exc}") from exc

    @classmethod
    def load(cls, path: str) -> "FiniteStructure":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def empty_structure(sig: Signature, name: str = "empty") -> FiniteStructure:
    """The empty structure of a type without nullary operations."""
    if sig.has_nullary:
        raise StructureError("a type with nullary operations has no empty structure")
    ops = {k: (a, ()) for k, a in sig.ops}
    rels = {k: Relation(a, ()) for k, a in sig.rels}
    return FiniteStructure(0, ops, rels, name=name, allow_empty=True)


# ---------------------------------------------------------------- powers


def decode(code: int, n: int, k: int) -> tuple[int, ...]:
    digits = []
    for _ in range(k):
        code, d = divmod(code, n)
        digits.append(d)
    return tuple(reversed(digits))


def encode(digits: Sequence[int], n: int) -> int:
    return table_index(digits, n)


def _check_power_size(n: int, k: int) -> int:
    if k < 1:
        raise StructureError("power exponent must be >= 1")
    size = n**k
    if size > LIMITS.max_power:
        raise ResourceLimitError(f"power has {size} elements, limit is {LIMITS.max_power}")
    return size


def power(M: FiniteStructure, k: int) -> FiniteStructure:
    """``M**k`` with operations and relations lifted pointwise.

    Element ``i`` encodes the ``k``-tuple ``decode(i, |M|, k)``.
    """
    n = M.size
    size = _check_power_size(n, k)
    points = [decode(i, n, k) for i in range(size)]
    ops = {}
    for name, (arity, table) in M.ops.items():
        if size**arity > LIMITS.max_power * 16:
            raise ResourceLimitError(f"table of {name!r} on the power is too large")
        new = []
        for args in itertools.product(range(size), repeat=arity):
            cols = [points[a] for a in args]
            new.append(encode([table[table_index([c[j] for c in cols], n)] for j in range(k)], n))
        ops[name] = (arity, new)
    rels = {}
    for name, r in M.rels.items():
        lifted = [tuple(encode(col, n) for col in zip(*rows))
                  for rows in itertools.product(r.tuples, repeat=k)]
        rels[name] = Relation(r.arity, tuple(lifted))
    labels = ["(" + ",".join(M.label(x) for x in p) + ")" for p in points]
    return FiniteStructure(size, ops, rels, name=f"{M.name}^{k}", labels=labels)


def substructure(M: FiniteStructure, elements: Iterable[int], name: str = "") -> FiniteStructure:
    """The induced substructure on a subuniverse, relabelled ``0..m-1`` in ascending order."""
    elems = sorted(set(elements))
    pos = {a: i for i, a in enumerate(elems)}
    m = len(elems)
    if m == 0:
        return empty_structure(M.sig, name=name or f"{M.name}[]")
    n = M.size
    ops = {}
    for op, (arity, table) in M.ops.items():
        new = []
        for args in itertools.product(elems, repeat=arity):
            v = table[table_index(args, n)]
            if v not in pos:
                raise StructureError(f"{sorted(elems)} is not closed under {op!r}")
            new.append(pos[v])
        ops[op] = (arity, new)
    rels = {}
    for rel, r in M.rels.items():
        kept = [tuple(pos[x] for x in t) for t in r.tuples if all(x in pos for x in t)]
        rels[rel] = Relation(r.arity, tuple(kept))
    labels = [M.label(a) for a in elems]
    return FiniteStructure(m, ops, rels, name=name or f"{M.name}[{len(elems)}]", labels=labels)


def subpower(M: FiniteStructure, k: int, tuples: Iterable[Sequence[int]], name: str = "") -> FiniteStructure:
    """Substructure of ``M**k`` on the given tuples, computed without building ``M**k``."""
    pts = sorted({tuple(t) for t in tuples})
    pos = {p: i for i, p in enumerate(pts)}
    n = M.size
    ops = {}
    for op, (arity, table) in M.ops.items():
        new = []
        for args in itertools.product(pts, repeat=arity):
            img = tuple(table[table_index([a[j] for a in args], n)] for j in range(k))
            if img not in pos:
                raise StructureError(f"tuples are not closed under {op!r}")
            new.append(pos[img])
        if arity == 0:
            img = (table[0],) * k
            if img not in pos:
                raise StructureError(f"tuples do not contain the constant {op!r}")
            new = [pos[img]]
        ops[op] = (arity, new)
    rels = {}
    for rel, r in M.rels.items():
        # a tuple of points is related iff it is related coordinatewise
        sel = []
        for combo in itertools.product(range(len(pts)), repeat=r.arity):
            if all(tuple(pts[c][j] for c in combo) in r for j in range(k)):
                sel.append(combo)
        rels[rel] = Relation(r.arity, tuple(sel))
    labels = ["(" + ",".join(M.label(x) for x in p) + ")" for p in pts]
    return FiniteStructure(len(pts), ops, rels, name=name or f"{M.name}^{k}[{len(pts)}]", labels=labels)


# ---------------------------------------------------------------- closure


class Closure:
    """Incremental subuniverse closure on a fixed structure (bitmask sets)."""

    def __init__(self, M: FiniteStructure):
        self.n = M.size
        n = M.size
        self.nullary = M.nullary_values()
        self.unary = []
        self.binary = []
        self.higher = []
        for arity, table in M.ops.values():
            if arity == 1:
                self.unary.append(table)
            elif arity == 2:
                self.binary.append([table[i * n:(i + 1) * n] for i in range(n)])
            elif arity > 2:
                self.higher.append((arity, table))

    def extend(self, members: list[int], mask: int, new: Iterable[int],
               bound: int | None = None) -> tuple[list[int], int] | None:
        """Close ``members + new``; ``members`` must already be closed.

        Returns ``None`` as soon as an element outside ``bound`` appears.
        """
        out = list(members)
        queue = []
        for x in new:
            if not mask >> x & 1:
                if bound is not None and not bound >> x & 1:
                    return None
                mask |= 1 << x
                queue.append(x)
        n = self.n
        while queue:
            x = queue.pop()
            out.append(x)
            found = []
            for t in self.unary:
                found.append(t[x])
            for rows in self.binary:
                rx = rows[x]
                for y in out:
                    found.append(rx[y])
                    found.append(rows[y][x])
            for arity, table in self.higher:
                for p in range(arity):
                    before = [y for y in out if y != x]
                    for head in itertools.product(before, repeat=p):
                        for tail in itertools.product(out, repeat=arity - p - 1):
                            found.append(table[table_index(head + (x,) + tail, n)])
            for c in found:
                if not mask >> c & 1:
                    if bound is not None and not bound >> c & 1:
                        return None
                    mask |= 1 << c
                    queue.append(c)
        return out, mask

    def close(self, seed: Iterable[int], bound: int | None = None) -> tuple[list[int], int] | None:
        return self.extend([], 0, list(self.nullary) + list(seed), bound)


def mask_of(elems: Iterable[int]) -> int:
    m = 0
    for e in elems:
        m |= 1 << e
    return m


def elems_of(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def generate_substructure(M: FiniteStructure, seed: Iterable[int]) -> list[int]:
    """Least subuniverse containing ``seed`` and every nullary value, sorted."""
    seed = list(seed)
    for a in seed:
        if not 0 <= a < M.size:
            raise StructureError(f"element {a} is not in the universe")
    _, mask = Closure(M).close(seed)
    return elems_of(mask)


def is_subuniverse(M: FiniteStructure, elems: Iterable[int]) -> bool:
    elems = set(elems)
    return set(generate_substructure(M, elems)) == elems if (elems or not M.sig.has_nullary) else False


def shortlex(sets: Iterable[Sequence[int]]) -> list[list[int]]:
    return sorted((sorted(s) for s in sets), key=lambda s: (len(s), s))


def closed_sets_within(M: FiniteStructure, bound: Iterable[int], maximal_only: bool = False,
                       closure: Closure | None = None) -> list[int]:
    """Bitmasks of all subuniverses inside ``bound`` by closure-extension DFS.

    With ``maximal_only`` only the inclusion-maximal ones are returned.
    """
    cl = closure or Closure(M)
    bmask = mask_of(bound)
    start = cl.close([], bmask)
    if start is None:
        return []
    members, mask = start
    seen = {mask: members}
    stack = [mask]
    maximal = []
    cap = LIMITS.max_closed_sets
    bound_elems = branch_order(elems_of(bmask))
    while stack:
        cur = stack.pop()
        cur_members = seen[cur]
        extended = False
        for t in bound_elems:
            if cur >> t & 1:
                continue
            res = cl.extend(cur_members, cur, [t], bmask)
            if res is None:
                continue
            extended = True
            nm, nmask = res
            if nmask not in seen:
                seen[nmask] = nm
                if len(seen) > cap:
                    raise ResourceLimitError(
                        f"more than {cap} closed sets; raise max_closed_sets to continue")
                stack.append(nmask)
        if not extended:
            maximal.append(cur)
    return maximal if maximal_only else list(seen)


def all_subuniverses_within(M: FiniteStructure, bound: Iterable[int]) -> list[list[int]]:
    """Every subuniverse of ``M`` contained in ``bound``, in shortlex order.

    The empty set is included only when the type has no nullary operations.
    """
    bound = list(bound)
    for a in bound:
        if not 0 <= a < M.size:
            raise StructureError(f"element {a} is not in the universe")
    return shortlex(elems_of(m) for m in closed_sets_within(M, bound))


def all_substructures(M: FiniteStructure, include_empty: bool = False) -> list[list[int]]:
    subs = all_subuniverses_within(M, range(M.size))
    return [s for s in subs if s or include_empty]


# ---------------------------------------------------------------- terms and reducts

# A term is either an int (variable index) or a tuple ``(opname, *subterms)``.


def term_from_json(obj) -> object:
    if isinstance(obj, str):
        if obj.startswith("x") and obj[1:].isdigit():
            return int(obj[1:])
        return (obj,)
    if isinstance(obj, list) and obj and isinstance(obj[0], str):
        return (obj[0], *(term_from_json(s) for s in obj[1:]))
    raise StructureError(f"malformed term: {obj!r}")


def term_to_json(t) -> object:
    if isinstance(t, int):
        return f"x{t}"
    return [t[0], *(term_to_json(s) for s in t[1:])]


def term_str(t) -> str:
    if isinstance(t, int):
        return f"x{t}"
    if len(t) == 1:
        return t[0]
    return f"({t[0]} {' '.join(term_str(s) for s in t[1:])})"


def term_vars(t) -> set[int]:
    if isinstance(t, int):
        return {t}
    out: set[int] = set()
    for s in t[1:]:
        out |= term_vars(s)
    return out


def check_term(t, sig: Signature, nvars: int | None = None) -> None:
    arities = sig.op_arities
    if isinstance(t, int):
        if t < 0 or (nvars is not None and t >= nvars):
            raise StructureError(f"variable x{t} out of range")
        return
    if t[0] not in arities:
        raise StructureError(f"unknown operation {t[0]!r} in term")
    if arities[t[0]] != len(t) - 1:
        raise StructureError(f"operation {t[0]!r} applied to {len(t) - 1} arguments")
    for s in t[1:]:
        check_term(s, sig, nvars)


def eval_term(M: FiniteStructure, t, env: Sequence[int]) -> int:
    if isinstance(t, int):
        return env[t]
    return M.apply(t[0], *(eval_term(M, s, env) for s in t[1:]))


@dataclass(frozen=True)
class ReductSpec:
    """Syntactic definition of a structural reduct.

    ``rel_defs`` maps each target relation to a conjunction of atoms.  An atom
    is ``("rel", name, terms)`` or ``("eq", t1, t2)``; variables ``x0..x{k-1}``
    stand for the relation's coordinates.
    """

    target: Signature
    op_defs: dict
    rel_defs: dict

    def validate(self, source: Signature) -> None:
        ops = self.target.op_arities
        rels = self.target.rel_arities
        if set(self.op_defs) != set(ops) or set(self.rel_defs) != set(rels):
            raise StructureError("reduct definitions do not match the target signature")
        src_rels = source.rel_arities
        for name, t in self.op_defs.items():
            check_term(t, source, ops[name])
        for name, atoms in self.rel_defs.items():
            if not atoms:
                raise StructureError(f"relation {name!r} needs at least one atom")
            for atom in atoms:
                if atom[0] == "rel":
                    if atom[1] not in src_rels or src_rels[atom[1]] != len(atom[2]):
                        raise StructureError(f"bad relation atom {atom!r}")
                    for t in atom[2]:
                        check_term(t, source, rels[name])
                elif atom[0] == "eq":
                    check_term(atom[1], source, rels[name])
                    check_term(atom[2], source, rels[name])
                else:
                    raise StructureError(f"bad atom {atom!r}")

    @classmethod
    def from_json(cls, data: dict) -> "ReductSpec":
        try:
            target = Signature.from_json(data["target"])
            ops = {k: term_from_json(v) for k, v in data.get("ops", {}).items()}
            rels = {}
            for k, atoms in data.get("rels", {}).items():
                parsed = []
                for atom in atoms:
                    if "rel" in atom:
                        parsed.append(("rel", atom["rel"], tuple(term_from_json(a) for a in atom["args"])))
                    elif "eq" in atom:
                        parsed.append(("eq", term_from_json(atom["eq"][0]), term_from_json(atom["eq"][1])))
                    else:
                        raise StructureError(f"bad atom {atom!r}")
                rels[k] = tuple(parsed)
            return cls(target, ops, rels)
        except (KeyError, TypeError, IndexError) as exc:
            raise StructureError(f"malformed reduct file: {exc}") from exc

    def to_json(self) -> dict:
        rels = {}
        for k, atoms in self.rel_defs.items():
            out = []
            for atom in atoms:
                if atom[0] == "rel":
                    out.append({"rel": atom[1], "args": [term_to_json(t) for t in atom[2]]})
                else:
                    out.append({"eq": [term_to_json(atom[1]), term_to_json(atom[2])]})
            rels[k] = out
        return {"target": self.target.to_json(),
                "ops": {k: term_to_json(t) for k, t in self.op_defs.items()},
                "rels": rels}

    @classmethod
    def load(cls, path: str) -> "ReductSpec":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def keep_reduct(target: Signature) -> ReductSpec:
    """Reduct that keeps the listed symbols unchanged."""
    ops = {k: (k, *range(a)) for k, a in target.ops}
    rels = {k: (("rel", k, tuple(range(a))),) for k, a in target.rels}
    return ReductSpec(target, ops, rels)


def _atom_holds(A: FiniteStructure, atom, env) -> bool:
    if atom[0] == "rel":
        return tuple(eval_term(A, t, env) for t in atom[2]) in A.rel(atom[1])
    return eval_term(A, atom[1], env) == eval_term(A, atom[2], env)


def apply_reduct(A: FiniteStructure, spec: ReductSpec, name: str | None = None) -> FiniteStructure:
    """Evaluate a reduct definition on ``A`` (same universe, target signature)."""
    spec.validate(A.sig)
    n = A.size
    ops = {}
    for op, t in spec.op_defs.items():
        arity = spec.target.op_arities[op]
        ops[op] = (arity, [eval_term(A, t, args) for args in itertools.product(range(n), repeat=arity)])
    rels = {}
    for rel, atoms in spec.rel_defs.items():
        arity = spec.target.rel_arities[rel]
        sel = [args for args in itertools.product(range(n), repeat=arity)
               if all(_atom_holds(A, atom, args) for atom in atoms)]
        if not sel:
            raise StructureError(f"reduct relation {rel!r} is empty on {A.name or 'the structure'}")
        rels[rel] = Relation(arity, tuple(sel))
    return FiniteStructure(n, ops, rels, name=name or f"{A.name}_flat", labels=A.labels)


def preimage(omegas: Sequence[Sequence[int]], r: Relation) -> Relation:
    """``{(a1..ak) : (w1(a1)..wk(ak)) in r}`` over the common domain of the maps."""
    omegas = [tuple(w) for w in omegas]
    if len(omegas) != r.arity:
        raise StructureError(f"{len(omegas)} maps given for a relation of arity {r.arity}")
    sizes = {len(w) for w in omegas}
    if len(sizes) != 1:
        raise StructureError("carrier maps must share a domain")
    (n,) = sizes
    return Relation(r.arity, tuple(
        t for t in itertools.product(range(n), repeat=r.arity)
        if tuple(w[a] for w, a in zip(omegas, t)) in r))


def relation_is_subuniverse(M: FiniteStructure, r: Relation) -> bool:
    """Does ``r`` form a substructure of ``M**arity``?"""
    k = r.arity
    n = M.size
    codes = {encode(t, n) for t in r.tuples}
    for arity, table in M.ops.values():
        if arity == 0:
            if encode((table[0],) * k, n) not in codes:
                return False
            continue
        for args in itertools.product(r.tuples, repeat=arity):
            img = tuple(table[table_index([a[j] for a in args], n)] for j in range(k))
            if img not in r:
                return False
    return True
