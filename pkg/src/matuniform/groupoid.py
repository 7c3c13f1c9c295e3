"""Finite groupoids with explicit composition tables.

A :class:`FiniteGroupoid` stores every arrow together with its source and
target and the complete partial composition table, so that the groupoid
axioms, the translation relations between hom-sets and normalizoids of
subgroupoids can all be checked by exhaustive enumeration.

Composition follows the usual convention ``compose(eta, xi) = eta . xi``,
defined exactly when ``src(eta) == dst(xi)``.
"""
import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Sequence

from .errors import (
    EmptyBase,
    InvalidAction,
    InvalidGroupoid,
    NotASubgroupoid,
    NotConnected,
    UnknownObject,
)


@dataclass(frozen=True)
class Arrow:
    id: Hashable
    src: Hashable
    dst: Hashable


@dataclass(frozen=True)
class FiniteGroupoid:
    objects: tuple
    arrows: tuple  # of Arrow
    composition: dict  # (eta_id, xi_id) -> id
    inverse: dict  # id -> id
    unities: dict  # object -> id
    _by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "arrows", tuple(self.arrows))
        object.__setattr__(self, "_by_id", {a.id: a for a in self.arrows})

    # -- basic queries -----------------------------------------------------
    def arrow(self, aid) -> Arrow:
        return self._by_id[aid]

    def src(self, aid):
        return self._by_id[aid].src

    def dst(self, aid):
        return self._by_id[aid].dst

    def compose(self, eta, xi):
        """``eta . xi`` or ``None`` when not composable."""
        return self.composition.get((eta, xi))

    def _check_object(self, x):
        if x not in self.unities:
            raise UnknownObject(x)

    def hom_set(self, x, y) -> list:
        """Arrows with source ``x`` and target ``y``."""
        self._check_object(x)
        self._check_object(y)
        return [a.id for a in self.arrows if a.src == x and a.dst == y]

    def vertex_group(self, x) -> list:
        return self.hom_set(x, x)

    def is_transitive(self) -> bool:
        return all(self.hom_set(x, y) for x in self.objects for y in self.objects)

    def __len__(self):
        return len(self.arrows)


# ---------------------------------------------------------------------------
# axioms
# ---------------------------------------------------------------------------

def axiom_violations(g: FiniteGroupoid) -> list:
    """Exhaustively check the four groupoid axioms; return violation messages."""
    bad = []
    ids = [a.id for a in g.arrows]
    for eta, xi in itertools.product(ids, ids):
        c = g.compose(eta, xi)
        composable = g.src(eta) == g.dst(xi)
        if composable != (c is not None):
            bad.append(f"composition of {eta!r},{xi!r} defined={c is not None} composable={composable}")
            continue
        if c is not None and (g.src(c) != g.src(xi) or g.dst(c) != g.dst(eta)):
            bad.append(f"{eta!r}.{xi!r} has wrong endpoints")
    for a, b, c in itertools.product(ids, ids, ids):
        ab = g.compose(a, b)
        bc = g.compose(b, c)
        if ab is None or bc is None:
            continue
        if g.compose(ab, c) != g.compose(a, bc):
            bad.append(f"associativity fails on {a!r},{b!r},{c!r}")
    for x in g.objects:
        u = g.unities.get(x)
        if u is None or g.src(u) != x or g.dst(u) != x:
            bad.append(f"unity of {x!r} missing or misplaced")
    for a in g.arrows:
        if g.compose(a.id, g.unities[a.src]) != a.id or g.compose(g.unities[a.dst], a.id) != a.id:
            bad.append(f"unity law fails for {a.id!r}")
        inv = g.inverse.get(a.id)
        if inv is None:
            bad.append(f"{a.id!r} has no inverse")
            continue
        if g.compose(inv, a.id) != g.unities[a.src] or g.compose(a.id, inv) != g.unities[a.dst]:
            bad.append(f"inverse law fails for {a.id!r}")
    return bad


def check_axioms(g: FiniteGroupoid) -> bool:
    return not axiom_violations(g)


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def make_pair_groupoid(objects: Iterable) -> FiniteGroupoid:
    """The pair groupoid ``M x M``: one arrow ``(x, y): x -> y`` per ordered pair."""
    objs = list(objects)
    if not objs:
        raise EmptyBase("pair groupoid needs at least one object")
    arrows = [Arrow((x, y), x, y) for x in objs for y in objs]
    comp = {}
    for (y2, z) in [(a.src, a.dst) for a in arrows]:
        for x in objs:
            comp[((y2, z), (x, y2))] = (x, z)
    return FiniteGroupoid(
        objects=objs,
        arrows=arrows,
        composition=comp,
        inverse={(x, y): (y, x) for x in objs for y in objs},
        unities={x: (x, x) for x in objs},
    )


def make_action_groupoid(elements: Sequence, mul: Callable, act: Callable, objects: Iterable,
                         identity=None) -> FiniteGroupoid:
    """Action groupoid ``G x M`` of a left action.

    ``mul(h, g)`` is the group law and ``act(g, x)`` the action.  The arrow
    ``(g, x)`` goes from ``x`` to ``g.x``; ``(h, y) . (g, x) = (hg, x)``.
    """
    elems = list(elements)
    objs = list(objects)
    if not objs:
        raise EmptyBase("action groupoid needs at least one object")
    if identity is None:
        cands = [e for e in elems if all(mul(e, g) == g and mul(g, e) == g for g in elems)]
        if len(cands) != 1:
            raise InvalidAction("could not identify a unique group identity")
        identity = cands[0]
    for x in objs:
        if act(identity, x) != x:
            raise InvalidAction(f"identity moves {x!r}")
    for g, h in itertools.product(elems, elems):
        if mul(h, g) not in elems:
            raise InvalidAction("group law not closed")
        for x in objs:
            gx = act(g, x)
            if gx not in objs:
                raise InvalidAction(f"{g!r}.{x!r} leaves the object set")
            if act(h, gx) != act(mul(h, g), x):
                raise InvalidAction(f"action incompatible with group law at {h!r},{g!r},{x!r}")
    inv_of = {}
    for g in elems:
        cands = [h for h in elems if mul(h, g) == identity]
        if len(cands) != 1:
            raise InvalidAction(f"{g!r} has no unique inverse")
        inv_of[g] = cands[0]
    arrows = [Arrow((g, x), x, act(g, x)) for g in elems for x in objs]
    comp = {}
    for g in elems:
        for x in objs:
            y = act(g, x)
            for h in elems:
                comp[((h, y), (g, x))] = (mul(h, g), x)
    return FiniteGroupoid(
        objects=objs,
        arrows=arrows,
        composition=comp,
        inverse={(g, x): (inv_of[g], act(g, x)) for g in elems for x in objs},
        unities={x: (identity, x) for x in objs},
    )


def permutation_group(n: int, generators=None):
    """All permutations of ``range(n)`` (or the group generated by ``generators``).

    Returns ``(elements, mul)`` with permutations as tuples and
    ``mul(h, g) = h o g``.
    """
    def mul(h, g):
        return tuple(h[g[i]] for i in range(n))

    if generators is None:
        elems = list(itertools.permutations(range(n)))
    else:
        e = tuple(range(n))
        elems = [e]
        frontier = [e]
        while frontier:
            new = []
            for a in frontier:
                for s in generators:
                    b = mul(tuple(s), a)
                    if b not in elems:
                        elems.append(b)
                        new.append(b)
            frontier = new
    return elems, mul


# ---------------------------------------------------------------------------
# sub-arrow-sets
# ---------------------------------------------------------------------------

def subgroupoid_base(g: FiniteGroupoid, sub: Iterable) -> list:
    sub = set(sub)
    return [x for x in g.objects if g.unities[x] in sub]


def is_subgroupoid(g: FiniteGroupoid, sub: Iterable) -> bool:
    """Closed under composition and inverse, with all unities over its base."""
    sub = set(sub)
    if not sub.issubset(g._by_id):
        return False
    base = set(subgroupoid_base(g, sub))
    for a in sub:
        if g.src(a) not in base or g.dst(a) not in base:
            return False
        if g.inverse[a] not in sub:
            return False
    for a, b in itertools.product(sub, sub):
        c = g.compose(a, b)
        if c is not None and c not in sub:
            return False
    return True


def check_translation_relation(g: FiniteGroupoid, x, y, z) -> bool:
    """Brute-force check of ``Omega_xz = h . Omega_xy = Omega_yz . f`` and of
    ``Omega_yy = h . Omega_xx . h^-1`` for every ``h`` in ``Omega_xy``.
    """
    hxy, hyz, hxz = g.hom_set(x, y), g.hom_set(y, z), g.hom_set(x, z)
    if not (hxy and hyz and hxz):
        raise NotConnected(f"{x!r}, {y!r}, {z!r} are not connected")
    target = set(hxz)
    for h in hyz:
        if {g.compose(h, f) for f in hxy} != target:
            return False
    for f in hxy:
        if {g.compose(h, f) for h in hyz} != target:
            return False
    gxx, gyy = g.vertex_group(x), set(g.vertex_group(y))
    for h in hxy:
        hinv = g.inverse[h]
        if {g.compose(g.compose(h, k), hinv) for k in gxx} != gyy:
            return False
    return True


def normalizoid(g: FiniteGroupoid, sub: Iterable) -> list:
    """Arrows ``h: x -> y`` of ``g`` with ``sub_y = h . sub_x . h^-1``."""
    sub = set(sub)
    if not is_subgroupoid(g, sub):
        raise NotASubgroupoid("argument is not a subgroupoid")
    base = subgroupoid_base(g, sub)
    vgroups = {x: {a for a in sub if g.src(a) == x and g.dst(a) == x} for x in base}
    out = []
    for a in g.arrows:
        if a.src not in vgroups or a.dst not in vgroups:
            continue
        hinv = g.inverse[a.id]
        conj = {g.compose(g.compose(a.id, k), hinv) for k in vgroups[a.src]}
        if conj == vgroups[a.dst]:
            out.append(a.id)
    return out


def base_groupoid(g: FiniteGroupoid) -> list:
    """The unities ``1(Omega)``."""
    return [g.unities[x] for x in g.objects]


# ---------------------------------------------------------------------------
# JSON round trip
# ---------------------------------------------------------------------------

def _key(v):
    return json.dumps(v, sort_keys=True)


def _jsonable(v):
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    return v


def _hashable(v):
    if isinstance(v, list):
        return tuple(_hashable(x) for x in v)
    return v


def to_json(g: FiniteGroupoid) -> str:
    """Serialise objects, arrows and composition triples ``[eta, xi, eta.xi]``."""
    doc = {
        "objects": [_jsonable(x) for x in g.objects],
        "arrows": [{"id": _jsonable(a.id), "src": _jsonable(a.src), "dst": _jsonable(a.dst)}
                   for a in g.arrows],
        "composition": sorted(([_jsonable(e), _jsonable(x), _jsonable(c)]
                               for (e, x), c in g.composition.items()), key=_key),
        "inverse": sorted(([_jsonable(a), _jsonable(b)] for a, b in g.inverse.items()), key=_key),
        "unities": sorted(([_jsonable(x), _jsonable(u)] for x, u in g.unities.items()), key=_key),
    }
    return json.dumps(doc, sort_keys=True, indent=1, ensure_ascii=False)


def from_json(text: str) -> FiniteGroupoid:
    """Inverse of :func:`to_json`.

    ``inverse`` and ``unities`` may be omitted; they are then recovered from
    the composition table.
    """
    doc = json.loads(text)
    objects = [_hashable(x) for x in doc["objects"]]
    arrows = [Arrow(_hashable(a["id"]), _hashable(a["src"]), _hashable(a["dst"])) for a in doc["arrows"]]
    comp = {(_hashable(e), _hashable(x)): _hashable(c) for e, x, c in doc["composition"]}
    if "unities" in doc:
        unities = {_hashable(x): _hashable(u) for x, u in doc["unities"]}
    else:
        unities = {}
        for a in arrows:
            if a.src == a.dst and comp.get((a.id, a.id)) == a.id:
                unities[a.src] = a.id
    if "inverse" in doc:
        inverse = {_hashable(a): _hashable(b) for a, b in doc["inverse"]}
    else:
        inverse = {}
        for a in arrows:
            for b in arrows:
                if comp.get((b.id, a.id)) == unities.get(a.src) and b.src == a.dst:
                    inverse[a.id] = b.id
                    break
    g = FiniteGroupoid(objects=objects, arrows=arrows, composition=comp, inverse=inverse, unities=unities)
    bad = axiom_violations(g)
    if bad:
        raise InvalidGroupoid(bad[0])
    return g
