import itertools
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from matuniform.errors import (
    EmptyBase,
    InvalidAction,
    InvalidGroupoid,
    NotASubgroupoid,
    NotConnected,
    UnknownObject,
)
from matuniform.groupoid import (
    axiom_violations,
    base_groupoid,
    check_axioms,
    check_translation_relation,
    from_json,
    is_subgroupoid,
    make_action_groupoid,
    make_pair_groupoid,
    normalizoid,
    permutation_group,
    to_json,
)


def cyclic(n):
    return list(range(n)), lambda h, g: (h + g) % n


def swap_groupoid():
    elems = ["e", "s"]
    mul = lambda h, g: "e" if h == g else "s"  # noqa: E731
    act = lambda g, x: x if g == "e" else {"a": "b", "b": "a"}[x]  # noqa: E731
    return make_action_groupoid(elems, mul, act, ["a", "b"])


def s3_loops():
    elems, mul = permutation_group(3)
    return make_action_groupoid(elems, mul, lambda g, x: x, ["*"]), elems, mul


def group_normalizer(elems, mul, H):
    # plain group theory, independent of the groupoid code
    inv = {g: next(h for h in elems if mul(h, g) == tuple(range(len(g)))) for g in elems}
    Hs = set(H)
    return {g for g in elems if {mul(mul(g, h), inv[g]) for h in Hs} == Hs}


def subgroups(elems, mul):
    out = set()
    for r in range(1, len(elems) + 1):
        for cand in itertools.combinations(elems, r):
            s = set(cand)
            if all(mul(a, b) in s for a in s for b in s):
                out.add(frozenset(s))
    return out


def example_groupoids():
    out = [make_pair_groupoid(range(n)) for n in range(1, 5)]
    for n in (2, 3, 4, 6):
        elems, mul = cyclic(n)
        for m in (1, 2, 3, 4):
            if n % m == 0 or m == 1:
                out.append(make_action_groupoid(elems, mul, lambda g, x, m=m: (x + g) % m, range(m)))
    elems, mul = permutation_group(3)
    out.append(make_action_groupoid(elems, mul, lambda g, x: g[x], range(3)))
    out.append(make_action_groupoid(elems, mul, lambda g, x: x, ["p"]))
    s = tuple([1, 0, 2])
    z2, m2 = permutation_group(3, generators=[s])
    out.append(make_action_groupoid(z2, m2, lambda g, x: g[x], range(3)))
    out.append(swap_groupoid())
    return out


EXAMPLES = example_groupoids()


class TestConstructors:
    def test_pair_sizes(self):
        assert len(make_pair_groupoid([1])) == 1
        g2 = make_pair_groupoid([1, 2])
        assert len(g2) == 4 and g2.is_transitive()
        g3 = make_pair_groupoid([1, 2, 3])
        assert len(g3) == 9
        assert all(len(g3.vertex_group(x)) == 1 for x in g3.objects)
        assert g2.hom_set(1, 2) == [(1, 2)]

    def test_empty_base(self):
        with pytest.raises(EmptyBase):
            make_pair_groupoid([])
        elems, mul = cyclic(2)
        with pytest.raises(EmptyBase):
            make_action_groupoid(elems, mul, lambda g, x: x, [])

    def test_swap_action(self):
        g = swap_groupoid()
        assert len(g) == 4 and g.is_transitive()
        assert g.vertex_group("a") == [("e", "a")]
        assert g.dst(("s", "a")) == "b"

    def test_trivial_action_one_point(self):
        elems, mul = cyclic(2)
        g = make_action_groupoid(elems, mul, lambda h, x: x, ["a"])
        assert len(g) == 2 and len(g.vertex_group("a")) == 2

    def test_trivial_group_not_transitive(self):
        g = make_action_groupoid([0], lambda h, g: 0, lambda h, x: x, ["a", "b"])
        assert len(g) == 2 and not g.is_transitive()

    def test_invalid_actions(self):
        elems, mul = cyclic(3)
        with pytest.raises(InvalidAction):  # identity moves points
            make_action_groupoid(elems, mul, lambda g, x: (x + 1) % 3, range(3), identity=0)
        with pytest.raises(InvalidAction):  # incompatible with the group law
            make_action_groupoid(elems, mul, lambda g, x: (x + (1 if g else 0)) % 3, range(3))
        with pytest.raises(InvalidAction):  # leaves the object set
            make_action_groupoid(elems, mul, lambda g, x: x + g, range(3))

    def test_unknown_object(self):
        g = make_pair_groupoid([1, 2])
        with pytest.raises(UnknownObject):
            g.hom_set(1, 5)
        with pytest.raises(UnknownObject):
            g.vertex_group(7)

    def test_permutation_group(self):
        elems, mul = permutation_group(3)
        assert len(elems) == 6
        z3, _ = permutation_group(3, generators=[(1, 2, 0)])
        assert len(z3) == 3


class TestAxioms:
    @pytest.mark.parametrize("g", EXAMPLES, ids=lambda g: f"{len(g.objects)}obj-{len(g)}arr")
    def test_axioms_hold(self, g):
        assert axiom_violations(g) == []

    @pytest.mark.parametrize("g", EXAMPLES, ids=lambda g: f"{len(g.objects)}obj-{len(g)}arr")
    def test_translation_relation_on_connected_triples(self, g):
        for x, y, z in itertools.product(g.objects, repeat=3):
            if g.hom_set(x, y) and g.hom_set(y, z) and g.hom_set(x, z):
                assert check_translation_relation(g, x, y, z)

    def test_translation_disconnected(self):
        g = make_action_groupoid([0], lambda h, g: 0, lambda h, x: x, ["a", "b"])
        with pytest.raises(NotConnected):
            check_translation_relation(g, "a", "b", "a")
        assert check_translation_relation(g, "a", "a", "a")

    def test_broken_table_detected(self):
        g = make_pair_groupoid([1, 2])
        comp = dict(g.composition)
        comp[((1, 2), (1, 1))] = (2, 2)
        bad = type(g)(g.objects, g.arrows, comp, g.inverse, g.unities)
        assert not check_axioms(bad)

    @given(st.integers(1, 6), st.integers(1, 4))
    def test_cyclic_actions(self, n, m):
        elems, mul = cyclic(n)
        if n % m:
            act = lambda g, x: x  # noqa: E731
        else:
            act = lambda g, x: (x + g) % m  # noqa: E731
        g = make_action_groupoid(elems, mul, act, range(m))
        assert check_axioms(g)
        assert len(g) == n * m


class TestNormalizoid:
    def test_s3_normalizers(self):
        g, elems, mul = s3_loops()
        subs = subgroups(elems, mul)
        assert len(subs) == 6
        for H in subs:
            sub = [(h, "*") for h in H]
            assert is_subgroupoid(g, sub)
            got = {a for a, _ in normalizoid(g, sub)}
            assert got == group_normalizer(elems, mul, H)

    def test_two_element_subgroup(self):
        g, elems, mul = s3_loops()
        sub = [((0, 1, 2), "*"), ((1, 0, 2), "*")]
        assert len(normalizoid(g, sub)) == 2

    @pytest.mark.parametrize("g", [e for e in EXAMPLES if e.is_transitive()],
                             ids=lambda g: f"{len(g.objects)}obj-{len(g)}arr")
    def test_base_groupoid_normalizoid_is_everything(self, g):
        assert set(normalizoid(g, base_groupoid(g))) == {a.id for a in g.arrows}
        assert set(normalizoid(g, [a.id for a in g.arrows])) == {a.id for a in g.arrows}

    @pytest.mark.parametrize("g", EXAMPLES, ids=lambda g: f"{len(g.objects)}obj-{len(g)}arr")
    def test_normalizoid_is_subgroupoid_containing_input(self, g):
        for x in g.objects:
            sub = list(base_groupoid(g)) + g.vertex_group(x)
            if not is_subgroupoid(g, sub):
                continue
            n = normalizoid(g, sub)
            assert set(sub) <= set(n)
            assert is_subgroupoid(g, n)

    def test_not_a_subgroupoid(self):
        g, elems, mul = s3_loops()
        with pytest.raises(NotASubgroupoid):
            normalizoid(g, [((1, 2, 0), "*")])
        with pytest.raises(NotASubgroupoid):
            normalizoid(make_pair_groupoid([1, 2]), [(1, 2)])


class TestJson:
    @pytest.mark.parametrize("g", EXAMPLES[:6] + EXAMPLES[-3:], ids=lambda g: f"{len(g.objects)}obj-{len(g)}arr")
    def test_round_trip(self, g):
        text = to_json(g)
        h = from_json(text)
        assert to_json(h) == text
        assert {a.id for a in h.arrows} == {a.id for a in g.arrows}

    def test_recovers_inverse_and_unities(self):
        doc = json.loads(to_json(swap_groupoid()))
        del doc["inverse"], doc["unities"]
        h = from_json(json.dumps(doc))
        assert check_axioms(h)
        assert h.unities == swap_groupoid().unities

    def test_rejects_broken_table(self):
        doc = json.loads(to_json(make_pair_groupoid([1, 2])))
        doc["composition"] = doc["composition"][1:]
        with pytest.raises(InvalidGroupoid):
            from_json(json.dumps(doc))
