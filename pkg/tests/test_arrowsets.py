import itertools

import numpy as np
import pytest

from matuniform.arrowsets import (
    FrameArrowSet,
    adapted_orbit,
    arrows_from_adapted_frames,
    contains_all,
    dedupe,
    intersect_arrow_sets,
    is_sampled_subgroupoid,
    metric_orthogonal_mask,
    normalizoid_arrows,
    orthogonal_reduction,
    same_arrows,
    structure_group_of,
    unimodular_mask,
    unimodular_reduction,
)
from matuniform.errors import (
    BaseMismatch,
    InconsistentStructureGroup,
    MissingMetric,
    NonpositiveDensity,
    NotASubgroupoid,
    NotTransitiveFromBasepoint,
    SingularMatrix,
)
from matuniform.smallmat import FrameArrow, is_orthogonal, rotation

POINTS = (0, 1, 2)


def dihedral4():
    """Symmetries of a square in the e1-e2 plane (order 8, orthogonal)."""
    rots = [rotation([0, 0, 1], k * np.pi / 2) for k in range(4)]
    flip = rotation([1, 0, 0], np.pi)
    return rots + [r @ flip for r in rots]


def frames(rng):
    out = {}
    for x in POINTS:
        while True:
            z = rng.normal(size=(3, 3)) + 2 * np.eye(3)
            if abs(np.linalg.det(z)) > 0.5:
                out[x] = z
                break
    return out


def transported(z, mats):
    """Arrow set ``z_y M z_x^-1`` over every ordered pair of points."""
    m, s, d = [], [], []
    for x, y in itertools.product(POINTS, POINTS):
        zi = np.linalg.inv(z[x])
        for M in mats:
            m.append(z[y] @ M @ zi)
            s.append(x)
            d.append(y)
    return FrameArrowSet(np.array(m), s, d, POINTS)


def orthogonal_setup(rng):
    z = frames(rng)
    metric = {x: np.linalg.inv(z[x]).T @ np.linalg.inv(z[x]) for x in POINTS}
    H = dihedral4()
    sub = transported(z, H)
    normalizing = [rotation([0, 0, 1], k * np.pi / 4) for k in range(8)]
    other = [rotation([1, 1, 0], 0.3), rotation([0, 1, 0], 1.0)]
    stretches = [np.eye(3), np.diag([2.0, 2.0, 0.5]), np.diag([3.0, 1.0, 1.0])]
    ambient = transported(z, [r @ s for r in normalizing + other for s in stretches])
    return z, metric, sub, ambient


def unimodular_setup(rng):
    z = frames(rng)
    rho = {x: 1.0 / abs(np.linalg.det(z[x])) for x in POINTS}
    H = [np.eye(3), np.diag([-1.0, 1.0, 1.0]), np.diag([1.0, -1.0, 1.0]), np.diag([-1.0, -1.0, 1.0])]
    sub = transported(z, H)
    base = [np.eye(3), np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),
            np.diag([2.0, 0.5, 1.0]), np.array([[1.0, 0.5, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])]
    ambient = transported(z, [c * b for b in base for c in (1.0, 2.0, 0.7)])
    return z, rho, sub, ambient


class TestFrameArrowSet:
    def test_validation(self):
        with pytest.raises(SingularMatrix):
            FrameArrowSet(np.zeros((1, 3, 3)), [0], [0], [0])
        with pytest.raises(BaseMismatch):
            FrameArrowSet(np.eye(3)[None], [0], [5], [0, 1])
        with pytest.raises(ValueError):
            FrameArrowSet(np.eye(3)[None], [0, 1], [0], [0, 1])

    def test_from_arrows_and_hom(self):
        a = FrameArrow(2 * np.eye(3), "x", "y")
        s = FrameArrowSet.from_arrows([a, a.inverse()])
        assert set(s.base) == {"x", "y"}
        assert np.allclose(s.hom("x", "y")[0], 2 * np.eye(3))
        assert len(s.vertex_group("x")) == 0
        assert s.closed_under_inverse
        assert not FrameArrowSet.from_arrows([a]).closed_under_inverse
        assert len(FrameArrowSet.from_arrows([a]).with_inverses()) == 2

    def test_dedupe_and_same(self):
        s = FrameArrowSet(np.array([np.eye(3), np.eye(3) + 1e-12, 2 * np.eye(3)]), [0, 0, 0], [0, 0, 0], [0])
        d = dedupe(s)
        assert len(d) == 2 and same_arrows(s, d)
        assert contains_all(s, d) and contains_all(d, s)


class TestReductions:
    def test_orthogonal_examples(self, rng):
        eye = {0: np.eye(3)}
        q = rotation([1, 2, 3], 0.8)
        one = lambda m: FrameArrowSet(m[None], [0], [0], [0])  # noqa: E731
        assert same_arrows(orthogonal_reduction(one(q), eye), one(q))
        assert same_arrows(orthogonal_reduction(one(np.diag([2.0, 3.0, 4.0])), eye), one(np.eye(3)))
        assert same_arrows(orthogonal_reduction(one(q @ np.diag([2.0, 2.0, 3.0])), eye), one(q))

    def test_orthogonal_outputs_are_metric_orthogonal(self, rng):
        z, metric, sub, ambient = orthogonal_setup(rng)
        out = orthogonal_reduction(ambient, metric)
        assert metric_orthogonal_mask(out, metric, tol=1e-9).all()

    def test_missing_metric(self):
        s = FrameArrowSet(np.eye(3)[None], [0], [1], [0, 1])
        with pytest.raises(MissingMetric):
            orthogonal_reduction(s, {0: np.eye(3)})

    def test_unimodular_examples(self):
        one = lambda m: FrameArrowSet(m[None], [0], [0], [0])  # noqa: E731
        q = rotation([0, 1, 0], 0.3)
        assert same_arrows(unimodular_reduction(one(q), {0: 1.0}), one(q))
        assert same_arrows(unimodular_reduction(one(np.diag([8.0, 1, 1])), {0: 1.0}),
                           one(np.diag([4.0, 0.5, 0.5])))
        assert same_arrows(unimodular_reduction(one(-np.eye(3)), {0: 1.0}), one(-np.eye(3)))
        with pytest.raises(NonpositiveDensity):
            unimodular_reduction(one(q), {0: 0.0})

    def test_unimodular_outputs(self, rng):
        z, rho, sub, ambient = unimodular_setup(rng)
        assert unimodular_mask(unimodular_reduction(ambient, rho), rho, tol=1e-9).all()

    def test_intersections(self, rng):
        z, metric, sub, ambient = orthogonal_setup(rng)
        assert same_arrows(intersect_arrow_sets(ambient, ambient), ambient)
        rots = FrameArrowSet(np.array([rotation(rng.normal(size=3), t) for t in (0.1, 0.9, 2.0)]),
                             [0] * 3, [0] * 3, [0])
        unim = FrameArrowSet(np.concatenate([rots.mats, [np.diag([2.0, 0.5, 1.0])]]), [0] * 4, [0] * 4, [0])
        assert same_arrows(intersect_arrow_sets(rots, unim), rots)
        a = FrameArrowSet(np.eye(3)[None], [0], [0], [0])
        b = FrameArrowSet(2 * np.eye(3)[None], [0], [0], [0])
        assert len(intersect_arrow_sets(a, b)) == 0
        with pytest.raises(BaseMismatch):
            intersect_arrow_sets(a, FrameArrowSet(np.eye(3)[None], [1], [1], [1]))


class TestReducedNormalizoid:
    def test_orthogonal_reduction_of_normalizoid(self, rng):
        for _ in range(3):
            z, metric, sub, ambient = orthogonal_setup(rng)
            assert is_sampled_subgroupoid(sub)
            N = normalizoid_arrows(ambient, sub, tol=1e-7)
            # 8 normalizing rotations x 2 commuting stretches per ordered pair
            assert len(N) == 9 * 16
            lhs = dedupe(orthogonal_reduction(N, metric), tol=1e-7)
            rhs = intersect_arrow_sets(N, ambient.subset(metric_orthogonal_mask(ambient, metric, 1e-7)), tol=1e-7)
            assert same_arrows(lhs, rhs, tol=1e-7)

    def test_unimodular_reduction_of_normalizoid(self, rng):
        for _ in range(3):
            z, rho, sub, ambient = unimodular_setup(rng)
            N = normalizoid_arrows(ambient, sub, tol=1e-7)
            assert len(N) > 0
            lhs = dedupe(unimodular_reduction(N, rho), tol=1e-7)
            rhs = N.subset(unimodular_mask(N, rho, 1e-7))
            assert same_arrows(lhs, rhs, tol=1e-7)

    def test_normalizoid_requires_subgroupoid(self, rng):
        z, metric, sub, ambient = orthogonal_setup(rng)
        with pytest.raises(NotASubgroupoid):
            normalizoid_arrows(ambient, sub.subset(np.arange(len(sub)) % 8 != 1))


class TestAdaptedFrames:
    def test_unities_only(self, rng):
        z = rng.normal(size=(3, 3)) + 3 * np.eye(3)
        arrows = FrameArrowSet(np.eye(3)[None], [0], [0], [0])
        fr, G = adapted_orbit(z, 0, arrows)
        assert np.allclose(fr[0][0], z) and np.allclose(G, np.eye(3)[None])

    def test_two_points(self, rng):
        A = rng.normal(size=(3, 3)) + 2 * np.eye(3)
        z = np.diag([1.0, 2.0, 3.0])
        arrows = FrameArrowSet(np.array([np.eye(3), A]), [0, 0], [0, 1], [0, 1])
        fr, G = adapted_orbit(z, 0, arrows)
        assert np.allclose(fr[1][0], A @ z)

    def test_not_transitive(self):
        arrows = FrameArrowSet(np.eye(3)[None], [0], [0], [0, 1])
        with pytest.raises(NotTransitiveFromBasepoint):
            adapted_orbit(np.eye(3), 0, arrows)

    def test_orbit_of_translated_frame(self, rng):
        z, metric, sub, ambient = orthogonal_setup(rng)
        zz = np.eye(3)
        fr, G = adapted_orbit(zz, 0, sub)
        h = sub.vertex_group(0)[3]
        fr2, G2 = adapted_orbit(h @ zz, 0, sub)
        for y in POINTS:
            assert same_arrows(FrameArrowSet(fr[y], [y] * len(fr[y]), [y] * len(fr[y]), POINTS),
                               FrameArrowSet(fr2[y], [y] * len(fr2[y]), [y] * len(fr2[y]), POINTS), tol=1e-7)
        conj = np.linalg.inv(h) @ G @ h
        assert all(np.abs(G2 - c).max(axis=(1, 2)).min() < 1e-8 for c in conj)

    def test_round_trip(self, rng):
        z, metric, sub, ambient = orthogonal_setup(rng)
        fr, G = adapted_orbit(z[0], 0, sub)
        back = arrows_from_adapted_frames(fr, tol=1e-7)
        assert contains_all(back, sub, tol=1e-7)
        assert same_arrows(back, sub, tol=1e-7)
        assert len(structure_group_of(fr, tol=1e-7)) == 8

    def test_single_frame_per_point(self, rng):
        fr = {x: rng.normal(size=(1, 3, 3)) + 2 * np.eye(3) for x in POINTS}
        out = arrows_from_adapted_frames(fr)
        assert len(out) == len(POINTS) ** 2

    def test_orthonormal_frames_give_orthogonal_arrows(self):
        H = np.array(dihedral4())
        fr = {x: rotation([1, 0, 0], 0.3 * x) @ H for x in POINTS}
        out = arrows_from_adapted_frames(fr)
        assert all(is_orthogonal(m, 1e-12) for m in out.mats)

    def test_inconsistent(self, rng):
        fr = {0: np.array([np.eye(3), 2 * np.eye(3)]), 1: np.array([np.eye(3), 3 * np.eye(3)])}
        with pytest.raises(InconsistentStructureGroup):
            arrows_from_adapted_frames(fr)
        with pytest.raises(InconsistentStructureGroup):
            arrows_from_adapted_frames({0: np.zeros((0, 3, 3))})
