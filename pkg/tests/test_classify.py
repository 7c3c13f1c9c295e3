import numpy as np
import pytest
from hypothesis import given, settings

from matuniform.classify import (
    FLUID,
    FLUID_CRYSTAL,
    FLUID_KINDS,
    FULLY_ISOTROPIC,
    KINDS,
    SOLID_KINDS,
    TRANSVERSE,
    TRICLINIC,
    ClassifyOptions,
    classify_point,
    classify_points,
    invariant_metric,
    sample_symmetries,
    undistorted_frame,
)
from matuniform.constitutive import MODEL_CARDS, ConstitutiveModel, FunctionField, is_symmetry
from matuniform.errors import NotPositiveDefinite, UnclassifiablePoint, UndistortedSearchFailed
from matuniform.smallmat import is_orthogonal, random_rotation, rotation

from strategies import rotations

X0 = np.zeros(3)
DOCUMENTED = {mid: card.kind for mid, card in MODEL_CARDS.items()}


def random_distortion(rng, max_cond=4.0):
    while True:
        S = np.eye(3) + 0.5 * rng.normal(size=(3, 3))
        if np.linalg.det(S) > 0.2 and np.linalg.cond(S) <= max_cond:
            return S


class TestSampling:
    def test_triclinic_only_identity(self):
        s = sample_symmetries(ConstitutiveModel("triclinic", {}), X0)
        assert len(s) == 1 and np.allclose(s.elements[0], np.eye(3), atol=1e-6)

    def test_fluid_keeps_unimodular_seeds(self):
        s = sample_symmetries(ConstitutiveModel("fluid", {}), X0)
        accepted = [t for t in s.trace if t["seed"].startswith("unimodular")]
        # exact in arithmetic; round-off only in floating point, and no step is taken
        assert accepted and all(t["accepted"] and t["residual"] <= 1e-12 for t in accepted)
        assert all(t["iterations"] == 1 for t in accepted)

    def test_isotropic_accepts_rotations(self):
        s = sample_symmetries(ConstitutiveModel("neo_hookean", {}), X0)
        rot = [t for t in s.trace if t["seed"].startswith("rotation")]
        assert all(t["accepted"] for t in rot)
        assert all(is_orthogonal(p, 1e-6) for p in s.elements)


class TestInvariantMetric:
    def test_rotations(self, rng):
        assert np.allclose(invariant_metric(np.array([random_rotation(rng) for _ in range(6)])), np.eye(3), atol=1e-12)

    def test_identity_only(self):
        assert np.allclose(invariant_metric(np.eye(3)[None]), np.eye(3))

    def test_conjugated_rotations(self, rng):
        S = np.diag([2.0, 1.0, 1.0])
        Si = np.linalg.inv(S)
        el = np.array([np.eye(3)] + [S @ random_rotation(rng) @ Si for _ in range(12)])
        G = invariant_metric(el)
        ref = Si.T @ Si
        assert np.allclose(G, ref / np.linalg.det(ref) ** (1 / 3), atol=1e-10)

    def test_noncompact(self):
        shear = np.array([[1.0, 0.5, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        with pytest.raises(NotPositiveDefinite):
            invariant_metric(np.array([np.eye(3), shear, np.diag([2.0, 0.5, 1.0]), np.diag([1.0, 2.0, 0.5])]))


class TestUndistortedFrame:
    def test_isotropic(self):
        z = undistorted_frame(ConstitutiveModel("neo_hookean", {}), X0)
        assert np.allclose(z / np.cbrt(np.linalg.det(z)), np.eye(3), atol=1e-6)

    def test_distorted_isotropic(self):
        S = np.diag([2.0, 1.0, 1.0])
        model = ConstitutiveModel("neo_hookean", {}).distorted(S)
        d = classify_point(model, X0)
        z = d.undistorted_frame
        assert np.allclose(z / np.cbrt(np.linalg.det(z)), S / np.cbrt(2.0), atol=1e-6)
        zi = np.linalg.inv(z)
        assert all(is_orthogonal(zi @ g @ z, 1e-6) for g in d.generators)

    def test_fluid(self):
        assert np.array_equal(undistorted_frame(ConstitutiveModel("fluid", {}), X0), np.eye(3))

    def test_failure_is_reported(self, monkeypatch):
        import matuniform.classify as c

        def boom(*a, **k):
            raise UnclassifiablePoint("no template")
        monkeypatch.setattr(c, "classify_point", boom)
        with pytest.raises(UndistortedSearchFailed):
            c.undistorted_frame(ConstitutiveModel("neo_hookean", {}), X0)


class TestClassifyPoint:
    @pytest.mark.parametrize("mid", sorted(MODEL_CARDS))
    def test_documented_kind(self, mid):
        d = classify_point(ConstitutiveModel(mid, {}), X0)
        assert d.kind == DOCUMENTED[mid]

    def test_transverse_axis(self):
        d = classify_point(ConstitutiveModel("transverse_iso", {"axis": [1.0, 0, 0]}), X0)
        assert d.kind == TRANSVERSE
        assert np.allclose(d.axis, [1, 0, 0], atol=1e-6)

    def test_fluid_crystal_axis(self):
        d = classify_point(ConstitutiveModel("fluid_crystal_1", {}), X0)
        assert d.kind == FLUID_CRYSTAL
        assert np.allclose(d.axis, [0, 0, 1], atol=1e-6)
        for g in d.generators:
            v = g @ np.array([0, 0, 1.0])
            assert np.linalg.norm(np.cross(v, [0, 0, 1])) <= 1e-8

    @pytest.mark.parametrize("mid", sorted(MODEL_CARDS))
    def test_generators_repass(self, mid):
        model = ConstitutiveModel(mid, {}).distorted(np.array([[1.1, 0.2, 0], [0, 0.9, 0.1], [0, 0, 1.0]]))
        d = classify_point(model, X0)
        for g in d.generators:
            assert is_symmetry(model, X0, g, tol=1e-8)

    @pytest.mark.parametrize("mid", sorted(MODEL_CARDS))
    def test_solid_fluid_dichotomy(self, mid):
        d = classify_point(ConstitutiveModel(mid, {}), X0)
        assert (d.kind in SOLID_KINDS) != (d.kind in FLUID_KINDS)
        assert d.is_solid == MODEL_CARDS[mid].solid

    @pytest.mark.parametrize("mid", sorted(MODEL_CARDS))
    def test_predistortion_invariance(self, mid, rng):
        base = ConstitutiveModel(mid, {})
        for _ in range(4):
            S = random_distortion(rng)
            assert classify_point(base.distorted(S), X0).kind == DOCUMENTED[mid]

    @settings(max_examples=10)
    @given(rotations())
    def test_axis_equivariance(self, Q):
        a = np.array([0.3, -0.5, 0.8])
        a /= np.linalg.norm(a)
        da = classify_point(ConstitutiveModel("transverse_iso", {"axis": a}), X0)
        db = classify_point(ConstitutiveModel("transverse_iso", {"axis": Q @ a}), X0)
        assert abs(abs(db.axis @ (Q @ da.axis)) - 1.0) <= 1e-5

    def test_unclassifiable(self, monkeypatch):
        # a symmetry group with a fixed line but no rotations: only reflections through e1
        import matuniform.classify as c
        refl = np.diag([-1.0, 1.0, 1.0])

        def fake_sample(model, X, opts=None):
            return c.SymmetrySample(np.array([np.eye(3), refl]), np.zeros(2), 0)
        monkeypatch.setattr(c, "sample_symmetries", fake_sample)
        with pytest.raises(UnclassifiablePoint):
            classify_point(ConstitutiveModel("triclinic", {}), X0)


class TestClassifyPoints:
    def test_rotating_fiber(self):
        pts = np.array([[0.5, 0.5, t] for t in np.linspace(0, 1, 5)])

        def axis(X):
            return np.array([np.cos(0.8 * X[2]), np.sin(0.8 * X[2]), 0.0])
        model = ConstitutiveModel("transverse_iso", {"axis": FunctionField(axis)})
        out = classify_points(model, pts)
        assert all(d.kind == TRANSVERSE for d in out)
        for d, X in zip(out, pts):
            assert abs(abs(d.axis @ axis(X)) - 1) <= 1e-6

    def test_cache_shares_identical_laws(self):
        model = ConstitutiveModel("neo_hookean", {})
        cache = {}
        out = classify_points(model, np.random.default_rng(0).uniform(size=(6, 3)), cache=cache)
        assert len(cache) == 1 and all(d is out[0] for d in out)

    def test_seed_options(self):
        d = classify_point(ConstitutiveModel("neo_hookean", {}), X0, ClassifyOptions(seed=11))
        assert d.seed == 11 and d.kind == FULLY_ISOTROPIC
        assert set(KINDS) == {FULLY_ISOTROPIC, TRANSVERSE, TRICLINIC, FLUID, FLUID_CRYSTAL}
