import math

import numpy as np
import pytest

from chromasphere import rng as rngmod
from chromasphere.errors import (DomainError, InvalidParameterError,
                                 NoPreimageError)
from chromasphere.forbidden import (BuildStrategy, CapPacking, ForbiddenSet,
                                    boundary_clearance, build_packing,
                                    certify_forbidden, density_lower_bound,
                                    forbidden_margins, make_forbidden,
                                    mc_density, member_mask,
                                    min_pairwise_angle, nearest_center,
                                    nearest_centers, rotate_forbidden,
                                    sample_members, shrink, unshrink)
from chromasphere.geometry import SphereSpec, random_points, random_rotations
from chromasphere.parameters import solve_params

import oracles

QUICK = BuildStrategy(clean_run=2_000)


@pytest.fixture(scope="module")
def packing():
    spec = SphereSpec(2, 2.0)
    phi = solve_params(2.0).phi
    return build_packing(spec, phi, rngmod.stream(42, rngmod.PACKING), QUICK)


@pytest.fixture(scope="module")
def fs(packing):
    lam = 0.95 * solve_params(2.0).lambda0
    return make_forbidden(packing, lam)


def test_packing_separation_is_strict(packing):
    assert len(packing) >= 10  # saturation at phi(2) puts ~14 caps on S^2
    assert min_pairwise_angle(packing) > 2.0 * packing.phi
    np.testing.assert_allclose(np.linalg.norm(packing.centers, axis=1), 2.0,
                               rtol=1e-12)


def test_packing_saturation_report(packing):
    rep = packing.saturation
    assert rep.clean_run == 2_000
    assert rep.candidates >= rep.clean_run
    assert rep.pool_candidates > 0


def test_packing_determinism():
    spec = SphereSpec(2, 2.0)
    phi = solve_params(2.0).phi
    a = build_packing(spec, phi, rngmod.stream(42, rngmod.PACKING), QUICK)
    b = build_packing(spec, phi, rngmod.stream(42, rngmod.PACKING), QUICK)
    np.testing.assert_array_equal(a.centers, b.centers)


def test_nearest_center_tie_breaks_low_index(packing):
    # a probe exactly at a center resolves to that center
    for j in (0, len(packing) - 1):
        assert nearest_center(packing, packing.centers[j]) == j
    idx, ang = nearest_centers(packing, packing.centers)
    np.testing.assert_array_equal(idx, np.arange(len(packing)))
    assert ang.max() < 1e-7


def test_shrink_unshrink_roundtrip(packing):
    spec = packing.spec
    lam = 0.4
    rng = rngmod.stream(7, 1)
    center = packing.centers[3]
    pole_u = packing.units[3]
    pts = random_points(spec, rng, 200)
    # keep points in the open half-sphere around the pole
    pts = pts[(pts / spec.R) @ pole_u > 0.05][:40]
    for p in pts:
        s = shrink(spec, center, lam, p)
        back = unshrink(spec, center, lam, s)
        np.testing.assert_allclose(back, p, atol=1e-9)
        # shrinking moves the point toward the pole by the sine rule
        before = math.acos(min(1.0, max(-1.0, float(p @ pole_u) / spec.R)))
        after = math.acos(min(1.0, max(-1.0, float(s @ pole_u) / spec.R)))
        assert after <= before + 1e-12
        assert math.sin(after) == pytest.approx(lam * math.sin(before), abs=1e-12)
    # the pole is a fixed point
    np.testing.assert_allclose(shrink(spec, center, lam, center), center,
                               atol=1e-12)


def test_unshrink_rejects_outside_image(packing):
    spec = packing.spec
    center = packing.centers[0]
    pole_u = packing.units[0]
    # a point at tangential radius > lam R from the pole has no preimage
    lam = 0.3
    theta = math.asin(lam) + 0.2
    perp = np.array([-pole_u[1], pole_u[0], 0.0])
    perp /= np.linalg.norm(perp)
    q = spec.R * (math.cos(theta) * pole_u + math.sin(theta) * perp)
    with pytest.raises(NoPreimageError):
        unshrink(spec, center, lam, q)


def test_membership_of_shrunken_centers(fs):
    # the pole of each piece is its own shrink image and must be a member
    assert member_mask(fs, fs.packing.centers).all()


def test_membership_excludes_far_points(fs):
    spec = fs.spec
    rng = rngmod.stream(8, 2)
    pts = random_points(spec, rng, 4000)
    inside = member_mask(fs, pts)
    _, ang = nearest_centers(fs.packing, pts)
    # no member can sit farther than gamma from every center
    assert np.all(ang[inside] <= fs.gamma + 1e-9)
    # points well beyond gamma of all centers are never members
    assert not inside[ang > fs.gamma + 1e-6].any()


def test_membership_nearest_only_agrees_with_full_scan(fs):
    """The nearest-center shortcut must match a scan over every center."""
    assert fs.nearest_only  # gamma < phi in this regime
    generic = ForbiddenSet(packing=fs.packing, lam=fs.lam, gamma=fs.gamma,
                           nearest_only=False)
    rng = rngmod.stream(8, 3)
    pts = random_points(fs.spec, rng, 20_000)
    np.testing.assert_array_equal(member_mask(fs, pts), member_mask(generic, pts))


def test_sample_members_are_members(fs):
    pts, idx = sample_members(fs, 3_000, rngmod.stream(9, 4))
    assert len(pts) == 3_000
    assert member_mask(fs, pts).all()
    want, _ = nearest_centers(fs.packing, pts)
    np.testing.assert_array_equal(idx, want)


def test_margins_match_formulas(fs):
    d, s = forbidden_margins(fs)
    assert d == pytest.approx(oracles.HEADLINE["diameter_bound"], abs=1e-12)
    assert s == pytest.approx(oracles.HEADLINE["separation_bound"], abs=1e-12)


def test_certificate_quick(fs):
    rep = certify_forbidden(fs, 1.0, 20_000, rngmod.stream(10, 5))
    assert rep["ok"]
    assert rep["violations_in_gap"] == 0
    assert rep["max_same_piece_chord"] <= rep["diameter_bound"] + 1e-9
    assert rep["min_cross_piece_chord"] >= rep["separation_bound"] - 1e-9


def test_certificate_rejects_critical_shrink(packing):
    lam0 = solve_params(2.0).lambda0
    at_critical = make_forbidden(packing, lam0)
    with pytest.raises(InvalidParameterError):
        certify_forbidden(at_critical, 1.0, 100, rngmod.stream(10, 6))


def test_clearance_quick(fs):
    rep = boundary_clearance(fs, 2_000, rngmod.stream(11, 7))
    assert rep["ok"]
    assert rep["threshold"] == pytest.approx(
        oracles.HEADLINE["clearance_threshold"], abs=1e-12)
    assert rep["min_clearance"] >= rep["threshold"] - 1e-9


def test_rotated_set_membership_is_conjugated(fs):
    rot = random_rotations(fs.spec, rngmod.stream(12, 8), 1)[0]
    rfs = rotate_forbidden(fs, rot)
    pts = random_points(fs.spec, rngmod.stream(12, 9), 5_000)
    np.testing.assert_array_equal(member_mask(rfs, pts @ rot.T),
                                  member_mask(fs, pts))


def test_density_estimate_vs_bound(fs):
    bound = density_lower_bound(fs.spec.n, fs.phi, fs.lam)
    p, se = mc_density(fs, 200_000, rngmod.stream(13, 10))
    assert p >= bound - 3.0 * se
    assert 0.0 < p < 1.0
    assert se < 0.005


def test_density_bound_matches_oracle_helper():
    got = density_lower_bound(2, 0.3881395153701888, 0.216719438678058)
    assert got == pytest.approx(oracles.HEADLINE["density_bound_inner"], rel=1e-10)
    assert got == pytest.approx(
        float(oracles.mp_density_bound(2, 0.3881395153701888, 0.216719438678058)),
        rel=1e-12)


def test_density_bound_degenerates_at_quarter_pi():
    with pytest.warns(UserWarning):
        assert density_lower_bound(2, math.pi / 4.0, 0.5) == 0.0
    with pytest.raises(DomainError):
        density_lower_bound(2, 0.3, 0.0)
