import math

import numpy as np
import pytest

from chromasphere import rng as rngmod
from chromasphere.covering import (CoverInstance, cover_count_bound,
                                   cover_count_bound_log, default_cover_delta,
                                   edge_size_bound, greedy_cover_matrix,
                                   haar_rotation_check, net_half_angle,
                                   rotated_membership, sample_edges,
                                   unit_chord_pairs)
from chromasphere.errors import (DomainError, IncompleteCoverError,
                                 InvalidParameterError)
from chromasphere.forbidden import (BuildStrategy, build_packing,
                                    make_forbidden, member_mask)
from chromasphere.geometry import SphereSpec, random_points, random_rotations
from chromasphere.parameters import solve_params

import oracles


def _naive_greedy(edges):
    """Reference greedy: recompute every gain from scratch each round."""
    edges = np.asarray(edges, dtype=bool)
    uncovered = np.ones(edges.shape[1], dtype=bool)
    chosen = []
    while uncovered.any():
        gains = (edges & uncovered).sum(axis=1)
        pick = int(np.argmax(gains))
        if gains[pick] == 0:
            raise IncompleteCoverError(np.flatnonzero(uncovered))
        chosen.append(pick)
        uncovered &= ~edges[pick]
    return chosen


def test_greedy_hand_instance_and_tie_break():
    edges = np.array([
        [1, 1, 0, 0],
        [0, 0, 1, 1],
        [1, 1, 1, 0],  # also gain 3 on the first pick, but higher index
        [0, 1, 1, 0],
    ], dtype=bool)
    assert greedy_cover_matrix(edges) == [2, 1]
    # exact tie between rows 0 and 2 once column order flips the gains
    tie = np.array([[1, 1, 0], [1, 1, 0], [0, 0, 1]], dtype=bool)
    assert greedy_cover_matrix(tie) == [0, 2]


@pytest.mark.parametrize("seed", range(10))
def test_greedy_incremental_gains_match_recompute(seed):
    rng = np.random.default_rng(seed)
    edges = rng.random((15, 40)) < 0.25
    edges[0] |= ~edges.any(axis=0)  # force coverability
    assert greedy_cover_matrix(edges) == _naive_greedy(edges)


def test_greedy_reports_uncovered_columns():
    edges = np.array([[1, 0, 0], [1, 1, 0]], dtype=bool)
    with pytest.raises(IncompleteCoverError) as err:
        greedy_cover_matrix(edges)
    assert list(err.value.uncovered) == [2]
    with pytest.raises(IncompleteCoverError):
        greedy_cover_matrix(np.zeros((0, 3), dtype=bool))
    assert greedy_cover_matrix(np.zeros((0, 0), dtype=bool)) == []


def test_net_half_angle_formula_and_domain():
    lam, delta, phi = 0.35, 0.36, 0.38
    beta = net_half_angle(lam, delta, phi)
    assert math.sin(2.0 * beta) == pytest.approx(lam * delta * math.sin(phi),
                                                 abs=1e-15)
    with pytest.raises(DomainError):
        net_half_angle(0.0, delta, phi)


def test_default_cover_delta_matches_oracle():
    assert default_cover_delta(2) == pytest.approx(oracles.HEADLINE["delta_cov"],
                                                   abs=1e-15)
    assert default_cover_delta(2) == pytest.approx(1.0 / (4.0 * math.log(2.0)),
                                                   abs=1e-15)
    # clamp keeps tiny dimensions from exploding the fraction
    assert default_cover_delta(100) < 0.9
    with pytest.raises(DomainError):
        default_cover_delta(1)


def test_edge_size_bound_formula():
    n, phi, beta, gp = 2, 0.38, 0.01, 0.3
    want = (1.0 + gp / beta) ** n * math.sqrt(2.0 * math.pi * 3) / math.sin(phi) ** n
    assert edge_size_bound(n, phi, beta, gp) == pytest.approx(want, rel=1e-15)


def test_cover_count_bound_log_consistency():
    p = solve_params(2.0)
    lam = 0.95 * p.lambda0
    lg = cover_count_bound_log(2, p.phi, lam)
    assert cover_count_bound(2, p.phi, lam) == pytest.approx(math.exp(lg), rel=1e-12)
    assert lg > 0.0
    # degenerate cap angle pi/4 pushes the bound to infinity
    assert cover_count_bound_log(2, math.pi / 4.0, 0.3) == math.inf
    with pytest.raises(DomainError):
        cover_count_bound_log(2, p.phi, lam, delta=1.5)


@pytest.fixture(scope="module")
def small_instance():
    spec = SphereSpec(2, 2.0)
    p = solve_params(2.0)
    lam = 0.95 * p.lambda0
    delta = default_cover_delta(2)
    quick = BuildStrategy(clean_run=2_000)
    packing = build_packing(spec, p.phi, rngmod.stream(21, rngmod.PACKING), quick)
    fs_outer = make_forbidden(packing, lam)
    fs_inner = make_forbidden(packing, (1.0 - delta) * lam)
    beta = net_half_angle(lam, delta, p.phi)
    net = build_packing(spec, beta, rngmod.stream(21, rngmod.NET),
                        BuildStrategy(clean_run=4_000))
    return CoverInstance(net=net, fs_outer=fs_outer, fs_inner=fs_inner,
                         delta=delta, beta=beta)


def test_cover_instance_validates_coefficients(small_instance):
    ci = small_instance
    with pytest.raises(InvalidParameterError):
        CoverInstance(net=ci.net, fs_outer=ci.fs_outer, fs_inner=ci.fs_outer,
                      delta=ci.delta, beta=ci.beta)
    wrong = make_forbidden(ci.fs_outer.packing, 0.5 * ci.fs_outer.lam)
    with pytest.raises(InvalidParameterError):
        CoverInstance(net=ci.net, fs_outer=ci.fs_outer, fs_inner=wrong,
                      delta=ci.delta, beta=ci.beta)


def test_rotated_membership_matches_manual_loop(small_instance):
    fs = small_instance.fs_inner
    spec = fs.spec
    rots = random_rotations(spec, rngmod.stream(22, 1), 5)
    pts = random_points(spec, rngmod.stream(22, 2), 200)
    got = rotated_membership(fs, rots, pts)
    for i, a in enumerate(rots):
        manual = member_mask(fs, pts @ a)  # rows (A^T p)^T = p^T A
        np.testing.assert_array_equal(got[i], manual)


def test_sample_edges_grows_instance(small_instance):
    ci = sample_edges(small_instance, 32, rngmod.stream(23, 3))
    assert ci.rotations.shape == (32, 3, 3)
    assert ci.edges.shape == (32, len(ci.net))
    # each edge row is the inner-copy membership of the net points
    row = rotated_membership(ci.fs_inner, ci.rotations[:1], ci.net.centers)[0]
    np.testing.assert_array_equal(ci.edges[0], row)
    # the original instance is untouched
    assert small_instance.edges.shape[0] == 0


def test_haar_rotation_check_consistent(small_instance):
    fs = small_instance.fs_outer
    w = fs.spec.R * np.array([0.0, 0.0, 1.0])
    rep = haar_rotation_check(fs, w, 3_000, rngmod.stream(24, 4),
                              density_samples=60_000)
    assert rep["ok"]
    assert rep["difference"] <= 3.0 * rep["combined_se"]
    assert 0.0 < rep["rotation_fraction"] < 1.0


def test_unit_chord_pairs_exact():
    spec = SphereSpec(2, 2.0)
    p, q = unit_chord_pairs(spec, 500, rngmod.stream(25, 5))
    np.testing.assert_allclose(np.linalg.norm(p, axis=1), 2.0, rtol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(q, axis=1), 2.0, rtol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(p - q, axis=1), 1.0, atol=1e-12)
    # a different chord length is honored too
    p, q = unit_chord_pairs(spec, 100, rngmod.stream(25, 6), chord=0.5)
    np.testing.assert_allclose(np.linalg.norm(p - q, axis=1), 0.5, atol=1e-12)


# ---------------------------------------------------------------------------
# end-to-end coloring invariants (shared session run)
# ---------------------------------------------------------------------------

def test_coloring_covers_random_points(sphere_run):
    coloring = sphere_run["coloring"]
    pts = random_points(coloring.spec, rngmod.stream(99, 1), 20_000)
    colors = coloring.color_of(pts)
    assert (colors >= 0).all()
    assert colors.max() < coloring.color_count


def test_coloring_mode_and_counts(sphere_run):
    coloring = sphere_run["coloring"]
    rep = sphere_run["report"]
    assert coloring.mode == "union"  # R = 2 sits in the gapped regime
    assert coloring.color_count == len(coloring.rotations)
    assert rep["color_count"] == coloring.color_count
    assert len(coloring.rotations) == \
        coloring.report["cover_size"] + coloring.report["healed"]


def test_coloring_pool_bookkeeping(sphere_run):
    coloring = sphere_run["coloring"]
    chosen = list(coloring.chosen)
    assert len(set(chosen)) == len(chosen)
    assert len(chosen) == len(coloring.rotations)
    np.testing.assert_array_equal(coloring.rotations,
                                  coloring.pool_rotations[chosen])


def test_coloring_transfer_clean(sphere_run):
    tr = sphere_run["coloring"].report["transfer"]
    assert tr["ok"]
    assert tr["violations"] == 0
    assert tr["samples"] > 0
