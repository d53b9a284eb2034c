"""Rotation covers: from an avoiding set to a full sphere coloring.

A fine net (maximal 2 beta-separated set, sin 2 beta = lam * delta * sin phi)
is covered greedily by rotated copies of the safety-shrunk avoiding set
(coefficient (1 - delta) * lam); covering the net with the shrunk copies
forces covering of the whole sphere by the same rotations applied to the
full-coefficient set — that transfer is deterministic, and is re-verified by
sampling here.  Color classes are the rotated copies in greedy pick order
("union" mode), or individual (rotation, piece) pairs when cross-piece
separation is below the forbidden distance ("percap" mode, used for small
radii and clamped shells).

The number of rotations the greedy cover needs is within 1 + ln(max edge
size) of the fractional cover optimum; cover_count_bound evaluates the fully
explicit version of that bound from the closed-form density and edge-size
estimates (in log space, since it is astronomically large for big n).
"""

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import rng as rngmod
from .errors import (DomainError, IncompleteCoverError, InvalidParameterError,
                     StateError)
from .forbidden import (BuildStrategy, CapPacking, build_packing,
                        make_forbidden, member_mask, mc_density)
from .geometry import SphereSpec, random_points, random_rotations
from .parameters import (LARGE_R, REGIME_THRESHOLD, RadiusParams,
                         default_small_phi, forbidden_gap_margins,
                         small_radius_params, solve_params)

_EDGE_CHUNK = 2_000_000  # max (rotations x net points) handled at once


def default_cover_delta(n):
    """Safety-shrink fraction 1/(2 n ln n), clamped into (0, 0.9]."""
    if n < 2:
        raise DomainError("dimension must be at least 2")
    return min(1.0 / (2.0 * n * math.log(n)), 0.9)


def net_half_angle(lam, delta, phi):
    """beta with sin 2 beta = lam * delta * sin phi."""
    s = lam * delta * math.sin(phi)
    if not 0.0 < s < 1.0:
        raise DomainError("lam * delta * sin phi must lie in (0, 1)")
    return 0.5 * math.asin(s)


def build_net(spec, beta, rng, strategy=None):
    """Maximal 2 beta-separated net (same greedy build as cap packings)."""
    return build_packing(spec, beta, rng, strategy)


def edge_size_bound(n, phi, beta, gamma_prime):
    """Explicit upper bound (1 + gamma'/beta)^n sqrt(2 pi (n+1)) / sin^n phi
    on the number of net points one rotated copy can meet."""
    return ((1.0 + gamma_prime / beta) ** n
            * math.sqrt(2.0 * math.pi * (n + 1)) / math.sin(phi) ** n)


@dataclass
class CoverInstance:
    """Net + avoiding sets + sampled rotations and their induced edges."""

    net: CapPacking
    fs_outer: object
    fs_inner: object
    delta: float
    beta: float
    rotations: np.ndarray = field(default=None)
    edges: np.ndarray = field(default=None)  # bool, (rotations, |net|)

    def __post_init__(self):
        d = self.net.spec.dim
        if self.rotations is None:
            self.rotations = np.zeros((0, d, d))
        if self.edges is None:
            self.edges = np.zeros((0, len(self.net)), dtype=bool)
        lam_in, lam_out = self.fs_inner.lam, self.fs_outer.lam
        if not lam_in < lam_out:
            raise InvalidParameterError("inner coefficient must be strictly below outer")
        if abs(lam_in - (1.0 - self.delta) * lam_out) > 1e-12:
            raise InvalidParameterError("inner coefficient must equal (1 - delta) * outer")


def rotated_membership(fs, rotations, points):
    """Boolean matrix M[i, j] = (rotations[i]^-1 points[j]) in fs."""
    pts = np.atleast_2d(points) / fs.spec.R
    m, w = len(rotations), len(pts)
    out = np.zeros((m, w), dtype=bool)
    if m == 0 or w == 0:
        return out
    step = max(1, _EDGE_CHUNK // max(w, 1))
    for s in range(0, m, step):
        a = rotations[s:s + step]
        # rows of (A^T p) for every rotation/point combination
        back = np.einsum("cji,wj->cwi", a, pts)
        flat = back.reshape(-1, pts.shape[1]) * fs.spec.R
        out[s:s + len(a)] = member_mask(fs, flat).reshape(len(a), w)
    return out


def sample_edges(ci, m, rng):
    """Append m Haar rotations and their edges; returns the grown instance."""
    spec = ci.net.spec
    new_rot = random_rotations(spec, rng, m)
    new_edges = rotated_membership(ci.fs_inner, new_rot, ci.net.centers)
    return replace(ci,
                   rotations=np.concatenate([ci.rotations, new_rot]),
                   edges=np.concatenate([ci.edges, new_edges]))


@dataclass
class CoverResult:
    chosen: list  # rotation indices in greedy pick order
    cover_size: int
    verified_net: bool
    verified_sphere_samples: int = 0
    violations: int = 0


def greedy_cover_matrix(edges):
    """Greedy max-gain cover of the columns of a boolean matrix.

    Returns the chosen row indices in pick order; ties break toward the
    lowest row index.  Raises IncompleteCoverError (carrying the uncovered
    column ids) when the rows cannot cover everything.
    """
    edges = np.asarray(edges, dtype=bool)
    m, k = edges.shape
    uncovered = np.ones(k, dtype=bool)
    chosen = []
    if m == 0:
        if k == 0:
            return chosen
        raise IncompleteCoverError(np.flatnonzero(uncovered))
    gains = edges.sum(axis=1)  # kept equal to |edge ∩ uncovered| incrementally
    while uncovered.any():
        pick = int(np.argmax(gains))  # argmax returns the first maximizer
        if gains[pick] == 0:
            raise IncompleteCoverError(np.flatnonzero(uncovered))
        chosen.append(pick)
        newly = edges[pick] & uncovered
        gains = gains - edges[:, newly].sum(axis=1)
        uncovered &= ~edges[pick]
    return chosen


def greedy_cover(ci):
    """Greedy cover of the net by the sampled rotated copies."""
    chosen = greedy_cover_matrix(ci.edges)
    return CoverResult(chosen=chosen, cover_size=len(chosen), verified_net=True)


def transfer_cover(ci, result, samples, rng):
    """Sampled check that the chosen rotations' full-coefficient copies cover
    the whole sphere (the deterministic transfer re-verified empirically).

    Violations are reported, never raised."""
    if not result.verified_net:
        raise StateError("transfer refused: net cover not verified")
    spec = ci.net.spec
    pts = random_points(spec, rng, samples)
    uncovered = np.ones(samples, dtype=bool)
    for i in result.chosen:
        if not uncovered.any():
            break
        live = np.flatnonzero(uncovered)
        hit = rotated_membership(ci.fs_outer, ci.rotations[i][None], pts[live])[0]
        uncovered[live[hit]] = False
    v = int(uncovered.sum())
    return {"samples": int(samples), "violations": v, "ok": v == 0}


# ---------------------------------------------------------------------------
# explicit count bound
# ---------------------------------------------------------------------------

def cover_count_bound_log(n, phi, lam, delta=None):
    """Natural log of the explicit rotation-count bound.

    The bound is (1/rho'') * (1 + ln(edge-size bound)) with rho'' the
    closed-form density at coefficient lam (1 - delta):

        lam^-n (1-delta)^-n sqrt((1 - lam^2 (1-delta)^2 sin^2 2 phi)
                                 / (1 - sin^2 2 phi))
        * (1 + n ln(1 + gamma'/beta) - n ln sin phi + ln(2 pi (n+1)) / 2),

    with sin gamma' = lam (1-delta) sin 2 phi and sin 2 beta = lam delta sin phi.
    """
    if delta is None:
        delta = default_cover_delta(n)
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    s2p = math.sin(2.0 * phi)
    if s2p >= 1.0:
        return math.inf  # degenerate cap angle pi/4
    lam2 = lam * (1.0 - delta)
    gamma_p = math.asin(lam2 * s2p)
    beta = net_half_angle(lam, delta, phi)
    log_inv_density = (-n * math.log(lam2)
                       + 0.5 * math.log((1.0 - (lam2 * s2p) ** 2) / (1.0 - s2p * s2p)))
    bracket = (1.0 + n * math.log(1.0 + gamma_p / beta)
               - n * math.log(math.sin(phi))
               + 0.5 * math.log(2.0 * math.pi * (n + 1)))
    return log_inv_density + math.log(bracket)


def cover_count_bound(n, phi, lam, delta=None):
    """The explicit rotation-count bound itself (inf when it overflows)."""
    lg = cover_count_bound_log(n, phi, lam, delta)
    try:
        return math.exp(lg)
    except OverflowError:
        return math.inf


def haar_rotation_check(fs, w, m, rng, density_samples=200_000):
    """Empirical check that the hit rate of Haar rotations matches density.

    Fraction of m Haar rotations A with A w in the set, against the
    Monte-Carlo density, within 3 combined standard errors."""
    spec = fs.spec
    w = np.asarray(w, dtype=float)
    hits = 0
    step = max(1, _EDGE_CHUNK // 10)
    done = 0
    while done < m:
        c = min(step, m - done)
        rots = random_rotations(spec, rng, c)
        moved = np.einsum("cij,j->ci", rots, w)
        hits += int(np.count_nonzero(member_mask(fs, moved)))
        done += c
    frac = hits / m
    se_rot = math.sqrt(max(frac * (1.0 - frac), 1.0 / m) / m)
    dens, se_dens = mc_density(fs, density_samples, rng)
    se = math.hypot(se_rot, se_dens)
    return {
        "rotation_fraction": frac, "rotation_se": se_rot,
        "density": dens, "density_se": se_dens,
        "difference": abs(frac - dens), "combined_se": se,
        "ok": abs(frac - dens) <= 3.0 * se,
    }


# ---------------------------------------------------------------------------
# end-to-end sphere coloring
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SphereColorConfig:
    seed: int = 0
    lambda_fraction: float = 0.95
    eps_small: float = 0.01          # SmallR regularization
    phi_small: Optional[float] = None  # default pi/4 - 1/n
    delta_cov: Optional[float] = None  # default 1/(2 n ln n)
    rotation_batch: int = 256
    max_rotation_rounds: int = 8
    packing_strategy: BuildStrategy = BuildStrategy()
    net_strategy: BuildStrategy = BuildStrategy()
    transfer_samples: int = 100_000
    heal: bool = True


@dataclass
class SphereColoring:
    """A concrete sphere coloring: rotations in pick order + lookup rule.

    In union mode the color of p is the first chosen rotation whose
    full-coefficient copy contains p, offset by color_base.  In percap mode
    the piece index refines that: color = base + pick * pieces + piece."""

    spec: SphereSpec
    params: RadiusParams
    lam: float
    delta_cov: float
    mode: str
    fs_outer: object
    fs_inner: object
    net: CapPacking
    rotations: np.ndarray  # (c, d, d), greedy pick order (healing appended)
    color_base: int = 0
    report: dict = field(default_factory=dict)
    # full sampled rotation pool (healing appended at the end) and the picked
    # indices into it, in pick order; rotations == pool_rotations[chosen]
    pool_rotations: np.ndarray = field(default=None, repr=False)
    chosen: tuple = ()

    @property
    def piece_count(self):
        return len(self.fs_outer.packing)

    @property
    def color_count(self):
        c = len(self.rotations)
        return c if self.mode == "union" else c * self.piece_count

    def color_of(self, points):
        """Colors of the given sphere points; -1 marks an uncovered point
        (not expected after healing; counted by certificates)."""
        pts = np.atleast_2d(points)
        colors = np.full(len(pts), -1, dtype=np.int64)
        uncolored = np.ones(len(pts), dtype=bool)
        for i, rot in enumerate(self.rotations):
            if not uncolored.any():
                break
            live = np.flatnonzero(uncolored)
            back = (pts[live] / self.spec.R) @ rot  # rows of A^T p
            hit = member_mask(self.fs_outer, back * self.spec.R)
            if not hit.any():
                continue
            sel = live[hit]
            if self.mode == "union":
                colors[sel] = self.color_base + i
            else:
                from .forbidden import nearest_centers
                piece, _ = nearest_centers(self.fs_outer.packing, back[hit] * self.spec.R)
                colors[sel] = self.color_base + i * self.piece_count + piece
            uncolored[sel] = False
        return colors


def _coloring_mode(params, lam):
    if params.regime == LARGE_R:
        _, t_sep = forbidden_gap_margins(params.R, params.phi, lam)
        return "union" if t_sep > 0.0 else "percap"
    return "percap"


def build_sphere_coloring(spec, config, phi=None, lam=None, mode=None,
                          stream_prefix=(), params=None):
    """Run the full pipeline on one sphere; returns a SphereColoring.

    phi / lam / mode / params may be supplied by callers that manage their
    own schedules (the ball coloring does); otherwise they follow from the
    radius regime and config.
    """
    if params is None:
        if spec.R > REGIME_THRESHOLD:
            params = solve_params(spec.R)
        else:
            phi_s = config.phi_small if config.phi_small is not None \
                else default_small_phi(spec.n, spec.R, config.eps_small)
            params = small_radius_params(spec.R, phi_s, config.eps_small)
    if phi is None:
        phi = params.phi
    if lam is None:
        lam = config.lambda_fraction * params.lambda0 \
            if params.regime == LARGE_R else params.lambda0
    if mode is None:
        mode = _coloring_mode(params, lam)
    delta = config.delta_cov if config.delta_cov is not None else default_cover_delta(spec.n)

    def _stream(*path):
        return rngmod.stream(config.seed, *stream_prefix, *path)

    packing = build_packing(spec, phi, _stream(rngmod.PACKING), config.packing_strategy)
    fs_outer = make_forbidden(packing, lam)
    fs_inner = make_forbidden(packing, (1.0 - delta) * lam)
    beta = net_half_angle(lam, delta, phi)
    net = build_net(spec, beta, _stream(rngmod.NET), config.net_strategy)
    ci = CoverInstance(net=net, fs_outer=fs_outer, fs_inner=fs_inner,
                       delta=delta, beta=beta)

    rot_rng = _stream(rngmod.ROTATIONS)
    batch = config.rotation_batch
    result = None
    for _ in range(config.max_rotation_rounds):
        ci = sample_edges(ci, batch, rot_rng)
        try:
            result = greedy_cover(ci)
            break
        except IncompleteCoverError:
            batch = len(ci.rotations)  # double the total on each retry
    if result is None:
        raise IncompleteCoverError([], "net cover incomplete after all rotation rounds")

    chosen_rots = ci.rotations[result.chosen]
    pool = ci.rotations
    chosen_idx = [int(i) for i in result.chosen]

    # sampled transfer verification; healing appends covering rotations for
    # any uncovered sample (deterministic under the seed)
    tr = {"samples": 0, "violations": 0, "ok": True, "healed": 0}
    if config.transfer_samples > 0:
        pts = random_points(spec, _stream(rngmod.TRANSFER), config.transfer_samples)
        uncovered = np.ones(len(pts), dtype=bool)
        for rot in chosen_rots:
            if not uncovered.any():
                break
            live = np.flatnonzero(uncovered)
            hit = rotated_membership(fs_outer, rot[None], pts[live])[0]
            uncovered[live[hit]] = False
        healed = []
        if config.heal and uncovered.any():
            heal_rng = _stream(rngmod.HEAL)
            guard = 0
            while uncovered.any():
                cand = random_rotations(spec, heal_rng, 64)
                live = np.flatnonzero(uncovered)
                hits = rotated_membership(fs_outer, cand, pts[live])
                gains = hits.sum(axis=1)
                best = int(np.argmax(gains))
                if gains[best] > 0:
                    healed.append(cand[best])
                    uncovered[live[hits[best]]] = False
                guard += 1
                if guard > 10_000:
                    raise StateError("healing failed to converge")
            if healed:
                chosen_rots = np.concatenate([chosen_rots, np.asarray(healed)])
                chosen_idx.extend(range(len(pool), len(pool) + len(healed)))
                pool = np.concatenate([pool, np.asarray(healed)])
        tr = {"samples": int(config.transfer_samples),
              "violations": int(uncovered.sum()),
              "ok": not uncovered.any(),
              "healed": len(healed) if config.heal else 0}

    edge_sizes = ci.edges.sum(axis=1)
    density_proxy = float(edge_sizes.mean()) / len(net) if len(ci.edges) else 0.0
    gamma_p = math.asin((1.0 - delta) * lam * math.sin(2.0 * phi))
    report = {
        "regime": params.regime,
        "mode": mode,
        "phi": phi,
        "lambda": lam,
        "lambda_inner": (1.0 - delta) * lam,
        "delta_cov": delta,
        "beta": beta,
        "packing_size": len(packing),
        "net_size": len(net),
        "rotations_sampled": int(len(ci.rotations)),
        "cover_size": int(result.cover_size),
        "healed": tr.get("healed", 0),
        "color_count": 0,  # filled below
        "edge_size_max": int(edge_sizes.max()) if len(edge_sizes) else 0,
        "edge_size_bound": edge_size_bound(spec.n, phi, beta, gamma_p),
        "tau_star_proxy": (1.0 / density_proxy) if density_proxy > 0 else math.inf,
        "cover_count_bound": cover_count_bound(spec.n, phi, lam, delta),
        "transfer": tr,
    }
    coloring = SphereColoring(
        spec=spec, params=params, lam=lam, delta_cov=delta, mode=mode,
        fs_outer=fs_outer, fs_inner=fs_inner, net=net,
        rotations=chosen_rots, report=report,
        pool_rotations=pool, chosen=tuple(chosen_idx),
    )
    report["color_count"] = coloring.color_count
    return coloring


def unit_chord_pairs(spec, count, rng, chord=1.0):
    """Pairs of sphere points at exactly the given chord distance.

    The second point is the first moved by the exact angle along a random
    tangent direction, so the constructed chord is exact to rounding."""
    theta = 2.0 * math.asin(chord / (2.0 * spec.R))
    p = random_points(spec, rng, count)
    t = rng.standard_normal((count, spec.dim))
    p_unit = p / spec.R
    t -= p_unit * np.einsum("ij,ij->i", t, p_unit)[:, None]
    t /= np.linalg.norm(t, axis=1)[:, None]
    q = math.cos(theta) * p + math.sin(theta) * spec.R * t
    return p, q
