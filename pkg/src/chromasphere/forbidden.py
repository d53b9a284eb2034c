"""Saturated cap packings, shrunken Voronoi pieces, and their certificates.

The distance-avoiding set on a sphere is built in three steps: greedily grow
a saturated packing of caps of angular radius phi (pairwise center separation
> 2 phi, no room left for another center), take the spherical Voronoi cells
of the centers, and shrink every cell toward its own center by the sine rule
sin(theta') = lambda * sin(theta).  The union of shrunken cells has piece
diameter at most D = 2 R lambda sin 2 phi and cross-piece separation at least
S = 2 R sin(phi - arcsin(lambda sin phi)); for lambda below the critical
coefficient the open chord interval (D, S) straddles the forbidden distance.

Membership in the union is decided by inverting the shrink map: p belongs to
the shrunken cell of x iff p lies within gamma = arcsin(lambda sin 2 phi) of
x and the unshrunk preimage of p lands in x's Voronoi cell.  Whenever
gamma < phi (always the case for the parameter ranges used here; asserted at
construction) the only candidate x is the nearest center, which makes batch
membership two matrix products.
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (DomainError, InvalidParameterError, NoPreimageError,
                     StateError)
from .geometry import SphereSpec, cap_measure, random_points

_TINY = 1e-15


# ---------------------------------------------------------------------------
# greedy saturated builds (used for both packings and nets)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BuildStrategy:
    """Knobs of the greedy saturated build.

    pool: number of bulk candidates processed before the counted phase
        ("auto" sizes it at ~4 / Theta(2 phi), enough to near-saturate in one
        vectorized sweep; 0 disables the prefix).
    batch: candidates drawn per round.
    clean_run: stop after this many consecutive rejections.  A rejected
        candidate is exactly a uniform probe landing within 2 phi of an
        accepted center, so the final clean run doubles as the saturation
        certificate with that many probes.
    """

    pool: object = "auto"
    batch: int = 2048
    clean_run: int = 100_000
    max_candidates: int = 50_000_000


@dataclass(frozen=True)
class SaturationReport:
    clean_run: int
    candidates: int
    pool_candidates: int
    insertions_after_pool: int

    def as_dict(self):
        return {
            "clean_run": self.clean_run, "candidates": self.candidates,
            "pool_candidates": self.pool_candidates,
            "insertions_after_pool": self.insertions_after_pool,
        }


@dataclass
class CapPacking:
    """Saturated packing: centers pairwise > 2 phi apart, probes all within 2 phi."""

    spec: SphereSpec
    phi: float
    centers: np.ndarray  # (k, n+1), rows of norm R
    saturation: Optional[SaturationReport] = None
    _units: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return len(self.centers)

    @property
    def units(self):
        if self._units is None:
            self._units = self.centers / self.spec.R
        return self._units


# float32 feasibility screening: unit-vector dots carry absolute error well
# below 1e-6 in single precision, so anything this far from the threshold is
# decided there and only the sliver near it is re-checked in float64 (the
# accept/reject decisions are exactly the float64 ones).
_SCREEN_GUARD = 1e-5


def _greedy_pass(units_new, accepted, accepted32, cos_sep, consec, stop_at):
    """Sequential greedy insertion of one candidate batch.

    accepted is a python list of unit vectors (mutated); accepted32 mirrors
    it as float32 rows for the screening matmul.  Returns the updated
    consecutive-rejection count, or -1 once it reaches stop_at (processing
    halts there; remaining candidates are discarded).
    """
    b = len(units_new)
    if accepted:
        m32 = (units_new.astype(np.float32) @ np.asarray(accepted32).T).max(axis=1)
        feasible = m32 < cos_sep - _SCREEN_GUARD
        unsure = np.flatnonzero(np.abs(m32 - cos_sep) <= _SCREEN_GUARD)
        if len(unsure):
            arr = np.asarray(accepted)
            feasible[unsure] = (units_new[unsure] @ arr.T).max(axis=1) < cos_sep
    else:
        feasible = np.ones(b, dtype=bool)
    idxs = np.flatnonzero(feasible)
    if len(idxs) == 0:
        consec += b
        return -1 if consec >= stop_at else consec
    pos_prev = -1
    buf = np.empty((len(idxs), units_new.shape[1]))  # within-batch inserts
    nb = 0
    for i in idxs:
        consec += i - pos_prev - 1  # candidates rejected against older centers
        pos_prev = i
        if consec >= stop_at:
            return -1
        cand = units_new[i]
        if nb and (buf[:nb] @ cand).max() >= cos_sep:
            consec += 1
        else:
            buf[nb] = cand
            nb += 1
            accepted.append(cand)
            accepted32.append(cand.astype(np.float32))
            consec = 0
        if consec >= stop_at:
            return -1
    consec += b - pos_prev - 1
    return -1 if consec >= stop_at else consec


def build_packing(spec, phi, rng, strategy=None):
    """Greedy saturated cap packing with separation angle 2 phi.

    Candidates are drawn uniformly from a seeded stream and accepted exactly
    when they clear every previously accepted center by more than 2 phi; the
    build stops after `clean_run` consecutive rejections, which certifies
    saturation on that many uniform probes.  Deterministic for a fixed
    generator state.
    """
    if not 0.0 < phi < math.pi / 4.0:
        raise DomainError(f"separation half-angle must lie in (0, pi/4), got {phi}")
    strategy = strategy or BuildStrategy()
    cos_sep = math.cos(2.0 * phi)
    accepted = []
    accepted32 = []

    pool = strategy.pool
    if pool == "auto":
        pool = min(int(4.0 / cap_measure(spec, min(2.0 * phi, math.pi))) + 1, 2_000_000)
    pool = int(pool)
    total = 0
    for start in range(0, pool, strategy.batch):
        m = min(strategy.batch, pool - start)
        cand = random_points(spec, rng, m) / spec.R
        total += m
        _greedy_pass(cand, accepted, accepted32, cos_sep,
                     consec=-10**18, stop_at=10**18)

    size_after_pool = len(accepted)
    consec = 0
    while consec >= 0:
        cand = random_points(spec, rng, strategy.batch) / spec.R
        total += strategy.batch
        consec = _greedy_pass(cand, accepted, accepted32, cos_sep,
                              consec, strategy.clean_run)
        if total > strategy.max_candidates:
            raise StateError("saturation not reached within the candidate budget")

    report = SaturationReport(
        clean_run=strategy.clean_run, candidates=total, pool_candidates=pool,
        insertions_after_pool=len(accepted) - size_after_pool,
    )
    units = np.asarray(accepted)
    return CapPacking(spec=spec, phi=phi, centers=units * spec.R,
                      saturation=report, _units=units)


def min_pairwise_angle(packing, block=1024):
    """Exact minimum angular distance over all center pairs."""
    u = packing.units
    k = len(u)
    if k < 2:
        return math.pi
    best = -1.0
    for s in range(0, k, block):
        d = u[s:s + block] @ u.T
        for i in range(d.shape[0]):
            d[i, s + i] = -2.0  # mask self
        best = max(best, float(d.max()))
    return float(np.arccos(np.clip(best, -1.0, 1.0)))


def nearest_centers(packing, points):
    """(indices, angles) of the nearest center for each row of `points`.

    Ties break toward the lowest index (the argmax of the dot products
    returns the first maximizer).
    """
    if len(packing) == 0:
        raise StateError("packing has no centers")
    p = np.atleast_2d(points) / packing.spec.R
    dots = p @ packing.units.T
    idx = np.argmax(dots, axis=1)
    best = dots[np.arange(len(p)), idx]
    return idx, np.arccos(np.clip(best, -1.0, 1.0))


def nearest_center(packing, p):
    idx, _ = nearest_centers(packing, np.asarray(p)[None, :])
    return int(idx[0])


# ---------------------------------------------------------------------------
# the shrink map and its inverse
# ---------------------------------------------------------------------------

def _split_about_pole(spec, pole, points):
    """cosines, sines and unit tangent directions of points as seen from pole."""
    x = np.asarray(pole, dtype=float) / spec.R
    p = np.atleast_2d(points) / spec.R
    c = np.clip(p @ x, -1.0, 1.0)
    s = np.sqrt(np.maximum(0.0, 1.0 - c * c))
    with np.errstate(invalid="ignore", divide="ignore"):
        t = (p - c[:, None] * x) / s[:, None]
    return x, c, s, t


def shrink(spec, pole, lam, a):
    """Pull `a` toward `pole` along the great circle: sin(theta') = lam sin(theta).

    Defined on the closed half-sphere around the pole; fixes the pole; keeps
    the tangential direction.
    """
    if not 0.0 < lam <= 1.0:
        raise DomainError(f"shrink coefficient must lie in (0, 1], got {lam}")
    x, c, s, t = _split_about_pole(spec, pole, a)
    if c[0] < -1e-12:
        raise DomainError("point lies outside the closed half-sphere of the pole")
    if s[0] < _TINY:
        return np.asarray(pole, dtype=float).copy()
    s2 = lam * float(s[0])
    c2 = math.sqrt(1.0 - s2 * s2)
    return spec.R * (c2 * x + s2 * t[0])


def unshrink(spec, pole, lam, a_prime):
    """Inverse of shrink on the half-sphere; raises NoPreimageError when
    the tangential radius of a_prime exceeds lam * R."""
    if not 0.0 < lam <= 1.0:
        raise DomainError(f"shrink coefficient must lie in (0, 1], got {lam}")
    x, c, s, t = _split_about_pole(spec, pole, a_prime)
    if s[0] < _TINY:
        return np.asarray(pole, dtype=float).copy()
    s2 = float(s[0]) / lam
    if s2 > 1.0 + 1e-12:
        raise NoPreimageError(f"tangential radius {float(s[0]):.6g} R exceeds lam R = {lam:.6g} R")
    s2 = min(s2, 1.0)
    c2 = math.sqrt(1.0 - s2 * s2)
    return spec.R * (c2 * x + s2 * t[0])


# ---------------------------------------------------------------------------
# the avoiding set
# ---------------------------------------------------------------------------

@dataclass
class ForbiddenSet:
    """Union of Voronoi cells shrunk by `lam`; membership oracle included.

    gamma is the circumscribing angular radius of each shrunken piece
    (sin gamma = lam sin 2 phi).  nearest_only records the gamma < phi
    shortcut justification described in the module docstring.
    """

    packing: CapPacking
    lam: float
    gamma: float
    nearest_only: bool

    @property
    def spec(self):
        return self.packing.spec

    @property
    def phi(self):
        return self.packing.phi


def make_forbidden(packing, lam):
    if not 0.0 < lam < 1.0:
        raise DomainError(f"shrink coefficient must lie in (0, 1), got {lam}")
    gamma = math.asin(lam * math.sin(2.0 * packing.phi))
    return ForbiddenSet(packing=packing, lam=lam, gamma=gamma,
                        nearest_only=gamma < packing.phi)


def member_mask(fs, points):
    """Boolean membership of each row of `points` in the shrunken union."""
    pts = np.atleast_2d(points)
    n_pts = len(pts)
    out = np.zeros(n_pts, dtype=bool)
    if fs.nearest_only:
        idx, theta = nearest_centers(fs.packing, pts)
        near = theta <= fs.gamma
        if not near.any():
            return out
        out[near] = _piece_membership(fs, pts[near], idx[near])
        return out
    # generic scan: every center within gamma (+ slack) is a candidate
    units = fs.packing.units
    dots = (pts / fs.spec.R) @ units.T
    cos_g = math.cos(fs.gamma + 1e-12)
    for j in range(len(units)):
        cand = dots[:, j] >= cos_g
        if cand.any():
            out[cand] |= _piece_membership(fs, pts[cand], np.full(int(cand.sum()), j))
    return out


def _piece_membership(fs, pts, piece_idx):
    """Does unshrinking pts toward centers[piece_idx] land in that cell?"""
    spec = fs.spec
    units = fs.packing.units
    p = pts / spec.R
    poles = units[piece_idx]
    c = np.clip(np.einsum("ij,ij->i", p, poles), -1.0, 1.0)
    s = np.sqrt(np.maximum(0.0, 1.0 - c * c))
    res = np.zeros(len(pts), dtype=bool)
    central = s < _TINY
    res[central] = True  # the center itself is in its own (shrunk) cell
    rest = ~central
    if not rest.any():
        return res
    s_in = s[rest] / fs.lam
    ok = s_in <= 1.0  # guaranteed when theta <= gamma, kept as a guard
    s_in = np.minimum(s_in, 1.0)
    c_in = np.sqrt(np.maximum(0.0, 1.0 - s_in * s_in))
    t = (p[rest] - c[rest, None] * poles[rest]) / s[rest, None]
    q = c_in[:, None] * poles[rest] + s_in[:, None] * t
    back_idx = np.argmax(q @ units.T, axis=1)
    res[rest] = ok & (back_idx == piece_idx[rest])
    return res


def contains(fs, p):
    """Single-point membership (see member_mask for the batch form)."""
    return bool(member_mask(fs, np.asarray(p, dtype=float)[None, :])[0])


def sample_members(fs, count, rng, batch=500_000, max_batches=2_000):
    """Rejection-sample `count` uniform points of the shrunken union.

    Returns (points, piece indices).  Uniformity is inherited from the
    uniform sphere proposal.
    """
    got_pts, got_idx, got = [], [], 0
    for _ in range(max_batches):
        pts = random_points(fs.spec, rng, batch)
        mask = member_mask(fs, pts)
        if mask.any():
            sel = pts[mask]
            idx, _ = nearest_centers(fs.packing, sel)
            got_pts.append(sel)
            got_idx.append(idx)
            got += len(sel)
        if got >= count:
            pts = np.concatenate(got_pts)[:count]
            idx = np.concatenate(got_idx)[:count]
            return pts, idx
    raise StateError(f"rejection sampling produced {got}/{count} members; density too low?")


def sample_piece_points(fs, piece, count, rng, batch=4096):
    """Direct sampling inside one shrunken piece (propose in the doubled cap,
    keep proposals whose nearest center is the piece, shrink them in)."""
    spec = fs.spec
    pole = fs.packing.units[piece]
    phi2 = 2.0 * fs.phi
    out = []
    got = 0
    while got < count:
        # uniform in the doubled cap: area element ~ sin(theta) d theta
        u = rng.random(batch)
        ct = 1.0 - u * (1.0 - math.cos(phi2))
        st = np.sqrt(np.maximum(0.0, 1.0 - ct * ct))
        tang = rng.standard_normal((batch, spec.dim))
        tang -= np.outer(tang @ pole, pole)
        tang /= np.linalg.norm(tang, axis=1)[:, None]
        q = spec.R * (ct[:, None] * pole + st[:, None] * tang)
        idx, _ = nearest_centers(fs.packing, q)
        q = q[idx == piece]
        if len(q):
            shrunk = _shrink_batch_same_pole(spec, pole, fs.lam, q)
            out.append(shrunk)
            got += len(shrunk)
    return np.concatenate(out)[:count]


def _shrink_batch_same_pole(spec, pole_unit, lam, points):
    p = points / spec.R
    c = np.clip(p @ pole_unit, -1.0, 1.0)
    s = np.sqrt(np.maximum(0.0, 1.0 - c * c))
    s2 = lam * s
    c2 = np.sqrt(1.0 - s2 * s2)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = (p - c[:, None] * pole_unit) / s[:, None]
    out = spec.R * (c2[:, None] * pole_unit + s2[:, None] * t)
    central = s < _TINY
    if central.any():
        out[central] = spec.R * pole_unit
    return out


def rotate_forbidden(fs, m):
    """The same avoiding set with every center moved by the rotation m."""
    pk = fs.packing
    rotated = CapPacking(spec=pk.spec, phi=pk.phi, centers=pk.centers @ m.T,
                         saturation=pk.saturation)
    return make_forbidden(rotated, fs.lam)


# ---------------------------------------------------------------------------
# certificates and density
# ---------------------------------------------------------------------------

def forbidden_margins(fs):
    """(D, S): piece-diameter bound and cross-piece separation bound, chords."""
    R, phi, lam = fs.spec.R, fs.phi, fs.lam
    d = 2.0 * R * lam * math.sin(2.0 * phi)
    s = 2.0 * R * math.sin(phi - math.asin(lam * math.sin(phi)))
    return d, s


def certify_forbidden(fs, target, pair_samples, rng, tol=1e-9, require_gap=True):
    """Analytic margins plus an empirical pair scan of the avoiding set.

    With require_gap (the above-threshold regime) the margins must straddle
    the target, D < target < S, and the certificate checks that no sampled
    pair of members has chord distance inside [D + tol, S - tol].  Without it
    (small radii / clamped shells, where S < target is expected) only the
    piece-diameter side is binding and cross-piece distances are reported,
    not asserted.
    """
    d_bound, s_bound = forbidden_margins(fs)
    # the gap must be usable, not merely nonempty to rounding: a shrink at
    # exactly the critical coefficient gives D = S = target and proves nothing
    if require_gap and not (d_bound < target - tol and s_bound > target + tol):
        raise InvalidParameterError(
            f"margins do not straddle the target by at least {tol}: "
            f"D = {d_bound}, S = {s_bound}, target = {target}")
    if not require_gap and not d_bound < target - tol:
        raise InvalidParameterError(f"piece diameter {d_bound} reaches the target {target}")

    pts, idx = sample_members(fs, 2 * pair_samples, rng)
    a, b = pts[0::2], pts[1::2]
    ia, ib = idx[0::2], idx[1::2]
    chord = np.linalg.norm(a - b, axis=1)
    same = ia == ib
    in_gap = (chord >= d_bound + tol) & (chord <= s_bound - tol)
    report = {
        "diameter_bound": d_bound,
        "separation_bound": s_bound,
        "target": target,
        "gap_asserted": bool(require_gap),
        "pairs": int(pair_samples),
        "violations_in_gap": int(np.count_nonzero(in_gap)) if require_gap else 0,
        "same_piece_pairs": int(np.count_nonzero(same)),
        "max_same_piece_chord": float(chord[same].max()) if same.any() else 0.0,
        "min_cross_piece_chord": float(chord[~same].min()) if (~same).any() else float("inf"),
    }
    report["same_piece_ok"] = report["max_same_piece_chord"] <= d_bound + tol
    if require_gap:
        report["cross_piece_ok"] = report["min_cross_piece_chord"] >= s_bound - tol
        report["ok"] = (report["violations_in_gap"] == 0 and report["same_piece_ok"]
                        and report["cross_piece_ok"])
    else:
        report["violations_in_gap"] = int(np.count_nonzero(chord[same] >= d_bound + tol))
        report["ok"] = report["same_piece_ok"]
    return report


def boundary_clearance(fs, samples, rng):
    """Angular clearance of sampled piece points from every Voronoi bisector.

    For p in the shrunken piece of center x and any other center y, the
    signed angular distance of p from the bisector great sphere of (x, y) is
    arcsin(<p_hat, n_hat>), n_hat = (x_hat - y_hat)/|x_hat - y_hat|, positive
    on x's side.  The construction guarantees a clearance of at least
    phi - arcsin(lam sin phi) — for every center pair, not only the facets
    actually attained by the cell, since far bisectors are farther still.
    The certificate asserts the sampled minimum against that threshold and
    reports which pairs come close (the active facets).
    """
    threshold = fs.phi - math.asin(fs.lam * math.sin(fs.phi))
    pts, idx = sample_members(fs, samples, rng)
    units = fs.packing.units
    k = len(units)
    min_clear = np.inf
    active = []
    p_unit = pts / fs.spec.R
    for j in range(k):
        sel = idx == j
        if not sel.any():
            continue
        others = np.delete(np.arange(k), j)
        normals = units[j][None, :] - units[others]
        normals /= np.linalg.norm(normals, axis=1)[:, None]
        clear = np.arcsin(np.clip(p_unit[sel] @ normals.T, -1.0, 1.0))
        per_other = clear.min(axis=0)
        min_clear = min(min_clear, float(per_other.min()))
        for o, v in zip(others, per_other):
            if v < threshold + 0.05:
                active.append((int(j), int(o), float(v)))
    return {
        "samples": int(samples),
        "threshold": threshold,
        "min_clearance": float(min_clear),
        "ok": min_clear >= threshold - 1e-9,
        "active_facets": len(active),
        "closest_pairs": sorted(active, key=lambda t: t[2])[:10],
    }


def density_lower_bound(n, phi, lam):
    """Analytic lower bound on the surface density of the shrunken union:
    lam^n sqrt((1 - sin^2 2 phi)/(1 - lam^2 sin^2 2 phi))."""
    s = math.sin(2.0 * phi)
    if not 0.0 < lam * s <= 1.0:
        raise DomainError("need 0 < lam sin 2 phi <= 1")
    if s >= 1.0:
        warnings.warn("cap angle pi/4 degenerates the density bound to 0")
        return 0.0
    return lam ** n * math.sqrt((1.0 - s * s) / (1.0 - (lam * s) ** 2))


def mc_density(fs, samples, rng, batch=500_000):
    """Monte-Carlo density of the avoiding set: (estimate, standard error)."""
    hits = 0
    done = 0
    while done < samples:
        m = min(batch, samples - done)
        pts = random_points(fs.spec, rng, m)
        hits += int(np.count_nonzero(member_mask(fs, pts)))
        done += m
    p = hits / samples
    return p, math.sqrt(max(p * (1.0 - p), 1.0 / samples) / samples)
