"""Experiment orchestration: validated configs, staged runs, artifacts.

Each run_* function computes one CLI verb's payload and, when an output
directory is given, writes the corresponding artifact files.  Canonical
artifacts never contain timings; stage durations go to timings.json only,
so identical configs reproduce identical artifact bytes.
"""

import math
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import rng as rngmod
from .artifacts import (ball_report_payload, cover_payload, curve_csv_text,
                        forbidden_payload, packing_payload, plan_payload,
                        write_curve_csv, write_json)
from .ball import BallColorConfig, build_ball_coloring, certify_ball, plan_shells
from .covering import (SphereColorConfig, build_sphere_coloring,
                       greedy_cover_matrix, unit_chord_pairs)
from .errors import (DomainError, IncompleteCoverError, InfeasibleError,
                     InvalidParameterError)
from .forbidden import (boundary_clearance, build_packing, certify_forbidden,
                        density_lower_bound, forbidden_margins, make_forbidden,
                        mc_density)
from .geometry import SphereSpec
from .parameters import (LARGE_R, REGIME_THRESHOLD, bound_base,
                         default_small_phi, forbidden_gap_margins, shell_params,
                         small_radius_params, solve_params, verify_system)
from .simplex import exact_cover_number, fractional_cover_exact


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated knobs of a pipeline run; validation happens before any
    computation so a bad config never leaves partial artifacts."""

    n: int = 2
    R: float = 2.0
    eps: float = 0.01
    lambda_fraction: float = 0.95
    seed: int = 0
    samples: int = 100_000
    rotations: int = 256
    out_dir: Optional[str] = None

    def __post_init__(self):
        if self.n < 2:
            raise DomainError(f"dimension n must be at least 2, got {self.n}")
        if not self.R > 0.5:
            raise DomainError(f"radius must exceed 1/2, got {self.R}")
        if not self.eps > 0.0:
            raise DomainError(f"eps must be positive, got {self.eps}")
        if not 0.0 < self.lambda_fraction <= 1.0:
            raise DomainError(
                f"lambda fraction must lie in (0, 1], got {self.lambda_fraction}")
        if self.samples < 0 or self.rotations < 1:
            raise DomainError("samples must be >= 0 and rotations >= 1")

    def echo(self):
        return {
            "n": self.n, "R": self.R, "eps": self.eps,
            "lambda_fraction": self.lambda_fraction, "seed": self.seed,
            "samples": self.samples, "rotations": self.rotations,
        }


class StageTimer:
    def __init__(self):
        self.stages = {}

    def run(self, name, fn, *args, **kwargs):
        t0 = time.perf_counter()
        out = fn(*args, **kwargs)
        self.stages[name] = time.perf_counter() - t0
        return out


def _outdir(out_dir):
    if out_dir is None:
        return None
    p = Path(out_dir)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _params_for(cfg):
    if cfg.R > REGIME_THRESHOLD:
        return solve_params(cfg.R)
    return small_radius_params(cfg.R, default_small_phi(cfg.n, cfg.R, cfg.eps),
                               cfg.eps)


def _working_lambda(cfg, params):
    if params.regime == LARGE_R:
        return cfg.lambda_fraction * params.lambda0
    return params.lambda0  # already carries the eps margin


def run_params(R, eps=0.01):
    """Radius parameters, both bound-base branches, and the shell margins."""
    R = float(R)
    if not R > 0.5:
        raise DomainError(f"radius must exceed 1/2, got {R}")
    out = {"R": R, "x": bound_base(R)}
    branches = {"linear": 2.0 * R}
    closed = None
    if R >= 1.0:  # the closed form is real from R = 1 upward
        R2 = R * R
        closed = math.sqrt(5.0 - 2.0 / R2
                           + 4.0 * math.sqrt(max(1.0 - (5.0 * R2 - 1.0) / (4.0 * R2 * R2), 0.0)))
        branches["closed_form"] = closed
    near_threshold = abs(R - REGIME_THRESHOLD) < 1e-6
    branches["agree_at_threshold"] = (
        bool(closed is not None and abs(closed - 2.0 * R) < 1e-6)
        if near_threshold else None)
    out["branches"] = branches

    if R > REGIME_THRESHOLD:
        params = solve_params(R)
    else:  # reported at the n = 2 default angle; x(R) itself is n-free
        params = small_radius_params(R, default_small_phi(2, R, eps), eps)
    out["radius_params"] = params.as_dict()
    out["residuals"] = verify_system(params)
    out["shell_params"] = shell_params(R, eps).as_dict()
    return out


def run_curve(rmin, rmax, steps, out_path=None):
    rmin, rmax = float(rmin), float(rmax)
    steps = int(steps)
    if not (0.5 < rmin < rmax):
        raise DomainError(f"need 1/2 < rmin < rmax, got [{rmin}, {rmax}]")
    if steps < 2:
        raise DomainError("need at least two grid points")
    grid = np.linspace(rmin, rmax, steps)
    rows = [(float(R), bound_base(float(R))) for R in grid]
    if out_path is not None:
        write_curve_csv(out_path, rows)
    return curve_csv_text(rows)


def run_construct(cfg):
    """Saturated packing + shrunken forbidden set + numeric certificates."""
    timer = StageTimer()
    params = _params_for(cfg)
    lam = _working_lambda(cfg, params)
    spec = SphereSpec(cfg.n, cfg.R)
    packing = timer.run(
        "packing", build_packing, spec, params.phi,
        rngmod.stream(cfg.seed, rngmod.PACKING))
    fs = make_forbidden(packing, lam)

    t_diam, t_sep = forbidden_gap_margins(cfg.R, params.phi, lam)
    has_gap = params.regime == LARGE_R and t_sep > 0.0
    pair_samples = max(cfg.samples, 1)
    try:
        cert = timer.run(
            "certificate", certify_forbidden, fs, 1.0, pair_samples,
            rngmod.stream(cfg.seed, rngmod.MEMBER_SAMPLING), require_gap=has_gap)
    except InvalidParameterError as exc:
        # a failed certificate, not a usage error: the config was valid but
        # the requested shrink leaves no provable avoidance gap (exit 1)
        cert = {"ok": False, "kind": "invalid-parameter", "error": str(exc),
                "diameter_bound": 2.0 * cfg.R * lam * math.sin(2.0 * params.phi),
                "separation_bound": 1.0 + t_sep, "target": 1.0}
    clearance = timer.run(
        "clearance", boundary_clearance, fs, min(pair_samples, 10_000),
        rngmod.stream(cfg.seed, rngmod.CLEARANCE))

    payload = {
        "config": cfg.echo(),
        "params": params.as_dict(),
        "lambda": lam,
        "margins": {"diameter_slack": t_diam, "separation_slack": t_sep},
        "packing_size": len(packing),
        "certificate": cert,
        "clearance": clearance,
    }
    out = _outdir(cfg.out_dir)
    if out is not None:
        write_json(out / "packing.json", packing_payload(packing))
        write_json(out / "forbidden.json", forbidden_payload(fs))
        write_json(out / "certificate.json",
                   {k: payload[k] for k in
                    ("config", "params", "lambda", "margins", "certificate", "clearance")})
        write_json(out / "timings.json", timer.stages)
    payload["ok"] = bool(cert["ok"] and clearance["ok"])
    return payload, fs


def run_color_sphere(cfg):
    """End-to-end sphere coloring; writes cover.json and report.json."""
    timer = StageTimer()
    spec = SphereSpec(cfg.n, cfg.R)
    sc_cfg = SphereColorConfig(
        seed=cfg.seed,
        lambda_fraction=cfg.lambda_fraction,
        eps_small=cfg.eps,
        rotation_batch=cfg.rotations,
        transfer_samples=cfg.samples,
    )
    coloring = timer.run("coloring", build_sphere_coloring, spec, sc_cfg)

    # unit-chord spot check: monochromatic pairs would break the coloring
    mono = 0
    chord_pairs = min(cfg.samples, 100_000)
    if chord_pairs > 0:
        rng = rngmod.stream(cfg.seed, rngmod.MEMBER_SAMPLING, 2)
        p, q = unit_chord_pairs(spec, chord_pairs, rng)
        cp, cq = coloring.color_of(p), coloring.color_of(q)
        mono = int(np.count_nonzero((cp == cq) & (cp >= 0)))

    report = {
        "config": cfg.echo(),
        "color_count": coloring.color_count,
        "bound_pre": coloring.report["cover_count_bound"],
        "tau_star_proxy": coloring.report["tau_star_proxy"],
        "verification": {
            "transfer": coloring.report["transfer"],
            "unit_chord_pairs": chord_pairs,
            "monochromatic": mono,
        },
        "detail": {k: v for k, v in coloring.report.items() if k != "transfer"},
    }
    out = _outdir(cfg.out_dir)
    if out is not None:
        write_json(out / "cover.json", cover_payload(coloring))
        write_json(out / "report.json", report)
        write_json(out / "timings.json", timer.stages)
    ok = coloring.report["transfer"]["ok"] and mono == 0
    report["ok"] = bool(ok)
    return report, coloring


def run_color_ball(cfg):
    """Shell-plan ball coloring; writes plan.json, per-shell covers, report."""
    timer = StageTimer()
    bc = timer.run("build", build_ball_coloring, cfg.n, cfg.R,
                   BallColorConfig(seed=cfg.seed, eps=cfg.eps))
    pair_samples = min(cfg.samples, 100_000)
    cert = timer.run("certificate", certify_ball, bc, pair_samples,
                     rngmod.stream(cfg.seed, rngmod.BALL_CERT))
    report = ball_report_payload(bc, certificate=cert)
    report["config"] = cfg.echo()
    out = _outdir(cfg.out_dir)
    if out is not None:
        write_json(out / "plan.json", plan_payload(bc.plan))
        shells_dir = out / "shells"
        shells_dir.mkdir(exist_ok=True)
        for j, coloring in enumerate(bc.shells):
            write_json(shells_dir / f"cover_{j:04d}.json", cover_payload(coloring))
        write_json(out / "report.json", report)
        write_json(out / "timings.json", timer.stages)
    report["ok"] = bool(cert["ok"])
    return report, bc


def run_cover_lab(instance):
    """Greedy vs exact covering numbers on a toy hypergraph instance.

    The instance dict carries {"vertices": k, "edges": [[vertex indices]]}.
    """
    try:
        k = int(instance["vertices"])
        edges = [list(map(int, e)) for e in instance["edges"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed cover-lab instance: {exc}") from exc
    if k < 1 or any((v < 0 or v >= k) for e in edges for v in e):
        raise DomainError("vertex indices must lie in [0, vertices)")
    if not edges:
        raise DomainError("instance needs at least one edge")
    matrix = np.zeros((len(edges), k), dtype=bool)
    for i, e in enumerate(edges):
        matrix[i, e] = True
    try:
        order = greedy_cover_matrix(matrix)
        tau_star = fractional_cover_exact(k, edges)
        tau = exact_cover_number(k, edges)
    except (InfeasibleError, IncompleteCoverError) as exc:
        raise DomainError(f"instance is not coverable: {exc}") from exc
    max_edge = max(len(e) for e in edges)
    bound = (1.0 + math.log(max_edge)) * tau_star
    return {
        "vertices": k,
        "edge_count": len(edges),
        "greedy_size": len(order),
        "greedy_order": [int(i) for i in order],
        "tau_star": tau_star,
        "tau_exact": tau,
        "ln_bound": bound,
        "greedy_within_bound": bool(len(order) <= bound + 1e-9),
        "tau_star_below_tau": bool(tau_star <= tau + 1e-9),
    }


def run_verify(cfg, include_ball=False):
    """construct -> certify -> color-sphere (-> color-ball); all artifacts.

    Sub-stages write their artifacts into construct/, sphere/ and ball/
    subdirectories of the configured output directory."""
    def _sub(cfg, name):
        if cfg.out_dir is None:
            return cfg
        return replace(cfg, out_dir=str(Path(cfg.out_dir) / name))

    timer = StageTimer()
    stages = {}

    construct, fs = timer.run("construct", run_construct, _sub(cfg, "construct"))
    stages["forbidden_certificate"] = {
        "ok": construct["certificate"]["ok"], "detail": construct["certificate"]}
    stages["clearance"] = {
        "ok": construct["clearance"]["ok"], "detail": construct["clearance"]}

    def _density():
        inner = make_forbidden(fs.packing, (1.0 - _default_delta(cfg)) * fs.lam)
        bound = density_lower_bound(cfg.n, fs.phi, inner.lam)
        samples = max(cfg.samples, 10_000)
        p, se = mc_density(inner, samples, rngmod.stream(cfg.seed, rngmod.DENSITY))
        return {"analytic_bound": bound, "estimate": p, "std_error": se,
                "samples": samples, "ok": bool(p >= bound - 3.0 * se)}

    stages["density"] = timer.run("density", _density)

    sphere_report, coloring = timer.run("color_sphere", run_color_sphere,
                                        _sub(cfg, "sphere"))
    stages["transfer"] = {
        "ok": sphere_report["verification"]["transfer"]["ok"],
        "detail": sphere_report["verification"]["transfer"]}
    stages["unit_chords"] = {
        "ok": sphere_report["verification"]["monochromatic"] == 0,
        "monochromatic": sphere_report["verification"]["monochromatic"]}

    if include_ball:
        ball_report, _ = timer.run("color_ball", run_color_ball, _sub(cfg, "ball"))
        stages["ball"] = {"ok": ball_report["ok"],
                          "detail": ball_report.get("certificate", {})}

    failed = [name for name, st in stages.items() if not st["ok"]]
    report = {
        "config": cfg.echo(),
        "derived": {
            "x": bound_base(cfg.R),
            "bound_pre": sphere_report["bound_pre"],
            "color_count": sphere_report["color_count"],
        },
        "stages": stages,
        "failed": failed,
        "ok": not failed,
    }
    out = _outdir(cfg.out_dir)
    if out is not None:
        write_json(out / "run_report.json", report)
        write_json(out / "timings.json", timer.stages)
    return report


def _default_delta(cfg):
    from .covering import default_cover_delta
    return default_cover_delta(cfg.n)
