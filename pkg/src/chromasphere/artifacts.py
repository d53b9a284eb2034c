"""Canonical artifact serialization.

Every real number prints through '%.17g' (17 significant digits round-trips
an IEEE double exactly), keys keep insertion order, and the writer uses
fixed separators, so a deterministic computation yields byte-identical
files across runs.  Timings and any other run-varying diagnostics live in a
separate timings.json and never enter the canonical artifacts.
"""

import csv
import io
import json
import math

import numpy as np

FLOAT_FMT = "%.17g"


def format_real(x):
    """A float as its canonical 17-significant-digit token."""
    x = float(x)
    if math.isnan(x):
        raise ValueError("NaN has no place in an artifact")
    if math.isinf(x):
        # JSON has no Infinity literal; artifacts carry it as a string.
        return '"inf"' if x > 0 else '"-inf"'
    return FLOAT_FMT % x


def _emit(obj, out, indent, level):
    pad = " " * (indent * level)
    pad_in = " " * (indent * (level + 1))
    if obj is None:
        out.write("null")
    elif isinstance(obj, (bool, np.bool_)):
        out.write("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.write(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.write(format_real(obj))
    elif isinstance(obj, str):
        out.write(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.write("{}")
            return
        out.write("{\n")
        for i, (k, v) in enumerate(obj.items()):
            if not isinstance(k, str):
                raise TypeError(f"artifact keys must be strings, got {k!r}")
            out.write(pad_in)
            out.write(json.dumps(k))
            out.write(": ")
            _emit(v, out, indent, level + 1)
            out.write(",\n" if i + 1 < len(obj) else "\n")
        out.write(pad + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = list(np.asarray(obj).tolist()) if isinstance(obj, np.ndarray) else list(obj)
        if not items:
            out.write("[]")
            return
        nested = any(isinstance(v, (dict, list, tuple, np.ndarray)) for v in items)
        if not nested:
            out.write("[")
            for i, v in enumerate(items):
                _emit(v, out, indent, level + 1)
                if i + 1 < len(items):
                    out.write(", ")
            out.write("]")
        else:
            out.write("[\n")
            for i, v in enumerate(items):
                out.write(pad_in)
                _emit(v, out, indent, level + 1)
                out.write(",\n" if i + 1 < len(items) else "\n")
            out.write(pad + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__} canonically")


def dump_canonical(obj, indent=2):
    buf = io.StringIO()
    _emit(obj, buf, indent, 0)
    buf.write("\n")
    return buf.getvalue()


def write_json(path, obj):
    text = dump_canonical(obj)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def load_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def to_builtin(obj):
    """Recursively strip numpy types so strict JSON encoders accept the
    payload; infinities become the same string tokens the canonical writer
    uses."""
    if isinstance(obj, dict):
        return {k: to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_builtin(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_builtin(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def write_curve_csv(path, rows):
    """The comparison-curve table: R, x(R), 2R, and the flat reference 3."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["R", "x", "two_R", "three"])
        for R, x in rows:
            w.writerow([FLOAT_FMT % R, FLOAT_FMT % x, FLOAT_FMT % (2.0 * R), "3"])
    return path


def curve_csv_text(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["R", "x", "two_R", "three"])
    for R, x in rows:
        w.writerow([FLOAT_FMT % R, FLOAT_FMT % x, FLOAT_FMT % (2.0 * R), "3"])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# payload builders (dict shapes of the on-disk artifacts)

def packing_payload(packing):
    out = {
        "n": packing.spec.n,
        "R": packing.spec.R,
        "phi": packing.phi,
        "centers": [list(map(float, row)) for row in packing.centers],
    }
    if packing.saturation is not None:
        out["saturation"] = packing.saturation.as_dict()
    return out


def forbidden_payload(fs):
    out = packing_payload(fs.packing)
    out["lambda"] = fs.lam
    out["gamma"] = fs.gamma
    return out


def _flat_row_major(mat):
    return [float(v) for v in np.asarray(mat).reshape(-1)]


def cover_payload(coloring):
    """The rotation pool (row-major, healing appended) plus the picked
    indices and verification counters of one sphere coloring."""
    tr = coloring.report.get("transfer", {})
    pool = coloring.pool_rotations
    if pool is None:
        pool = coloring.rotations
    return {
        "n": coloring.spec.n,
        "R": coloring.spec.R,
        "phi": coloring.report.get("phi", coloring.params.phi),
        "lambda": coloring.lam,
        "delta": coloring.delta_cov,
        "mode": coloring.mode,
        "rotations": [_flat_row_major(rot) for rot in pool],
        "chosen": [int(i) for i in coloring.chosen],
        "cover_size": int(len(coloring.rotations)),
        "verified_net": True,
        "verified_sphere_samples": int(tr.get("samples", 0)),
        "violations": int(tr.get("violations", 0)),
    }


def sphere_report_payload(coloring, extra=None):
    out = {"report": dict(coloring.report)}
    if extra:
        out.update(extra)
    return out


def plan_payload(plan):
    return plan.as_dict()


def ball_report_payload(bc, certificate=None):
    from .ball import total_colors
    out = {
        "n": bc.plan.n,
        "R": bc.plan.R,
        "eps": bc.plan.eps,
        "shell_count": bc.plan.shell_count,
        "inner_radius": bc.plan.inner_radius,
        "reserved_color": bc.reserved_color,
        "total_colors": total_colors(bc),
        "shell_colors": [int(s.color_count) for s in bc.shells],
        "build": dict(bc.build_report),
    }
    if certificate is not None:
        out["certificate"] = certificate
    return out
