"""Command-line client of the service.

Every verb posts one request; by default the app runs in-process over an
ASGI transport (no sockets), and --url targets a remote server instead.
Heavy imports happen after option parsing so --threads can cap the BLAS
worker pools before numpy loads.

Exit codes: 0 all certificates pass, 1 a certificate failed, 2 usage or
domain error.  CHROMA_SEED in the environment overrides any --seed.
"""

import json
import os
import sys
from pathlib import Path

import click

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS")


@click.group()
@click.option("--url", default=None, metavar="URL",
              help="Remote service base URL; default runs in-process.")
@click.option("--threads", default=None, type=int,
              help="Cap numeric worker threads (set before numpy loads).")
@click.pass_context
def main(ctx, url, threads):
    """Constructive chromatic-number bounds for spheres and balls."""
    if threads is not None:
        if threads < 1:
            raise click.UsageError("--threads must be at least 1")
        for var in _THREAD_VARS:
            os.environ[var] = str(threads)
    ctx.obj = {"url": url}


def _effective_seed(seed):
    env = os.environ.get("CHROMA_SEED")
    if env is None:
        return seed
    try:
        return int(env)
    except ValueError:
        raise click.UsageError(f"CHROMA_SEED must be an integer, got {env!r}")


def _inprocess_post(path, payload):
    import asyncio

    import httpx

    from .service import app

    async def go():
        transport = httpx.ASGITransport(app=app, raise_app_exceptions=False)
        async with httpx.AsyncClient(transport=transport,
                                     base_url="http://chromasphere.local",
                                     timeout=None) as client:
            return await client.post(path, json=payload)

    return asyncio.run(go())


def _request(ctx, path, payload):
    url = ctx.obj["url"]
    if url:
        import httpx
        try:
            resp = httpx.post(url.rstrip("/") + path, json=payload, timeout=None)
        except httpx.HTTPError as exc:
            click.echo(f"service unreachable: {exc}", err=True)
            sys.exit(1)
    else:
        resp = _inprocess_post(path, payload)
    if resp.status_code in (400, 422):
        try:
            detail = resp.json().get("detail")
        except json.JSONDecodeError:
            detail = resp.text
        click.echo(f"error: {detail}", err=True)
        sys.exit(2)
    if resp.status_code != 200:
        click.echo(f"service error (HTTP {resp.status_code}): {resp.text}", err=True)
        sys.exit(1)
    return resp.json()


def _emit_json(payload, out=None):
    from .artifacts import dump_canonical
    text = dump_canonical(payload)
    if out:
        Path(out).write_text(text, encoding="utf-8")
        click.echo(f"wrote {out}")
    else:
        click.echo(text, nl=False)


def _finish(payload):
    """Exit 1 when any certificate in the payload failed."""
    if payload.get("ok") is False:
        failed = payload.get("failed")
        if failed:
            click.echo(f"FAILED: {failed[0]}", err=True)
        else:
            click.echo("FAILED: certificate check", err=True)
        sys.exit(1)


def _resolve_dir(out):
    return str(Path(out).resolve()) if out else None


@main.command()
@click.option("--R", "R", type=float, required=True, help="Sphere radius (> 1/2).")
@click.option("--eps", type=float, default=0.01, show_default=True,
              help="Margin used by the small-radius and shell parameters.")
@click.option("--out", default=None, type=click.Path(dir_okay=False),
              help="Write JSON here instead of stdout.")
@click.pass_context
def params(ctx, R, eps, out):
    """Radius parameters, bound base x(R) and shell margins as JSON."""
    payload = _request(ctx, "/params", {"R": R, "eps": eps})
    _emit_json(payload, out)


@main.command()
@click.option("--rmin", type=float, required=True)
@click.option("--rmax", type=float, required=True)
@click.option("--steps", type=int, default=100, show_default=True)
@click.option("--out", default=None, type=click.Path(dir_okay=False),
              help="Write CSV here instead of stdout.")
@click.pass_context
def curve(ctx, rmin, rmax, steps, out):
    """Comparison curves x(R), 2R and 3 over a radius grid (CSV)."""
    payload = _request(ctx, "/curve",
                       {"rmin": rmin, "rmax": rmax, "steps": steps})
    text = payload["csv"]
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        click.echo(f"wrote {out}")
    else:
        click.echo(text, nl=False)


def _run_options(fn):
    fn = click.option("--R", "R", type=float, default=2.0, show_default=True)(fn)
    fn = click.option("--n", "n", type=int, default=2, show_default=True,
                      help="Sphere dimension (the sphere lives in R^(n+1)).")(fn)
    fn = click.option("--seed", type=int, default=0, show_default=True)(fn)
    fn = click.option("--eps", type=float, default=0.01, show_default=True)(fn)
    fn = click.option("--samples", type=int, default=100_000, show_default=True)(fn)
    return fn


@main.command()
@_run_options
@click.option("--lambda-frac", type=float, default=0.95, show_default=True,
              help="Shrink coefficient as a fraction of the critical one.")
@click.option("--out", default=None, type=click.Path(file_okay=False),
              help="Artifact directory (packing/forbidden/certificate JSON).")
@click.pass_context
def construct(ctx, R, n, seed, eps, samples, lambda_frac, out):
    """Build the distance-avoiding set and run its numeric certificates."""
    payload = _request(ctx, "/construct", {
        "n": n, "R": R, "eps": eps, "lambda_fraction": lambda_frac,
        "seed": _effective_seed(seed), "samples": samples,
        "out_dir": _resolve_dir(out),
    })
    _emit_json(payload)
    _finish(payload)


@main.command("color-sphere")
@_run_options
@click.option("--lambda-frac", type=float, default=0.95, show_default=True)
@click.option("--rotations", type=int, default=256, show_default=True,
              help="Rotation batch per covering round.")
@click.option("--out", default=None, type=click.Path(file_okay=False),
              help="Artifact directory (cover.json, report.json).")
@click.pass_context
def color_sphere(ctx, R, n, seed, eps, samples, lambda_frac, rotations, out):
    """Color one sphere by rotated copies of the avoiding set."""
    payload = _request(ctx, "/color-sphere", {
        "n": n, "R": R, "eps": eps, "lambda_fraction": lambda_frac,
        "seed": _effective_seed(seed), "samples": samples,
        "rotations": rotations, "out_dir": _resolve_dir(out),
    })
    _emit_json(payload)
    _finish(payload)


@main.command("color-ball")
@_run_options
@click.option("--out", default=None, type=click.Path(file_okay=False),
              help="Artifact directory (plan.json, shells/, report.json).")
@click.pass_context
def color_ball(ctx, R, n, seed, eps, samples, out):
    """Color the solid ball through nested shell colorings."""
    payload = _request(ctx, "/color-ball", {
        "n": n, "R": R, "eps": eps, "seed": _effective_seed(seed),
        "samples": samples, "out_dir": _resolve_dir(out),
    })
    _emit_json(payload)
    _finish(payload)


@main.command("cover-lab")
@click.option("--instance", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help='JSON file {"vertices": k, "edges": [[indices]]}.')
@click.pass_context
def cover_lab(ctx, instance):
    """Greedy vs exact covering numbers on a toy hypergraph."""
    try:
        with open(instance, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise click.UsageError(f"instance file is not valid JSON: {exc}")
    if not isinstance(data, dict) or "vertices" not in data or "edges" not in data:
        raise click.UsageError('instance must be {"vertices": k, "edges": [[...]]}')
    payload = _request(ctx, "/cover-lab", data)
    _emit_json(payload)
    if not (payload["greedy_within_bound"] and payload["tau_star_below_tau"]):
        click.echo("FAILED: covering bound violated", err=True)
        sys.exit(1)


@main.command()
@_run_options
@click.option("--lambda-frac", type=float, default=0.95, show_default=True)
@click.option("--rotations", type=int, default=256, show_default=True)
@click.option("--ball", is_flag=True, help="Also run the ball coloring stage.")
@click.option("--out", default=None, type=click.Path(file_okay=False),
              help="Artifact directory (construct/, sphere/, ball/).")
@click.pass_context
def verify(ctx, R, n, seed, eps, samples, lambda_frac, rotations, ball, out):
    """Full pipeline with every certificate; exit 0 only if all pass."""
    payload = _request(ctx, "/verify", {
        "n": n, "R": R, "eps": eps, "lambda_fraction": lambda_frac,
        "seed": _effective_seed(seed), "samples": samples,
        "rotations": rotations, "include_ball": ball,
        "out_dir": _resolve_dir(out),
    })
    _emit_json(payload)
    _finish(payload)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service (uvicorn)."""
    import uvicorn

    from .service import app
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
