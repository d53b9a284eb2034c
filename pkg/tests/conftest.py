import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make oracles importable

from chromasphere.pipeline import ExperimentConfig, run_color_sphere, run_construct


@pytest.fixture(scope="session")
def sphere_run(tmp_path_factory):
    """The headline n=2, R=2, seed-0 coloring run with artifacts on disk.

    Shared by the end-to-end and determinism acceptance criteria and by
    unit tests that need a realistic coloring without paying for a rebuild.
    The build duration is kept so runtime budgets can charge it honestly.
    """
    out = tmp_path_factory.mktemp("sphere_run")
    cfg = ExperimentConfig(out_dir=str(out))
    t0 = time.perf_counter()
    report, coloring = run_color_sphere(cfg)
    seconds = time.perf_counter() - t0
    return {"cfg": cfg, "report": report, "coloring": coloring, "dir": out,
            "seconds": seconds}


@pytest.fixture(scope="session")
def construct_run():
    """Forbidden set of the headline regime (n=2, R=2, lambda=0.95*lambda0)
    with a quick certificate; heavyweight certification happens in the
    acceptance suite on the same object."""
    cfg = ExperimentConfig(samples=10_000)
    t0 = time.perf_counter()
    payload, fs = run_construct(cfg)
    seconds = time.perf_counter() - t0
    return {"payload": payload, "fs": fs, "seconds": seconds}
