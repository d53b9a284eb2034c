"""Deterministic random-stream plumbing.

Every randomized stage of the pipeline draws from its own named stream derived
from one 64-bit master seed.  Streams are Philox counter-based generators keyed
by ``SeedSequence(master_seed, spawn_key=path)``, so they are independent,
reproducible across platforms, and insensitive to the order in which stages
run.  The ``path`` is a tuple of small integers: a domain tag plus optional
indices (e.g. a shell number).
"""

import numpy as np

# Domain tags for derived streams.  Values are arbitrary but frozen: changing
# them changes every artifact produced under a given seed.
PACKING = 1
NET = 2
ROTATIONS = 3
MEMBER_SAMPLING = 4
TRANSFER = 5
HEAL = 6
DENSITY = 7
BALL_SHELL = 8
BALL_CERT = 9
CLEARANCE = 10


def stream(seed, *path):
    """Return a fresh Generator for the given master seed and stream path."""
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(seq))
