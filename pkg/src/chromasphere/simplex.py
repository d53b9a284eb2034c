"""Small dense LP machinery for fractional covers, plus exact toy oracles.

The fractional cover number of a hypergraph (vertices 0..k-1, edges as vertex
subsets) is

    tau* = min sum nu_E   s.t.  sum_{E containing v} nu_E >= 1,  nu >= 0.

It is computed through the dual packing LP (max sum y_v, sum_{v in E} y_v <= 1,
y >= 0), whose slack basis is immediately feasible, with a dense tableau
simplex under Bland's rule.  Intended for toy scale (about a hundred vertices,
a couple hundred edges); pipeline-scale instances report a density proxy
instead of tau*.

exact_cover_number is a subset-DP over vertex bitmasks — exponential in the
vertex count, fine for <= ~20 vertices — used as the integral-cover oracle in
tests.
"""

import numpy as np

from .errors import DomainError, InfeasibleError

_TOL = 1e-9


def _edge_masks(n_vertices, edges):
    masks = []
    for e in edges:
        m = 0
        for v in e:
            if not 0 <= v < n_vertices:
                raise DomainError(f"edge vertex {v} out of range 0..{n_vertices - 1}")
            m |= 1 << v
        masks.append(m)
    return masks


def _check_coverable(n_vertices, masks):
    union = 0
    for m in masks:
        union |= m
    if union != (1 << n_vertices) - 1:
        missing = [v for v in range(n_vertices) if not union >> v & 1]
        raise InfeasibleError(f"vertices {missing} belong to no edge")


def simplex_max(a, b, c, tol=_TOL, max_iter=100_000):
    """Maximize c'x subject to a x <= b, x >= 0, with b >= 0 (slack basis start).

    Dense tableau, Bland's anti-cycling rule.  Returns (optimal value, x).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = a.shape
    if np.any(b < -tol):
        raise DomainError("slack basis start needs b >= 0")
    # tableau: m constraint rows + objective row; columns: n vars, m slacks, rhs
    t = np.zeros((m + 1, n + m + 1))
    t[:m, :n] = a
    t[:m, n:n + m] = np.eye(m)
    t[:m, -1] = b
    t[m, :n] = c  # reduced costs (maximization: positive => improving)
    basis = list(range(n, n + m))
    for _ in range(max_iter):
        enter = -1
        for j in range(n + m):  # Bland: lowest improving index
            if t[m, j] > tol:
                enter = j
                break
        if enter < 0:
            x = np.zeros(n + m)
            x[basis] = t[:m, -1]
            # the objective-row rhs accumulates -(value) under these pivots
            return float(-t[m, -1]), x[:n]
        ratios = np.full(m, np.inf)
        col = t[:m, enter]
        pos = col > tol
        ratios[pos] = t[:m, -1][pos] / col[pos]
        if not np.isfinite(ratios).any():
            raise InfeasibleError("LP unbounded (dual of an infeasible cover)")
        best = np.min(ratios)
        leave = -1
        for i in range(m):  # Bland tie-break: lowest basis index
            if ratios[i] <= best + tol * max(1.0, abs(best)):
                if leave < 0 or basis[i] < basis[leave]:
                    leave = i
        piv = t[leave, enter]
        t[leave] /= piv
        for i in range(m + 1):
            if i != leave and abs(t[i, enter]) > 0.0:
                t[i] -= t[i, enter] * t[leave]
        basis[leave] = enter
    raise DomainError("simplex iteration limit reached")


def fractional_cover_exact(n_vertices, edges):
    """Optimal value tau* of the fractional cover LP, to ~1e-9.

    Toy scale only; raises InfeasibleError when some vertex is uncovered.
    """
    n_vertices = int(n_vertices)
    if n_vertices <= 0:
        raise DomainError("need at least one vertex")
    if n_vertices > 100 or len(edges) > 200:
        raise DomainError("fractional_cover_exact is limited to 100 vertices / 200 edges")
    masks = _edge_masks(n_vertices, edges)
    _check_coverable(n_vertices, masks)
    a = np.zeros((len(edges), n_vertices))
    for i, e in enumerate(edges):
        a[i, sorted(set(e))] = 1.0
    value, _ = simplex_max(a, np.ones(len(edges)), np.ones(n_vertices))
    return float(value)


def exact_cover_number(n_vertices, edges):
    """Minimum number of edges covering all vertices, by subset DP (exact)."""
    n_vertices = int(n_vertices)
    masks = _edge_masks(n_vertices, edges)
    _check_coverable(n_vertices, masks)
    full = (1 << n_vertices) - 1
    inf = n_vertices + 1
    dp = [0] + [inf] * full
    for s in range(1, full + 1):
        low_v = (s & -s).bit_length() - 1  # cover the lowest uncovered vertex
        best = inf
        for m in masks:
            if m >> low_v & 1:
                prev = dp[s & ~m]
                if prev + 1 < best:
                    best = prev + 1
        dp[s] = best
    return dp[full]
