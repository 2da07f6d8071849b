"""Regular simplex grids, barycentric interpolation, sup-norm projection,
and Hilbert projective-metric utilities.

The grid over the probability simplex of dimension ``n_states`` with
resolution ``D`` consists of all points with coordinates in ``{0, 1/D, ..., 1}``
summing to one, enumerated in ascending lexicographic order of their integer
codes (the compositions of ``D`` into ``n_states`` parts).  That order fixes
the index space used everywhere else in the package.
"""

from dataclasses import dataclass
from math import comb, factorial

import numpy as np

__all__ = [
    "SimplexGrid",
    "Interpolant",
    "build_grid",
    "hilbert_distance",
    "hilbert_diameter",
    "contraction_coefficient",
    "metric_comparison_factor",
]

_SUM_TOL = 1e-9


def _as_points(mu, n):
    pts = np.atleast_2d(np.asarray(mu, dtype=np.float64))
    if pts.shape[1] != n:
        raise ValueError(f"expected points of dimension {n}, got {pts.shape[1]}")
    return pts


def _renormalize(pts, tol=_SUM_TOL):
    """Project slightly-off points back onto the simplex; reject anything worse.

    Coordinates within ``tol`` below zero are clipped; the result is rescaled
    to sum exactly one.  Drift of this size is expected from repeated matrix
    products, anything beyond it is a caller bug.
    """
    if pts.min() < -tol:
        raise ValueError(f"point has coordinate {pts.min():.3e} below -{tol}")
    sums = pts.sum(axis=1)
    if np.abs(sums - 1.0).max() > tol:
        raise ValueError("point coordinates do not sum to 1 within tolerance")
    clipped = np.clip(pts, 0.0, None)
    return clipped / clipped.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class Interpolant:
    """Vertices and convex weights of the triangulation simplex containing a point."""

    vertices: np.ndarray  # (k,) grid indices, k <= n_states
    weights: np.ndarray   # (k,) nonnegative, summing to 1


class SimplexGrid:
    """All lattice points of the simplex at step ``1/resolution``.

    Attributes
    ----------
    points : (size, n_states) float array, each row on the simplex
    codes : (size, n_states) integer compositions of ``resolution``
    """

    def __init__(self, n_states: int, resolution: int):
        if n_states < 2:
            raise ValueError("n_states must be >= 2")
        if resolution < 1:
            raise ValueError("resolution must be >= 1")
        self.n_states = int(n_states)
        self.resolution = int(resolution)
        self.step = 1.0 / resolution
        self.codes = _enumerate_codes(self.n_states, self.resolution)
        self.points = self.codes / float(resolution)
        self.size = self.codes.shape[0]

    def __len__(self):
        return self.size

    def __repr__(self):
        return (f"SimplexGrid(n_states={self.n_states}, "
                f"resolution={self.resolution}, size={self.size})")

    # -- index maps ------------------------------------------------------

    def index_of(self, codes) -> np.ndarray:
        """Rank integer codes (compositions) into grid indices, vectorized."""
        codes = np.atleast_2d(np.asarray(codes, dtype=np.int64))
        n, d = self.n_states, self.resolution
        if codes.shape[1] != n:
            raise ValueError("code length mismatch")
        if (codes < 0).any() or (codes.sum(axis=1) != d).any():
            raise ValueError("invalid simplex code")
        rank = np.zeros(codes.shape[0], dtype=np.int64)
        rem = np.full(codes.shape[0], d, dtype=np.int64)
        for j in range(n - 1):
            parts = n - j
            c = codes[:, j]
            rank += _comb_vec(rem + parts - 1, parts - 1)
            rank -= _comb_vec(rem - c + parts - 1, parts - 1)
            rem = rem - c
        return rank

    def point(self, index: int) -> np.ndarray:
        return self.points[index]

    # -- interpolation ----------------------------------------------------

    def barycentric(self, mu):
        """Triangulation vertices and weights for a batch of points.

        Returns ``(vertex_indices, weights)`` of shape ``(m, n_states)`` each.
        Zero-weight slots are kept so the arrays stay rectangular; they always
        reference valid grid indices.
        """
        pts = _renormalize(_as_points(mu, self.n_states))
        n, d = self.n_states, self.resolution
        m = pts.shape[0]
        x = pts * d
        # cumulative coordinates q_j = sum_{i >= j} x_i turn the simplex
        # lattice into the integer staircase D = q_0 >= q_1 >= ... >= 0,
        # where the Kuhn (Freudenthal) simplices are floor + sorted bumps
        q = np.flip(np.cumsum(np.flip(x, axis=1), axis=1), axis=1)
        q[:, 0] = d
        np.clip(q, 0.0, d, out=q)
        base = np.floor(q)
        frac = q - base
        frac[:, 0] = 0.0
        order = np.argsort(-frac[:, 1:], axis=1, kind="stable") + 1
        rows = np.arange(m)
        verts_q = np.repeat(base[:, None, :], n, axis=1)
        bump = np.zeros((m, n))
        for v in range(1, n):
            bump[rows, order[:, v - 1]] += 1.0
            verts_q[:, v, :] = base + bump
        fs = np.take_along_axis(frac, order, axis=1)
        weights = np.empty((m, n))
        weights[:, 0] = 1.0 - fs[:, 0]
        for v in range(1, n - 1):
            weights[:, v] = fs[:, v - 1] - fs[:, v]
        weights[:, n - 1] = fs[:, n - 2]
        # back to compositions: c_j = q_j - q_{j+1}
        ext = np.concatenate([verts_q, np.zeros((m, n, 1))], axis=2)
        codes = np.rint(ext[:, :, :-1] - ext[:, :, 1:]).astype(np.int64)
        # a tie against the fixed q_0 = D cannot be bumped past position 0;
        # the offending vertex always carries weight 0, remap it to the base
        bad = (codes < 0).any(axis=2)
        if bad.any():
            ib, vb = np.nonzero(bad)
            codes[ib, vb, :] = codes[ib, 0, :]
            weights[ib, vb] = 0.0
        idx = self.index_of(codes.reshape(-1, n)).reshape(m, n)
        return idx, weights

    def interpolate(self, mu) -> Interpolant:
        """Barycentric interpolant of a single point; zero-weight vertices dropped."""
        idx, w = self.barycentric(np.asarray(mu, dtype=np.float64)[None, :])
        keep = w[0] > 0.0
        if not keep.any():
            keep[0] = True
        return Interpolant(vertices=idx[0, keep].copy(), weights=w[0, keep].copy())

    # -- sup-norm projection ----------------------------------------------

    def nearest_many(self, mu) -> np.ndarray:
        """Indices of the sup-norm-closest grid points, ties to the smallest index.

        Works on the scaled coordinates x = D*mu: the optimum is floor(x) plus
        +1 on s coordinates (s the rounding deficit), and the increments that
        minimize the sup error are the s largest fractional parts.  Among
        equally good choices the lexicographically smallest code -- hence the
        smallest grid index -- is selected by pushing increments as far right
        as feasibility allows.
        """
        pts = _renormalize(_as_points(mu, self.n_states))
        n, d = self.n_states, self.resolution
        m = pts.shape[0]
        x = pts * d
        base = np.floor(x)
        frac = x - base
        s = np.rint(d - base.sum(axis=1)).astype(np.int64)
        fs = -np.sort(-frac, axis=1)
        rows = np.arange(m)
        rho = np.where(s < n, fs[rows, np.minimum(s, n - 1)], -np.inf)
        rho = np.maximum(rho, np.where(s >= 1, 1.0 - fs[rows, np.maximum(s - 1, 0)], -np.inf))
        elig = (1.0 - frac) <= rho[:, None]
        skip_ok = frac <= rho[:, None]
        suffix = np.concatenate(
            [np.cumsum(elig[:, ::-1], axis=1)[:, ::-1], np.zeros((m, 1), dtype=np.int64)],
            axis=1,
        )
        inc = np.zeros((m, n), dtype=np.int64)
        need = s.copy()
        for j in range(n):
            forced = (~skip_ok[:, j]) | (suffix[:, j + 1] < need)
            take = (need > 0) & forced
            inc[:, j] = take
            need -= take
        return self.index_of(base.astype(np.int64) + inc)

    def nearest(self, mu) -> int:
        return int(self.nearest_many(np.asarray(mu, dtype=np.float64)[None, :])[0])


def build_grid(n_states: int, resolution: int) -> SimplexGrid:
    """Enumerate the simplex lattice; count is binomial(n-1+D, n-1)."""
    return SimplexGrid(n_states, resolution)


def _enumerate_codes(n, d):
    # ascending lexicographic compositions of d into n parts
    if n == 1:
        return np.array([[d]], dtype=np.int64)
    blocks = []
    for c in range(d + 1):
        tail = _enumerate_codes(n - 1, d - c)
        head = np.full((tail.shape[0], 1), c, dtype=np.int64)
        blocks.append(np.hstack([head, tail]))
    return np.vstack(blocks)


def _comb_vec(n, k):
    # falling-factorial binomial for vectorized ranking; n stays < 2^63 / D^k
    n = np.asarray(n, dtype=np.int64)
    out = np.ones_like(n)
    for i in range(k):
        out = out * (n - i)
    return out // factorial(k)


def grid_size(n_states: int, resolution: int) -> int:
    return comb(n_states - 1 + resolution, n_states - 1)


# -- Hilbert projective metric -------------------------------------------


def hilbert_distance(u, v) -> float:
    """max_{i,j} log((u_i/v_i)(v_j/u_j)), for entrywise positive vectors."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError("shape mismatch")
    if u.min() <= 0.0 or v.min() <= 0.0:
        raise ValueError("hilbert_distance requires strictly positive entries")
    ratio = np.log(u) - np.log(v)
    return float(ratio.max() - ratio.min())


def hilbert_diameter(p) -> float:
    """Maximum pairwise Hilbert distance between the rows of a positive matrix."""
    p = np.asarray(p, dtype=np.float64)
    if p.min() <= 0.0:
        raise ValueError("hilbert_diameter requires strictly positive entries")
    logs = np.log(p)
    diff = logs[:, None, :] - logs[None, :, :]
    return float((diff.max(axis=2) - diff.min(axis=2)).max())


def contraction_coefficient(p) -> float:
    """Birkhoff coefficient tanh(diam_H(P)/4) < 1 of a positive matrix."""
    return float(np.tanh(hilbert_diameter(p) / 4.0))


def metric_comparison_factor(d: float) -> float:
    """e^d (e^d - 1) / d, the factor relating n*sup-norm to the Hilbert metric
    on a set of Hilbert diameter d; continuous extension 1.0 at d = 0."""
    if d < 0:
        raise ValueError("diameter must be nonnegative")
    if d == 0.0:
        return 1.0
    return float(np.exp(d) * np.expm1(d) / d)
