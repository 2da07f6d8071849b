"""Closed-form eigenpairs of the three-state counterexample and residual
checks certifying that a candidate (bias, gain) solves the average-reward
fixed-point equation  g + h = max_a [r(a, mu P(a)) + h(mu P(a))].

The counterexample works on the coordinates (mu_1, mu_3) of the sub-simplex
(mu_2 reconstructed).  For a constant endpoint action a_k the linear bias
h_k = alpha_k mu_1 + beta_k mu_3 and the gain solve a 3x3 linear system in
closed form; centering those biases at the two steady states and adding one
more piece obtained by a single backup yields piecewise-affine convex
eigenvectors v0, v1, and a continuum of max-plus combinations between them,
all sharing the same gain on the one-step invariant region.
"""

from dataclasses import dataclass

import numpy as np

from .model import MeanFieldModel

__all__ = [
    "kolmogorov_coefficients",
    "counterexample_steady_state",
    "PiecewiseAffineBias",
    "analytic_eigenvector",
    "InvariantRegion",
    "invariant_region",
    "eigen_residual",
    "eigen_residual_grid",
]


def kolmogorov_coefficients(a: float):
    """(gain, alpha, beta) of the linear bias under the constant action a.

    Solves  g = (1-a)^2 + a^2 + (1-a) alpha + a beta,
            alpha = -a^2 - a beta,
            beta = -(1-a)^2 - (1-a) alpha  in closed form.
    """
    if not 0.0 < a < 1.0:
        raise ValueError("action must lie in (0, 1)")
    den = 1.0 - a * (1.0 - a)
    gain = (a ** 3 + (1.0 - a) ** 3) / den
    alpha = (a * (1.0 - a) ** 2 - a ** 2) / den
    beta = ((1.0 - a) * a ** 2 - (1.0 - a) ** 2) / den
    return gain, alpha, beta


def counterexample_steady_state(a: float) -> np.ndarray:
    """Unique fixed point of the counterexample kernel at the constant action a."""
    if not 0.0 < a < 1.0:
        raise ValueError("action must lie in (0, 1)")
    den = 1.0 - a * (1.0 - a)
    return np.array([(1.0 - a) ** 2, a * (1.0 - a), a ** 2]) / den


class PiecewiseAffineBias:
    """Max of affine pieces c0 + c1*mu_1 + c3*mu_3 on the sub-simplex.

    Convex by construction; supports shifting and max-plus combination,
    which is just a union of shifted piece sets.
    """

    def __init__(self, pieces):
        self.pieces = np.atleast_2d(np.asarray(pieces, dtype=np.float64))
        if self.pieces.shape[1] != 3:
            raise ValueError("pieces must be rows (c0, c1, c3)")

    def __call__(self, mu1, mu3):
        mu1 = np.asarray(mu1, dtype=np.float64)
        mu3 = np.asarray(mu3, dtype=np.float64)
        vals = (self.pieces[:, 0][:, None]
                + self.pieces[:, 1][:, None] * mu1.ravel()[None, :]
                + self.pieces[:, 2][:, None] * mu3.ravel()[None, :]).max(axis=0)
        return vals.reshape(mu1.shape) if mu1.shape else float(vals[0])

    def shifted(self, c: float) -> "PiecewiseAffineBias":
        p = self.pieces.copy()
        p[:, 0] -= c
        return PiecewiseAffineBias(p)

    def max_plus(self, other: "PiecewiseAffineBias", c_self: float = 0.0,
                 c_other: float = 0.0) -> "PiecewiseAffineBias":
        """(self - c_self) v (other - c_other)."""
        return PiecewiseAffineBias(
            np.vstack([self.shifted(c_self).pieces, other.shifted(c_other).pieces]))

    def as_state_function(self):
        """Adapter evaluating on (m, 1, 3) population states."""
        def fn(states):
            s = np.asarray(states, dtype=np.float64)
            return self(s[..., 0, 0], s[..., 0, 2])
        return fn


def _kolmogorov_backup(a: float, piece):
    # image of an affine piece under the constant-action backup at a
    c0, c1, c3 = piece
    return (
        (1 - a) ** 2 + a ** 2 + c0 + c1 * (1 - a) + c3 * a,
        -a ** 2 - c3 * a,
        -(1 - a) ** 2 - c1 * (1 - a),
    )


def analytic_eigenvector(a0: float, lam: float = 0.0) -> PiecewiseAffineBias:
    """The closed-form eigenvector v_lam of the counterexample.

    v_k (k = 0, 1) is the max of the two steady-state-centered linear biases
    plus one extra piece produced by backing the own-action bias up through
    the opposite action; v_lam interpolates between v0 and v1 in the max-plus
    sense, with lam = 0, 1 mapping to v0, v1 exactly (the infinite offset of
    the other branch drops out).
    """
    if not 0.0 < a0 < 0.5:
        raise ValueError("a0 must lie in (0, 1/2)")
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lam must lie in [0, 1]")
    actions = (a0, 1.0 - a0)
    gain = kolmogorov_coefficients(a0)[0]  # equal for both endpoint actions

    def linear_bias(j):
        _, alpha, beta = kolmogorov_coefficients(actions[j])
        return np.array([0.0, alpha, beta])

    def centered(i, j):
        mu = counterexample_steady_state(actions[i])
        piece = linear_bias(j)
        shift = piece[1] * mu[0] + piece[2] * mu[2]
        return np.array([-shift, piece[1], piece[2]])

    def v_k(k):
        own = centered(k, k)
        other = centered(k, 1 - k)
        backed = np.asarray(_kolmogorov_backup(actions[1 - k], own))
        backed[0] -= gain
        return PiecewiseAffineBias(np.vstack([own, other, backed]))

    if lam == 0.0:
        return v_k(0)
    if lam == 1.0:
        return v_k(1)
    return v_k(0).max_plus(v_k(1), lam / (1 - lam), (1 - lam) / lam)


@dataclass
class InvariantRegion:
    """Convex hull (in (mu_1, mu_3)) of the one-step image of the simplex."""

    vertices: np.ndarray  # (m, 2) counter-clockwise hull vertices

    def contains(self, pts, tol: float = 1e-12) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        inside = np.ones(pts.shape[0], dtype=bool)
        verts = self.vertices
        for i in range(verts.shape[0]):
            p, q = verts[i], verts[(i + 1) % verts.shape[0]]
            cross = ((q[0] - p[0]) * (pts[:, 1] - p[1])
                     - (q[1] - p[1]) * (pts[:, 0] - p[0]))
            inside &= cross >= -tol
        return inside

    def sample(self, count: int, seed: int = 0) -> np.ndarray:
        """Random points of the region: convex combinations of its vertices."""
        rng = np.random.default_rng(seed)
        w = rng.dirichlet(np.ones(self.vertices.shape[0]), size=count)
        return w @ self.vertices


def _convex_hull_2d(pts):
    # Andrew monotone chain, counter-clockwise
    pts = sorted(set(map(tuple, np.round(pts, 15))))
    if len(pts) <= 2:
        return np.asarray(pts, dtype=np.float64)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.asarray(lower[:-1] + upper[:-1], dtype=np.float64)


def invariant_region(a0: float) -> InvariantRegion:
    """Hull of the simplex vertices pushed through the endpoint kernels.

    Kernel rows are affine in the action, so pushing the three simplex
    vertices through the two endpoint matrices spans the whole one-step
    image over the action interval.
    """
    if not 0.0 < a0 < 0.5:
        raise ValueError("a0 must lie in (0, 1/2)")
    rows = []
    for a in (a0, 1.0 - a0):
        p = np.array([[1 - a, a, 0.0], [1 - a, 0.0, a], [0.0, 1 - a, a]])
        rows.append(p[:, [0, 2]])
    return InvariantRegion(vertices=_convex_hull_2d(np.vstack(rows)))


def eigen_residual(model: MeanFieldModel, states, h, gain: float) -> float:
    """max over sample states of |max_a [r(a, mu P(a)) + h(mu P(a))] - h - g|.

    ``h`` is a callable on (m, K, N) state arrays and is evaluated exactly at
    the pushed-forward states (exact continuation), so the residual isolates
    the eigenproblem error from any discretization.
    """
    states = np.asarray(states, dtype=np.float64)
    if states.ndim == 2:
        states = states[None, ...]
    base = np.asarray(h(states), dtype=np.float64)
    best = np.full(states.shape[0], -np.inf)
    for ai in range(model.n_actions):
        pushed = np.einsum("vkn,knm->vkm", states, model.transitions[:, ai])
        rew = np.einsum("k,vkn,kn->v", model.rho, pushed, model.thetas[:, ai])
        np.maximum(best, rew + np.asarray(h(pushed), dtype=np.float64), out=best)
    return float(np.abs(best - base - gain).max())


def eigen_residual_grid(model: MeanFieldModel, grid, h_array, gain: float,
                        operator=None) -> float:
    """Residual of a grid bias under the interpolated Bellman operator."""
    from .rvi import GridBellman

    op = operator if operator is not None else GridBellman(model, grid)
    h = np.asarray(h_array, dtype=np.float64).reshape(op.shape)
    image, _ = op.apply(h)
    return float(np.abs(image - h - gain).max())


def counterexample_states(mu13) -> np.ndarray:
    """Lift (m, 2) sub-simplex coordinates to (m, 1, 3) population states."""
    mu13 = np.atleast_2d(np.asarray(mu13, dtype=np.float64))
    out = np.empty((mu13.shape[0], 1, 3))
    out[:, 0, 0] = mu13[:, 0]
    out[:, 0, 2] = mu13[:, 1]
    out[:, 0, 1] = 1.0 - mu13.sum(axis=1)
    return out
