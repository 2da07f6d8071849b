"""Lagrangian dual upper bounds on the optimal average gain.

For a test map phi applied coordinatewise to the population state, the
Lagrangian

    L(a, mu, lam) = r(a, mu P(a)) + <lam, phi(mu P(a)) - phi(mu)>

satisfies  gbar <= g* <= inf_lam max_{a,mu} L(a, mu, lam):  along any
trajectory the penalty telescopes, so every lam gives an upper bound on the
achievable average reward, while stationary pairs make the penalty vanish.
A zero gap between the best bound and the steady-state gain certifies that a
constant action is optimal.

The power maps p in {1, 2, 3, 4} used here send the simplex outside itself
(they are real-valued test functions, injective on nonnegative coordinates),
which is all the telescoping argument needs; the inner maximization runs
over the action grid times a simplex grid, so the reported bound is the grid
relaxation of the continuous one.
"""

from dataclasses import dataclass, field

import numpy as np

from .model import MeanFieldModel
from .simplex import SimplexGrid
from .steady import optimal_steady_state

__all__ = ["PowerMap", "power_phi", "lagrangian_value", "DualBoundResult", "dual_bound"]


@dataclass(frozen=True)
class PowerMap:
    """Coordinatewise power applied per cluster, flattened to length K*N."""

    power: int

    def __call__(self, states: np.ndarray) -> np.ndarray:
        """states (..., K, N) -> (..., K*N)."""
        s = np.asarray(states, dtype=np.float64)
        return (s ** self.power).reshape(*s.shape[:-2], -1)

    @property
    def name(self):
        return f"power{self.power}"


def power_phi(power: int) -> PowerMap:
    if power < 1:
        raise ValueError("power must be >= 1")
    return PowerMap(int(power))


def lagrangian_value(model: MeanFieldModel, phi, action_index: int, mu, lam) -> float:
    """Exact evaluation of L(a, mu, lam)."""
    mu = np.asarray(mu, dtype=np.float64).reshape(model.n_clusters, model.n_states)
    lam = np.asarray(lam, dtype=np.float64).ravel()
    pushed = model.push(action_index, mu)
    base = model.reward(action_index, pushed)
    return base + float(lam @ (phi(pushed) - phi(mu)))


@dataclass
class DualBoundResult:
    phi_name: str
    bound: float                 # best (smallest) certified inner max
    lam: np.ndarray              # multiplier achieving the best bound
    achiever: tuple              # (action_index, node_index) of the inner max at lam
    iterations: int
    converged: bool              # False if the multiplier diverged
    trace: list = field(default_factory=list)  # inner-max value per iteration


def dual_bound(model: MeanFieldModel, phi, grid: SimplexGrid, lam0=None,
               max_iters: int = 2000, lower_target: float | None = None,
               target_tol: float = 1e-9) -> DualBoundResult:
    """Minimize the inner maximum of the Lagrangian over the multiplier.

    The inner max is an exhaustive scan over (action grid) x (simplex grid
    per cluster); the outer problem is convex piecewise affine in lam and is
    descended with subgradients phi(mu* P(a*)) - phi(mu*), using a Polyak
    step against ``lower_target`` (the steady-state gain when not supplied)
    and a 1/t fallback.  The reported bound is the smallest inner max seen,
    hence never increasing in the iteration count.
    """
    k_, n_ = model.n_clusters, model.n_states
    if grid.n_states != n_:
        raise ValueError("grid dimension does not match the model")
    if lower_target is None:
        lower_target = optimal_steady_state(model, refine_rounds=0).gain

    # all global nodes as (V, K, N) states; V = M^K
    m = grid.size
    v = m ** k_
    table_bytes = model.n_actions * v * (k_ * n_ + 1) * 8
    if table_bytes > 2_000_000_000:
        raise ValueError(
            f"dual-bound scan table would need {table_bytes/1e9:.1f} GB; "
            "use a coarser grid for the inner maximization")
    axes = np.unravel_index(np.arange(v), (m,) * k_)
    states = np.stack([grid.points[axes[k]] for k in range(k_)], axis=1)

    na = model.n_actions
    base = np.empty((na, v))
    dphi = np.empty((na, v, k_ * n_))
    phis = phi(states)
    for ai in range(na):
        pushed = np.einsum("vkn,knm->vkm", states, model.transitions[:, ai])
        base[ai] = np.einsum("k,vkn,kn->v", model.rho, pushed, model.thetas[:, ai])
        dphi[ai] = phi(pushed) - phis

    lam = (np.zeros(k_ * n_) if lam0 is None
           else np.array(lam0, dtype=np.float64).ravel().copy())
    best = np.inf
    best_lam = lam.copy()
    best_arg = (0, 0)
    trace = []
    converged = True
    it = 0
    for it in range(1, max_iters + 1):
        vals = base + dphi @ lam
        flat = int(np.argmax(vals))
        ai, node = np.unravel_index(flat, vals.shape)
        f = float(vals[ai, node])
        trace.append(f)
        if f < best:
            best, best_lam, best_arg = f, lam.copy(), (int(ai), int(node))
        if f - lower_target <= target_tol:
            break  # bound met the lower bound, gap certified zero
        sg = dphi[ai, node]
        nrm2 = float(sg @ sg)
        step = (f - lower_target) / nrm2 if nrm2 > 1e-18 else 1.0 / it
        lam = lam - step * sg
        if np.linalg.norm(lam) > 1e8:
            converged = False
            break
    return DualBoundResult(phi_name=getattr(phi, "name", "phi"), bound=best,
                           lam=best_lam, achiever=best_arg, iterations=it,
                           converged=converged, trace=trace)
