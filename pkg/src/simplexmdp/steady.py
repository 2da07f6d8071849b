"""Stationary distributions, the optimal steady-state gain, majorization
diagnostics, and the inertia-independent bound on the steady-state gain.

For the logit pricing kernel the stationary law has a closed form driven by
the instantaneous response mu_L:

    mu_bar_n  proportional to  eta_n * mu_L_n,
    eta_n = 1 + (e^{beta*gamma_n} - 1) * mu_L_n,

computed in log space so large beta*gamma cannot overflow.  A generic power
iteration serves as the independent oracle.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .model import MeanFieldModel, PricingModel, instantaneous_logit

__all__ = [
    "SteadyStateResult",
    "stationary_logit",
    "stationary_power",
    "stationary_distribution",
    "optimal_steady_state",
    "majorizes",
    "gain_upper_bound",
]


def stationary_logit(pricing: PricingModel, k: int, a) -> np.ndarray:
    """Closed-form stationary law of the logit kernel for a constant action."""
    z = pricing.beta * pricing.utilities(k, a)
    log_mu_l = z - logsumexp(z)
    # log eta = log(1 - mu_L + e^{beta gamma} mu_L), overflow-safe
    log_eta = np.logaddexp(np.log1p(-np.exp(log_mu_l)),
                           pricing.beta * pricing.gamma[k] + log_mu_l)
    w = log_eta + log_mu_l
    return np.exp(w - logsumexp(w))


def stationary_power(p, tol: float = 1e-12, max_iter: int = 100_000):
    """Left fixed point of a row-stochastic kernel by power iteration.

    Geometric convergence at the Birkhoff rate for positive (or primitive)
    kernels; raises if entries are negative, returns the last iterate with a
    warning flag in the exception message if the cap is hit.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValueError("expected a square matrix")
    if p.min() < 0.0:
        raise ValueError("kernel entries must be nonnegative")
    if np.abs(p.sum(axis=1) - 1.0).max() > 1e-9:
        raise ValueError("kernel rows must sum to 1")
    mu = np.full(p.shape[0], 1.0 / p.shape[0])
    for _ in range(max_iter):
        nxt = mu @ p
        if np.abs(nxt - mu).max() <= tol:
            return nxt / nxt.sum()
        mu = nxt
    raise RuntimeError(f"power iteration did not reach tol={tol} in {max_iter} steps")


def stationary_distribution(model: MeanFieldModel, action_index: int) -> np.ndarray:
    """Per-cluster stationary laws (K, N) under a constant action."""
    if model.pricing is not None:
        a = model.actions[action_index]
        return np.stack([stationary_logit(model.pricing, k, a)
                         for k in range(model.n_clusters)])
    return np.stack([stationary_power(model.transitions[k, action_index])
                     for k in range(model.n_clusters)])


@dataclass
class SteadyStateResult:
    action: np.ndarray          # maximizing action vector
    action_index: int           # grid index of the incumbent before refinement
    mu: np.ndarray              # (K, N) stationary law at the returned action
    gain: float                 # r(action, mu)
    trace: list = field(default_factory=list)  # (action tuple, gain) evaluations


def _steady_gain_at(model: MeanFieldModel, a) -> tuple[float, np.ndarray]:
    # evaluable at off-grid actions only for pricing models
    pricing = model.pricing
    mus = np.stack([stationary_logit(pricing, k, a) for k in range(model.n_clusters)])
    ths = np.stack([pricing.unitary_reward(k, a) for k in range(model.n_clusters)])
    return float(np.einsum("k,kn,kn->", pricing.rho, ths, mus)), mus


def optimal_steady_state(model: MeanFieldModel, refine_rounds: int = 3) -> SteadyStateResult:
    """Best constant action: grid scan plus local step-halving refinement.

    The scan keeps the smallest action index on exact ties.  Refinement (only
    for models with a continuous action box and closed-form stationary law)
    halves the grid step ``refine_rounds`` times around the incumbent; the
    objective is nonconvex, so the result is the best local candidate found,
    not a certified global maximum.
    """
    trace = []
    best_gain, best_idx = -np.inf, 0
    for ai in range(model.n_actions):
        mu = stationary_distribution(model, ai)
        g = model.reward(ai, mu)
        trace.append((tuple(model.actions[ai]), g))
        if g > best_gain:
            best_gain, best_idx = g, ai
    action = model.actions[best_idx].copy()
    mu = stationary_distribution(model, best_idx)

    if refine_rounds > 0 and model.pricing is not None and model.action_bounds is not None:
        lo = np.asarray(model.action_bounds[0])
        hi = np.asarray(model.action_bounds[1])
        steps = (hi - lo) / max(model.pricing.price_steps - 1, 1)
        dim = action.shape[0]
        for _ in range(refine_rounds):
            steps = steps / 2.0
            moved = True
            while moved:
                moved = False
                for d in range(dim):
                    for sign in (-1.0, 1.0):
                        cand = action.copy()
                        cand[d] = np.clip(cand[d] + sign * steps[d], lo[d], hi[d])
                        g, m = _steady_gain_at(model, cand)
                        trace.append((tuple(cand), g))
                        if g > best_gain + 1e-15:
                            best_gain, action, mu, moved = g, cand, m, True
    return SteadyStateResult(action=action, action_index=best_idx, mu=mu,
                             gain=best_gain, trace=trace)


def majorizes(a, b, tol: float = 1e-12) -> bool:
    """Partial sums of the descending sort of ``a`` dominate those of ``b``."""
    a = np.sort(np.asarray(a, dtype=np.float64))[::-1]
    b = np.sort(np.asarray(b, dtype=np.float64))[::-1]
    if a.shape != b.shape:
        raise ValueError("majorization needs equal dimensions")
    return bool(np.all(np.cumsum(a) >= np.cumsum(b) - tol))


def gain_upper_bound(pricing: PricingModel):
    """max_{k,n}(R - C) + N/(beta e); independent of the switching cost.

    Valid for uniform switching costs within each cluster; returns None
    otherwise (the bound is not claimed in the heterogeneous case).
    """
    if not pricing.uniform_gamma():
        return None
    margin = float((pricing.reservation - pricing.cost).max())
    return margin + pricing.n_states / (pricing.beta * np.e)
