"""One-dimensional toy pricing model: exact price inversion between
consecutive market shares, cycle gains, and the (s, S, tau) promotion-cycle
scan.

A single contract with cost C, reservation price R, rationality beta and
switching cost gamma gives the two-state kernel

    P(a) = [[gh*ah/(1+gh*ah), 1/(1+gh*ah)],
            [ah/(gh+ah),      gh/(gh+ah)]],

with ah = exp(-beta (a - R)) and gh = exp(beta gamma).  Stage profit is
(a - C) * mu on the post-transition share mu.  Requiring mu_prev -> mu_next
in one step pins the price uniquely: ah solves a quadratic whose positive
root is

    ah = (2 mu - kap + sqrt((2 mu - kap)^2 + 4 gh^2 mu (1-mu))) / (2 gh (1-mu)),
    kap = 1 + (gh^2 - 1)(mu_prev - mu_next),

evaluated through the conjugate form 2 gh mu / (kap - 2 mu + sqrt(...)) when
2 mu < kap to avoid cancellation at large gh.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

__all__ = [
    "ToyModel",
    "CycleSpec",
    "price_from_transition",
    "cycle_gain",
    "sSt_trajectory",
    "best_sSt_cycle",
    "scan_sSt",
    "steady_state_gain",
]


@dataclass(frozen=True)
class ToyModel:
    cost: float
    reservation: float
    beta: float
    switching_cost: float

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.switching_cost < 0:
            raise ValueError("switching cost must be nonnegative")

    @property
    def gamma_hat(self) -> float:
        return float(np.exp(self.beta * self.switching_cost))

    def kernel(self, a: float) -> np.ndarray:
        ah = np.exp(-self.beta * (a - self.reservation))
        gh = self.gamma_hat
        return np.array([
            [gh * ah / (1 + gh * ah), 1 / (1 + gh * ah)],
            [ah / (gh + ah), gh / (gh + ah)],
        ])

    def forward(self, mu, a):
        """Next market share from share ``mu`` at price ``a``."""
        ah = np.exp(-self.beta * (np.asarray(a) - self.reservation))
        gh = self.gamma_hat
        return (gh * ah / (1 + gh * ah)) * mu + (ah / (gh + ah)) * (1 - np.asarray(mu))


def price_from_transition(toy: ToyModel, mu_prev, mu_next):
    """The unique price moving the share ``mu_prev -> mu_next`` in one step.

    Both shares must be interior; at the boundary the inversion is undefined.
    Vectorized over array arguments.
    """
    mu_prev = np.asarray(mu_prev, dtype=np.float64)
    mu_next = np.asarray(mu_next, dtype=np.float64)
    if (mu_prev <= 0).any() or (mu_prev >= 1).any() or \
       (mu_next <= 0).any() or (mu_next >= 1).any():
        raise ValueError("market shares must lie strictly inside (0, 1)")
    if toy.switching_cost == 0.0:
        ahat = mu_next / (1.0 - mu_next)
    else:
        gh = toy.gamma_hat
        prev, nxt = np.broadcast_arrays(mu_prev, mu_next)
        shape = nxt.shape
        prev, nxt = np.atleast_1d(prev).ravel(), np.atleast_1d(nxt).ravel()
        kap = 1.0 + (gh * gh - 1.0) * (prev - nxt)
        b = 2.0 * nxt - kap
        root = np.sqrt(b * b + 4.0 * gh * gh * nxt * (1.0 - nxt))
        # conjugate form when b < 0: root can equal -b to machine precision
        # at huge gh, so the subtraction root - b is only safe on that side
        ahat = np.empty_like(b)
        pos = b >= 0.0
        ahat[pos] = (b[pos] + root[pos]) / (2.0 * gh * (1.0 - nxt[pos]))
        ahat[~pos] = 2.0 * gh * nxt[~pos] / (root[~pos] - b[~pos])
        ahat = ahat.reshape(shape)
    price = toy.reservation - np.log(ahat) / toy.beta
    return price if price.ndim else float(price)


def cycle_gain(toy: ToyModel, trajectory):
    """Gain, mean and variance of a cyclic share trajectory.

    ``trajectory`` is (mu_0, ..., mu_tau) with mu_0 = mu_tau; prices are
    reconstructed by inversion and the gain is the mean of (a_t - C) mu_t
    over t = 1..tau.
    """
    traj = np.asarray(trajectory, dtype=np.float64)
    if traj.ndim != 1 or traj.shape[0] < 2:
        raise ValueError("trajectory must be (mu_0, ..., mu_tau)")
    if abs(traj[0] - traj[-1]) > 1e-12:
        raise ValueError("trajectory does not cycle: mu_0 != mu_tau")
    prices = price_from_transition(toy, traj[:-1], traj[1:])
    inner = traj[1:]
    gain = float(np.mean((prices - toy.cost) * inner))
    mean = float(np.mean(inner))
    var = float(np.mean((inner - mean) ** 2))
    return gain, mean, var


@dataclass(frozen=True)
class CycleSpec:
    """An (s, S, tau) promotion cycle: linear decline from S toward s over
    tau steps, then a promotion restoring S.  tau = 1 or s = S degenerate to
    the constant-share policy, amplitude 0."""

    s: float
    S: float
    tau: int
    trajectory: np.ndarray
    prices: np.ndarray
    gain: float
    mean: float
    variance: float

    @property
    def amplitude(self) -> float:
        return self.S - self.s


def sSt_trajectory(s: float, S: float, tau: int) -> np.ndarray:
    """mu_t = S + (s - S) t / tau for t < tau, closed by mu_tau = S."""
    if not (0.0 < s <= S < 1.0):
        raise ValueError("need 0 < s <= S < 1")
    if tau < 1:
        raise ValueError("tau must be >= 1")
    t = np.arange(tau + 1, dtype=np.float64)
    traj = S + (s - S) * t / tau
    traj[-1] = S
    return traj


def make_cycle(toy: ToyModel, s: float, S: float, tau: int) -> CycleSpec:
    if tau == 1:
        s = S  # the ramp value never appears; canonical amplitude is 0
    traj = sSt_trajectory(s, S, tau)
    prices = price_from_transition(toy, traj[:-1], traj[1:])
    gain, mean, var = cycle_gain(toy, traj)
    return CycleSpec(s=s, S=S, tau=tau, trajectory=traj,
                     prices=np.atleast_1d(prices), gain=gain, mean=mean, variance=var)


def best_sSt_cycle(toy: ToyModel, s_grid, S_grid, tau_max: int) -> CycleSpec:
    """Exhaustive scan over s <= S and tau; ties prefer smaller amplitude,
    then smaller period."""
    s_grid = np.asarray(s_grid, dtype=np.float64)
    S_grid = np.asarray(S_grid, dtype=np.float64)
    best = None
    for tau in range(1, tau_max + 1):
        if tau == 1:
            pair_s = pair_S = S_grid
        else:
            si, Si = np.meshgrid(np.arange(s_grid.size), np.arange(S_grid.size),
                                 indexing="ij")
            keep = s_grid[si] <= S_grid[Si]
            pair_s = s_grid[si[keep]]
            pair_S = S_grid[Si[keep]]
        t = np.arange(tau + 1, dtype=np.float64)
        traj = pair_S[:, None] + (pair_s - pair_S)[:, None] * t[None, :] / tau
        traj[:, -1] = pair_S
        prices = price_from_transition(toy, traj[:, :-1], traj[:, 1:])
        gains = ((prices - toy.cost) * traj[:, 1:]).mean(axis=1)
        order = np.lexsort((pair_s, pair_S - pair_s))  # amplitude, then s
        k = order[np.argmax(gains[order])]
        cand = make_cycle(toy, float(pair_s[k]), float(pair_S[k]), tau)
        if best is None or (cand.gain, -cand.amplitude, -cand.tau) > \
                (best.gain, -best.amplitude, -best.tau):
            best = cand
    return best


@dataclass
class CycleScan:
    gammas: np.ndarray
    best: list           # CycleSpec per gamma
    steady_gains: np.ndarray
    kink: float | None   # smallest gamma whose best amplitude exceeds the grid step


def scan_sSt(cost: float, reservation: float, beta: float, gammas,
             step: float = 0.01, tau_max: int = 20) -> CycleScan:
    """Best (s, S, tau)-cycle for each switching cost, with the kink locator.

    The kink is the first gamma whose optimal amplitude exceeds one grid
    step: single-step wiggles that merely straddle the continuous constant
    optimum between two grid values do not count as genuine cycling.
    """
    gammas = np.asarray(gammas, dtype=np.float64)
    grid = np.round(np.arange(step, 1.0, step), 12)
    grid = grid[grid < 1.0]
    best, steady = [], []
    kink = None
    for gam in gammas:
        toy = ToyModel(cost=cost, reservation=reservation, beta=beta,
                       switching_cost=float(gam))
        spec = best_sSt_cycle(toy, grid, grid, tau_max)
        best.append(spec)
        steady.append(steady_state_gain(toy)[0])
        if kink is None and spec.amplitude > step + 1e-12:
            kink = float(gam)
    return CycleScan(gammas=gammas, best=best,
                     steady_gains=np.asarray(steady), kink=kink)


def steady_state_gain(toy: ToyModel, grid_points: int = 4001):
    """Best constant-share profit: coarse scan then bounded 1-D refinement."""
    mus = np.linspace(1e-4, 1 - 1e-4, grid_points)
    prices = price_from_transition(toy, mus, mus)
    vals = (prices - toy.cost) * mus
    i = int(np.argmax(vals))
    lo, hi = mus[max(i - 1, 0)], mus[min(i + 1, grid_points - 1)]

    def neg(mu):
        return -(price_from_transition(toy, mu, mu) - toy.cost) * mu

    res = minimize_scalar(neg, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    if -res.fun >= vals[i]:
        return float(-res.fun), float(res.x)
    return float(vals[i]), float(mus[i])
