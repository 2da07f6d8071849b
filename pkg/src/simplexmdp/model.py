"""Controlled population models: clusters, action grids, transition kernels
and linear rewards, with the logit pricing family and the three-state
counterexample as built-in constructors.

State convention: the population state is a (K, N) array, one probability
row per cluster.  Actions live on a finite grid; solvers address them by
index.  A single time step under action ``a`` maps row ``mu_k`` to
``mu_k @ P_k(a)``, and the stage reward is collected on the post-transition
state: ``r(a, mu P(a)) = sum_k rho_k <theta_k(a), mu_k P_k(a)>``.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .simplex import contraction_coefficient

__all__ = [
    "MeanFieldModel",
    "PricingModel",
    "AssumptionReport",
    "pricing_model",
    "counterexample_model",
    "raw_model",
    "logit_transition",
    "instantaneous_logit",
    "check_assumptions",
]


def _softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass(frozen=True)
class PricingModel:
    """Logit pricing data: K customer segments choosing among N-1 priced
    offers plus a fixed outside option (state N, zero utility, zero reward).

    gamma has one switching-cost entry per *state* (including the outside
    option): it is the bonus for keeping the currently held option.
    """

    rho: np.ndarray          # (K,)
    reservation: np.ndarray  # (K, N-1)
    consumption: np.ndarray  # (K, N-1)
    cost: np.ndarray         # (K, N-1)
    gamma: np.ndarray        # (K, N)
    beta: float
    price_min: np.ndarray    # (N-1,)
    price_max: np.ndarray    # (N-1,)
    price_steps: int

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if (self.gamma < 0).any():
            raise ValueError("switching costs must be nonnegative")
        if (self.price_min >= self.price_max).any():
            raise ValueError("price_min must be below price_max")

    @property
    def n_clusters(self):
        return self.rho.shape[0]

    @property
    def n_states(self):
        return self.reservation.shape[1] + 1

    def utilities(self, k: int, a) -> np.ndarray:
        """U_n = R_n - E_n * a_n for offers, 0 for the outside option."""
        a = np.atleast_1d(np.asarray(a, dtype=np.float64))
        u = np.empty(self.n_states)
        u[:-1] = self.reservation[k] - self.consumption[k] * a
        u[-1] = 0.0
        return u

    def unitary_reward(self, k: int, a) -> np.ndarray:
        a = np.atleast_1d(np.asarray(a, dtype=np.float64))
        th = np.empty(self.n_states)
        th[:-1] = self.consumption[k] * a - self.cost[k]
        th[-1] = 0.0
        return th

    def action_grid(self) -> np.ndarray:
        axes = [np.linspace(self.price_min[i], self.price_max[i], self.price_steps)
                for i in range(self.n_states - 1)]
        return np.array(list(itertools.product(*axes)))

    def uniform_gamma(self) -> bool:
        return bool(np.all(self.gamma == self.gamma[:, :1]))


def instantaneous_logit(pricing: PricingModel, k: int, a) -> np.ndarray:
    """Softmax choice distribution over the N options absent switching costs."""
    return _softmax(pricing.beta * pricing.utilities(k, a))


def logit_transition(pricing: PricingModel, k: int, a) -> np.ndarray:
    """Row-stochastic logit kernel with a switching bonus on the diagonal.

    Row n is the softmax of beta*(U + gamma_n e_n); computed max-shifted so
    beta*gamma up to ~700 stays finite.
    """
    n = pricing.n_states
    z = pricing.beta * pricing.utilities(k, a)
    zz = np.tile(z, (n, 1))
    zz[np.arange(n), np.arange(n)] += pricing.beta * pricing.gamma[k]
    return _softmax(zz)


@dataclass(frozen=True)
class MeanFieldModel:
    """Finite-action population model with precomputed kernels.

    transitions[k, a] is the N x N row-stochastic kernel of cluster k under
    action index a; thetas[k, a] the matching unitary-reward vector.
    primitivity_power is the smallest L for which products of L kernels are
    expected entrywise positive (1 for logit models).
    """

    rho: np.ndarray          # (K,)
    actions: np.ndarray      # (nA, action_dim)
    transitions: np.ndarray  # (K, nA, N, N)
    thetas: np.ndarray       # (K, nA, N)
    reward_bound: float
    primitivity_power: int = 1
    name: str = "model"
    pricing: PricingModel | None = None
    action_bounds: tuple | None = None  # ((lo,...), (hi,...)) when actions fill a box

    @property
    def n_clusters(self):
        return self.rho.shape[0]

    @property
    def n_states(self):
        return self.transitions.shape[2]

    @property
    def n_actions(self):
        return self.actions.shape[0]

    def transition(self, k: int, action_index: int) -> np.ndarray:
        return self.transitions[k, action_index]

    def unitary_reward(self, k: int, action_index: int) -> np.ndarray:
        return self.thetas[k, action_index]

    def reward(self, action_index: int, mu) -> float:
        """r(a, mu) = sum_k rho_k <theta_k(a), mu_k>; linear in mu."""
        mu = np.asarray(mu, dtype=np.float64).reshape(self.n_clusters, self.n_states)
        return float(np.einsum("k,kn,kn->", self.rho, self.thetas[:, action_index], mu))

    def push(self, action_index: int, mu) -> np.ndarray:
        """One transition step: each cluster row multiplied by its kernel."""
        mu = np.asarray(mu, dtype=np.float64).reshape(self.n_clusters, self.n_states)
        return np.einsum("kn,knm->km", mu, self.transitions[:, action_index])

    def step_reward(self, action_index: int, mu) -> float:
        """Stage reward collected on the post-transition state, r(a, mu P(a))."""
        return self.reward(action_index, self.push(action_index, mu))


def pricing_model(pricing: PricingModel, name: str = "pricing") -> MeanFieldModel:
    """Materialize kernels and rewards of a logit pricing model on its price grid."""
    acts = pricing.action_grid()
    k_, n_, na = pricing.n_clusters, pricing.n_states, acts.shape[0]
    trans = np.empty((k_, na, n_, n_))
    thetas = np.empty((k_, na, n_))
    for k in range(k_):
        for ai, a in enumerate(acts):
            trans[k, ai] = logit_transition(pricing, k, a)
            thetas[k, ai] = pricing.unitary_reward(k, a)
    bound = float(np.abs(thetas).max())
    return MeanFieldModel(
        rho=pricing.rho.copy(), actions=acts, transitions=trans, thetas=thetas,
        reward_bound=bound, primitivity_power=1, name=name, pricing=pricing,
        action_bounds=(tuple(pricing.price_min), tuple(pricing.price_max)),
    )


def single_offer_pricing(consumption, reservation, cost, beta, gamma,
                         price_min, price_max, price_steps) -> MeanFieldModel:
    """Convenience builder for the one-cluster, one-offer (two-state) model."""
    pm = PricingModel(
        rho=np.array([1.0]),
        reservation=np.array([[float(reservation)]]),
        consumption=np.array([[float(consumption)]]),
        cost=np.array([[float(cost)]]),
        gamma=np.full((1, 2), float(gamma)),
        beta=float(beta),
        price_min=np.array([float(price_min)]),
        price_max=np.array([float(price_max)]),
        price_steps=int(price_steps),
    )
    return pricing_model(pm, name="pricing-1d")


def counterexample_model(a0: float, action_count: int = 2) -> MeanFieldModel:
    """Three-state single-cluster chain with non-unique bias.

    Kernel rows (1-a, a, 0), (1-a, 0, a), (0, 1-a, a); rewards (1-a, 0, a);
    actions on [a0, 1-a0].  Products of two kernels are entrywise positive,
    so the primitivity power is 2.  The endpoint actions always belong to the
    grid (for convex bias candidates the maximum sits there).
    """
    if not 0.0 < a0 < 0.5:
        raise ValueError("a0 must lie in (0, 1/2)")
    if action_count < 2:
        raise ValueError("action_count must be >= 2")
    acts = np.linspace(a0, 1.0 - a0, action_count)[:, None]
    trans = np.empty((1, action_count, 3, 3))
    thetas = np.empty((1, action_count, 3))
    for ai, (a,) in enumerate(acts):
        trans[0, ai] = [[1 - a, a, 0.0], [1 - a, 0.0, a], [0.0, 1 - a, a]]
        thetas[0, ai] = [1 - a, 0.0, a]
    return MeanFieldModel(
        rho=np.array([1.0]), actions=acts, transitions=trans, thetas=thetas,
        reward_bound=1.0, primitivity_power=2, name="counterexample",
        action_bounds=((a0,), (1.0 - a0,)),
    )


def raw_model(rho, actions, transitions, rewards, reward_bound=None,
              primitivity_power=1, name="raw") -> MeanFieldModel:
    """Model from explicit per-(cluster, action) kernels and reward vectors."""
    rho = np.asarray(rho, dtype=np.float64)
    actions = np.asarray(actions, dtype=np.float64)
    if actions.ndim == 1:  # scalar actions
        actions = actions[:, None]
    trans = np.asarray(transitions, dtype=np.float64)
    thetas = np.asarray(rewards, dtype=np.float64)
    if trans.ndim != 4 or thetas.ndim != 3:
        raise ValueError("transitions must be (K, nA, N, N) and rewards (K, nA, N)")
    if trans.shape[0] != rho.shape[0] or trans.shape[1] != actions.shape[0]:
        raise ValueError("dimension mismatch between rho, actions and transitions")
    if trans.shape[2] != trans.shape[3] or thetas.shape[2] != trans.shape[2]:
        raise ValueError("kernel/reward state dimension mismatch")
    bound = float(np.abs(thetas).max()) if reward_bound is None else float(reward_bound)
    return MeanFieldModel(rho=rho, actions=actions, transitions=trans, thetas=thetas,
                          reward_bound=bound, primitivity_power=int(primitivity_power),
                          name=name)


@dataclass
class AssumptionReport:
    """Checked model assumptions; violations are collected, never thrown."""

    rows_stochastic: bool
    row_sum_error: float
    primitive: bool
    primitivity_power: int
    reward_bounded: bool
    reward_max_abs: float
    kappa_max: float
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations


def check_assumptions(model: MeanFieldModel, max_sequences: int = 4096) -> AssumptionReport:
    """Verify row-stochasticity, L-fold positivity and the reward bound.

    Positivity is checked over all action sequences of length
    ``primitivity_power`` (up to ``max_sequences``; beyond that a deterministic
    stride subsample is used).  kappa_max is the worst Birkhoff coefficient of
    the (products of) kernels, the contraction rate driving every convergence
    argument in the package.
    """
    violations = []

    sums = model.transitions.sum(axis=3)
    row_err = float(np.abs(sums - 1.0).max())
    rows_ok = row_err <= 1e-12 and model.transitions.min() >= 0.0
    if not rows_ok:
        violations.append(f"transition rows not stochastic (max error {row_err:.2e})")

    level = model.primitivity_power
    seqs = list(itertools.product(range(model.n_actions), repeat=level))
    if len(seqs) > max_sequences:
        stride = max(1, len(seqs) // max_sequences)
        seqs = seqs[::stride]
    primitive = True
    kappa_max = 0.0
    for k in range(model.n_clusters):
        for seq in seqs:
            q = np.eye(model.n_states)
            for ai in seq:
                q = q @ model.transitions[k, ai]
            if q.min() <= 0.0:
                primitive = False
                violations.append(
                    f"product of {level} kernel(s) has nonpositive entry "
                    f"(cluster {k}, actions {seq})")
                break
            kappa_max = max(kappa_max, contraction_coefficient(q))
        if not primitive:
            break

    max_abs = float(np.abs(model.thetas).max())
    reward_ok = max_abs <= model.reward_bound + 1e-12
    if not reward_ok:
        violations.append(
            f"unitary reward {max_abs:.6g} exceeds declared bound {model.reward_bound:.6g}")

    return AssumptionReport(
        rows_stochastic=rows_ok, row_sum_error=row_err,
        primitive=primitive, primitivity_power=level,
        reward_bounded=reward_ok, reward_max_abs=max_abs,
        kappa_max=kappa_max if primitive else 1.0,
        violations=violations,
    )
