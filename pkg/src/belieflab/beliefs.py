"""Belief formation: priors, posterior rules, and decision thresholds.

Beliefs are tracked as odds of state 1 against state 2. An agent in mental
state s with realized prior odds rho_tilde holds posterior odds
rho_tilde * lam * d**s and takes action 1 whenever the posterior clears the
stakes ratio Gamma = gamma / (1 - gamma).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .signals import PVector

__all__ = [
    "PriorModel",
    "BeliefStrategy",
    "BayesParams",
    "Stakes",
    "posterior",
    "decision_threshold",
    "prior_exceed_prob",
    "threshold_mass",
    "bayes_params",
]

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class PriorModel:
    """Noisy prior odds: log(rho_tilde) ~ Normal(log(rho), sigma_log**2).

    sigma_log = 0 collapses to the deterministic prior rho_tilde = rho.
    """

    rho: float
    sigma_log: float = 0.0

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho!r}")
        if self.sigma_log < 0:
            raise ValueError("sigma_log must be nonnegative")

    @classmethod
    def from_probability(cls, pi: float, sigma_log: float = 0.0) -> "PriorModel":
        if not 0.0 < pi < 1.0:
            raise ValueError("pi must lie in (0, 1)")
        return cls(rho=pi / (1.0 - pi), sigma_log=sigma_log)


@dataclass(frozen=True)
class BeliefStrategy:
    """Agent-tunable posterior rule rho_tilde * lam * d**s.

    d is the discriminatory power granted to the mental system (d = 1 keeps
    the prior); lam shifts all posteriors by a constant factor.
    """

    d: float
    lam: float = 1.0

    def __post_init__(self):
        if not self.d >= 1.0:
            raise ValueError(f"d must be >= 1, got {self.d!r}")
        if not self.lam > 0.0:
            raise ValueError(f"lam must be positive, got {self.lam!r}")


@dataclass(frozen=True)
class BayesParams:
    """Posterior-rule parameters that replicate exact Bayesian updating.

    Unlike BeliefStrategy, d may fall below 1 (the chain then leans against
    its own labels and the Bayes rule reads the mental state inverted).
    ``degenerate`` marks boundary dynamics whose posteriors are point
    beliefs; d and lam are NaN there.
    """

    d: float
    lam: float
    degenerate: bool = False


@dataclass(frozen=True)
class Stakes:
    """Payoff weight gamma on acting right in state 2, as odds Gamma."""

    gamma: float

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma!r}")

    @property
    def ratio(self) -> float:
        if self.gamma == 1.0:
            return math.inf
        return self.gamma / (1.0 - self.gamma)


def posterior(strategy, rho_tilde: float, s: int) -> float:
    """Posterior odds of state 1 in mental state s."""
    return rho_tilde * strategy.lam * strategy.d**s


def decision_threshold(strategy, rho_tilde: float, Gamma: float, K: int) -> int:
    """Smallest mental state whose posterior clears Gamma.

    Returns -K when even the lowest state acts 1 and K + 1 when no state
    does. Indifference counts as acting 1 (the ">= Gamma" convention is used
    everywhere). Requires d >= 1 so that posteriors rise with the state.
    """
    if not strategy.d >= 1.0:
        raise ValueError("decision_threshold assumes d >= 1")
    for s in range(-K, K + 1):
        if posterior(strategy, rho_tilde, s) >= Gamma:
            return s
    return K + 1


def prior_exceed_prob(prior: PriorModel, t: float) -> float:
    """Pr(rho_tilde >= t) for the lognormal prior, exact via erfc."""
    if t == math.inf:
        return 0.0
    if t <= 0.0:
        if t == 0.0:
            return 1.0
        raise ValueError(f"threshold t must be positive, got {t!r}")
    if prior.sigma_log == 0.0:
        return 1.0 if prior.rho >= t else 0.0
    z = (math.log(prior.rho) - math.log(t)) / prior.sigma_log
    return 0.5 * math.erfc(-z / _SQRT2)


def threshold_mass(
    prior: PriorModel, strategy, Gamma: float, K: int
) -> np.ndarray:
    """Law of the decision threshold over prior noise.

    Entry j is Pr(threshold = j - K) for j = 0..2K, and the last entry is
    the probability that no state acts (threshold K + 1). d = 1 collapses to
    the two-point law on {-K, K + 1}.
    """
    d, lam = strategy.d, strategy.lam
    if not d >= 1.0:
        raise ValueError("threshold_mass assumes d >= 1")
    out = np.zeros(2 * K + 2)
    if d == 1.0:
        act = prior_exceed_prob(prior, Gamma / lam)
        out[0] = act
        out[-1] = 1.0 - act
        return out
    # Pr(threshold <= k) = Pr(rho_tilde >= Gamma / (lam * d**k))
    cum = np.array(
        [
            prior_exceed_prob(prior, Gamma / (lam * d**k))
            for k in range(-K, K + 1)
        ]
    )
    out[0] = cum[0]
    out[1 : 2 * K + 1] = np.maximum(np.diff(cum), 0.0)
    out[-1] = max(1.0 - cum[-1], 0.0)
    return out


def bayes_params(p: PVector, K: int) -> BayesParams:
    """Posterior-rule parameters of the exact Bayes rule for dynamics p.

    d is the per-state posterior step r1 / r2 and lam compares the
    normalizing weights of the two long-run distributions, so
    rho * lam * d**s equals the true posterior odds in state s. Boundary
    dynamics are flagged degenerate instead of producing parameters.
    """
    if not p.interior:
        return BayesParams(d=math.nan, lam=math.nan, degenerate=True)
    r1, r2 = p.r1, p.r2
    s = np.arange(-K, K + 1, dtype=float)
    lam = float(np.sum(r2**s) / np.sum(r1**s))
    return BayesParams(d=r1 / r2, lam=lam, degenerate=False)
