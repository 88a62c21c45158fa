"""Core system model: transmit parameters, channel laws, per-realization rates.

Rates are expressed in bits per channel use (base-2 logarithms throughout).
All functions accept scalars or numpy arrays and broadcast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

LN2 = math.log(2.0)


@dataclass(frozen=True)
class SystemParams:
    """Total transmit power and normalized timing offset of the downlink.

    ``q_factor`` caches 2*tau*(1-tau), the sampling-diversity factor of the
    offset transmission: it is 0 at tau=0 (synchronous) and peaks at 0.5
    for tau=0.5.
    """

    total_power: float
    tau: float = 0.0
    q_factor: float = field(init=False)

    def __post_init__(self):
        if not self.total_power > 0.0:
            raise ValueError(f"total_power must be positive, got {self.total_power}")
        if not 0.0 <= self.tau < 1.0:
            raise ValueError(f"tau must lie in [0, 1), got {self.tau}")
        object.__setattr__(self, "q_factor", 2.0 * self.tau * (1.0 - self.tau))

    def synchronous(self) -> "SystemParams":
        """Same power budget with the timing offset removed."""
        return SystemParams(self.total_power, 0.0)


@dataclass(frozen=True)
class ChannelDistribution:
    """Exponential law on a user's channel gain.

    ``rate_param`` is the rate lambda of the density lambda*exp(-lambda*x),
    so the mean gain is 1/lambda.
    """

    rate_param: float

    def __post_init__(self):
        if not self.rate_param > 0.0:
            raise ValueError(f"rate_param must be positive, got {self.rate_param}")

    @property
    def mean_gain(self) -> float:
        return 1.0 / self.rate_param

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return self.rate_param * np.exp(-self.rate_param * x)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return -np.expm1(-self.rate_param * x)

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        return -np.log1p(-p) / self.rate_param

    def sample(self, rng: np.random.Generator, n: int):
        return rng.exponential(self.mean_gain, size=n)


def rate_strong(h, alpha, params: SystemParams):
    """Rate of the SIC-performing user: log2(1 + alpha*P*h).

    The timing offset only benefits the weak user, so this is the same for
    synchronous and offset transmission.
    """
    h = np.asarray(h, dtype=float)
    return np.log1p(alpha * params.total_power * h) / LN2


def rate_weak(h, alpha, params: SystemParams):
    """Rate of the non-SIC user under superposed (possibly offset) signals.

    With q_factor = 0 this reduces to log2((1 + P*h) / (1 + alpha*P*h)),
    the synchronous weak-user rate; a positive q_factor only increases it.
    """
    h = np.asarray(h, dtype=float)
    ph = params.total_power * h
    one_plus_ph = 1.0 + ph
    cross = alpha * (1.0 - alpha) * ph * ph * params.q_factor
    a_term = one_plus_ph + cross
    # radicand written as (A - B)(A + B); A - B equals 1 + P*h identically,
    # which keeps the difference of squares away from cancellation
    radicand = one_plus_ph * (a_term + cross)
    assert np.all(radicand >= one_plus_ph * one_plus_ph * (1.0 - 1e-12))
    numerator = a_term + np.sqrt(radicand)
    return np.log2(numerator / (2.0 * (1.0 + alpha * ph)))


def rate_pair(h_strong, h_weak, alpha, params: SystemParams):
    """Both users' rates for one channel realization."""
    return rate_strong(h_strong, alpha, params), rate_weak(h_weak, alpha, params)
