"""Max-min power allocation for the two-user downlink.

Four ways to pick the strong user's power coefficient from (quantized)
channel gains: the synchronous closed form, the two offset-transmission
closed-form bounds (z = 0.5 lower, z = 1 upper), and the exact equalizer
found by bisection on the monotone rate gap.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .model import LN2, SystemParams, rate_strong, rate_weak


class AllocationMethod(enum.Enum):
    """Which solver produced a power coefficient."""

    NOMA = "noma"
    ANOMA_Z05 = "anoma_z05"
    ANOMA_Z1 = "anoma_z1"
    ANOMA_EXACT = "anoma_exact"


class SicUser(enum.Enum):
    USER1 = 1
    USER2 = 2


#: z value of each closed-form bound member.
BOUND_Z = {AllocationMethod.ANOMA_Z05: 0.5, AllocationMethod.ANOMA_Z1: 1.0}


class ConvergenceError(RuntimeError):
    """Bisection exhausted its iteration budget; carries the final bracket."""

    def __init__(self, message: str, bracket: tuple[float, float]):
        super().__init__(message)
        self.bracket = bracket


@dataclass(frozen=True)
class AllocationResult:
    alpha: float
    sic_user: SicUser
    method: AllocationMethod
    maxmin_rate: float


@dataclass(frozen=True)
class TheoremCheck:
    """Ordered power coefficients and whether the inequality chain holds."""

    alpha_noma: float
    alpha_lower: float
    alpha_exact: float
    alpha_upper: float
    chain_holds: bool


def _g_values(h1, h2, power, q_factor, z):
    """Denominator of the closed-form coefficient family, vectorized.

    z = 0 recovers the synchronous denominator; the z-term z*P*Hmin^2*Q
    shrinks it, so the coefficient grows with z.
    """
    h1 = np.asarray(h1, dtype=float)
    h2 = np.asarray(h2, dtype=float)
    m = np.minimum(h1, h2)
    s = h1 + h2
    t = z * power * m * m * q_factor
    u = s - t
    return np.sqrt(u * u + 4.0 * m * (power * h1 * h2 + t)) + u


def _closed_form_alpha(h1, h2, power, q_factor, z):
    """2*Hmin / g(z), with the degenerate min-gain-0 case pinned to 0."""
    h1 = np.asarray(h1, dtype=float)
    h2 = np.asarray(h2, dtype=float)
    m = np.minimum(h1, h2)
    g = _g_values(h1, h2, power, q_factor, z)
    positive = m > 0.0
    return np.where(positive, 2.0 * m / np.where(positive, g, 1.0), 0.0)


def noma_alpha_values(h1, h2, power: float):
    """Synchronous closed-form coefficients, vectorized over gain arrays."""
    return _closed_form_alpha(h1, h2, power, 0.0, 0.0)


def bound_alpha_values(h1, h2, params: SystemParams, z: float):
    """Closed-form bound coefficients at parameter z, vectorized."""
    return _closed_form_alpha(h1, h2, params.total_power, params.q_factor, z)


def _rate_gap_sign(alpha, hmax, hmin, power, q_factor):
    """Sign of rate_strong(hmax) - rate_weak(hmin), in the linear domain.

    Equal rates mean (1+a*P*hmax) * 2*(1+a*P*hmin) equals the weak-user
    numerator; comparing those avoids two logarithms per probe.
    """
    ph = power * hmin
    one_plus_ph = 1.0 + ph
    cross = alpha * (1.0 - alpha) * ph * ph * q_factor
    a_term = one_plus_ph + cross
    weak_numerator = a_term + np.sqrt(one_plus_ph * (a_term + cross))
    strong_side = (1.0 + alpha * power * hmax) * 2.0 * (1.0 + alpha * ph)
    return strong_side - weak_numerator


def exact_alpha_values(h1, h2, params: SystemParams, max_iter: int = 120):
    """Equal-rate coefficients by vectorized bisection, to float resolution.

    The rate gap is strictly increasing in alpha with a sign change on
    [0, 1] whenever both gains are positive, so plain bisection converges;
    iteration stops once every bracket has collapsed to adjacent floats.
    """
    h1 = np.asarray(h1, dtype=float)
    h2 = np.asarray(h2, dtype=float)
    hmax = np.maximum(h1, h2)
    hmin = np.minimum(h1, h2)
    lo = np.zeros(np.broadcast(h1, h2).shape)
    hi = np.ones_like(lo)
    power, q = params.total_power, params.q_factor
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        gap = _rate_gap_sign(mid, hmax, hmin, power, q)
        below = gap < 0.0
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 4.0 * np.spacing(lo)):
            break
    alpha = 0.5 * (lo + hi)
    return np.where(hmin > 0.0, alpha, 0.0)


def alpha_for_variant(h1, h2, params: SystemParams, variant: AllocationMethod):
    """Vectorized coefficients for any solver variant.

    The synchronous variant ignores the timing offset entirely, matching a
    tau = 0 system.
    """
    if variant is AllocationMethod.NOMA:
        return noma_alpha_values(h1, h2, params.total_power)
    if variant in BOUND_Z:
        return bound_alpha_values(h1, h2, params, BOUND_Z[variant])
    if variant is AllocationMethod.ANOMA_EXACT:
        return exact_alpha_values(h1, h2, params)
    raise ValueError(f"unknown allocation variant: {variant!r}")


def _result(alpha: float, h1: float, h2: float, params: SystemParams,
            method: AllocationMethod) -> AllocationResult:
    sic = SicUser.USER1 if h1 >= h2 else SicUser.USER2
    hmax = max(h1, h2)
    rate = math.log1p(alpha * params.total_power * hmax) / LN2
    return AllocationResult(alpha=float(alpha), sic_user=sic, method=method,
                            maxmin_rate=rate)


def _check_gains(h1: float, h2: float):
    if h1 < 0.0 or h2 < 0.0:
        raise ValueError(f"channel gains must be nonnegative, got ({h1}, {h2})")


def alpha_noma(h1: float, h2: float, params: SystemParams) -> AllocationResult:
    """Closed-form max-min coefficient for synchronous transmission.

    A zero minimum gain yields alpha = 0 and rate 0 (the outage-free
    degenerate choice), not an error.
    """
    _check_gains(h1, h2)
    alpha = float(noma_alpha_values(h1, h2, params.total_power))
    return _result(alpha, h1, h2, params, AllocationMethod.NOMA)


def alpha_anoma_bound(h1: float, h2: float, params: SystemParams,
                      z: float) -> AllocationResult:
    """Closed-form bound on the offset-transmission coefficient.

    z = 0.5 gives the lower bound, z = 1 the upper bound; z = 0 coincides
    with the synchronous closed form (as does any z when q_factor = 0).
    """
    _check_gains(h1, h2)
    if not 0.0 <= z <= 1.0:
        raise ValueError(f"z must lie in [0, 1], got {z}")
    if z == 0.5:
        method = AllocationMethod.ANOMA_Z05
    elif z == 1.0:
        method = AllocationMethod.ANOMA_Z1
    elif z == 0.0 or params.q_factor == 0.0:
        method = AllocationMethod.NOMA
    else:
        raise ValueError(f"no result tag for intermediate z={z}; "
                         "use bound_alpha_values for generic z")
    alpha = float(bound_alpha_values(h1, h2, params, z))
    return _result(alpha, h1, h2, params, method)


def alpha_anoma_exact(h1: float, h2: float, params: SystemParams,
                      tol: float = 1e-10, max_iter: int = 200) -> AllocationResult:
    """Exact equal-rate coefficient by bisection on the monotone rate gap.

    Returns an alpha whose strong/weak rates agree within
    tol * max(1, rates). Raises ConvergenceError if the bracket collapses
    or the iteration budget runs out before that criterion is met.
    """
    _check_gains(h1, h2)
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    hmin, hmax = min(h1, h2), max(h1, h2)
    if hmin == 0.0:
        return _result(0.0, h1, h2, params, AllocationMethod.ANOMA_EXACT)

    def rates(alpha):
        return (float(rate_strong(hmax, alpha, params)),
                float(rate_weak(hmin, alpha, params)))

    lo, hi = 0.0, 1.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        rs, rw = rates(mid)
        if abs(rs - rw) <= tol * max(1.0, rs, rw):
            return _result(mid, h1, h2, params, AllocationMethod.ANOMA_EXACT)
        if rs < rw:
            lo = mid
        else:
            hi = mid
        if mid == lo and mid == hi:
            break
    raise ConvergenceError(
        f"equal-rate bisection did not reach tol={tol} for gains "
        f"({h1}, {h2}); final bracket [{lo}, {hi}]", (lo, hi))


def g_denominator(x: float, h1: float, h2: float, params: SystemParams) -> float:
    """Denominator of the closed-form coefficient family at parameter x.

    Strictly decreasing in x when q_factor > 0 and both gains are positive,
    which is why the coefficient bounds are ordered; constant in x when
    q_factor = 0.
    """
    return float(_g_values(h1, h2, params.total_power, params.q_factor, x))


def quartic_residual(alpha, h1, h2, params: SystemParams):
    """Relative mismatch of the two sides of the squared equal-rate equation.

    The equal-rate condition, cleared of logarithms, equates
    2*(1 + a*P*(H1+H2) + a^2*P^2*H1*H2) with the weak-user numerator at the
    minimum gain; a true equalizer drives this residual to rounding level.
    """
    h1 = np.asarray(h1, dtype=float)
    h2 = np.asarray(h2, dtype=float)
    power, q = params.total_power, params.q_factor
    lhs = 2.0 * (1.0 + alpha * power * (h1 + h2)
                 + alpha * alpha * power * power * h1 * h2)
    hmin = np.minimum(h1, h2)
    ph = power * hmin
    one_plus_ph = 1.0 + ph
    cross = alpha * (1.0 - alpha) * ph * ph * q
    a_term = one_plus_ph + cross
    rhs = a_term + np.sqrt(one_plus_ph * (a_term + cross))
    return np.abs(lhs - rhs) / np.maximum(lhs, rhs)


def check_theorem(h1: float, h2: float, params: SystemParams,
                  tol: float = 1e-9) -> TheoremCheck:
    """Evaluate all four coefficients and test their ordering.

    The chain alpha_noma <= alpha(z=0.5) <= alpha_exact <= alpha(z=1) holds
    with equality at tau = 0; ``tol`` is absolute slack absorbing float
    noise at that boundary. The exact coefficient here comes from the
    float-resolution bisection, so the slack dominates its error.
    """
    _check_gains(h1, h2)
    a_n = float(noma_alpha_values(h1, h2, params.total_power))
    a_l = float(bound_alpha_values(h1, h2, params, 0.5))
    a_u = float(bound_alpha_values(h1, h2, params, 1.0))
    a_e = float(exact_alpha_values(h1, h2, params))
    holds = (a_n <= a_l + tol) and (a_l <= a_e + tol) and (a_e <= a_u + tol)
    return TheoremCheck(alpha_noma=a_n, alpha_lower=a_l, alpha_exact=a_e,
                        alpha_upper=a_u, chain_holds=holds)
