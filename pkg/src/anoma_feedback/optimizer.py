"""Gradient ascent on both users' quantization levels to maximize the
average max-min rate.

The objective is the double sum of rate(level_i, level_j) times bin masses;
each interior level moves both its own bin's rate argument and two bin
boundaries, giving the three gradient terms assembled here. Level 0 is the
outage guard and never moves.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .allocation import BOUND_Z, AllocationMethod, alpha_for_variant
from .model import LN2, ChannelDistribution, SystemParams
from .quantizer import Codebook, bin_masses


class GradientMode(enum.Enum):
    ANALYTIC = "analytic"
    FINITE_DIFFERENCE = "finite_difference"


@dataclass(frozen=True)
class OptimizerConfig:
    variant: AllocationMethod
    step_size: float = 0.05
    max_iterations: int = 500
    gradient_mode: GradientMode = GradientMode.ANALYTIC
    backtracking: bool = True
    improvement_tol: float = 1e-10
    max_halvings: int = 30
    ordering_eps: float = 1e-9

    def __post_init__(self):
        if not self.step_size > 0.0:
            raise ValueError(f"step_size must be positive, got {self.step_size}")
        if self.max_iterations < 0:
            raise ValueError(
                f"max_iterations must be nonnegative, got {self.max_iterations}")
        if not self.improvement_tol >= 0.0:
            raise ValueError(
                f"improvement_tol must be nonnegative, got {self.improvement_tol}")


@dataclass(frozen=True)
class TracePoint:
    iteration: int
    objective: float
    levels1: tuple
    levels2: tuple
    grad_norm1: float
    grad_norm2: float


@dataclass(frozen=True)
class OptimizerTrace:
    points: tuple[TracePoint, ...]

    @property
    def objectives(self) -> np.ndarray:
        return np.asarray([p.objective for p in self.points])

    @property
    def final(self) -> TracePoint:
        return self.points[-1]

    def is_monotone(self, tol: float = 1e-9) -> bool:
        obj = self.objectives
        return bool(np.all(np.diff(obj) >= -tol))

    def write_csv(self, path) -> None:
        n1 = len(self.points[0].levels1)
        n2 = len(self.points[0].levels2)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["iteration", "objective", "grad_norm1", "grad_norm2"]
                            + [f"q1_{k}" for k in range(n1)]
                            + [f"q2_{k}" for k in range(n2)])
            for p in self.points:
                writer.writerow([p.iteration, repr(p.objective),
                                 repr(p.grad_norm1), repr(p.grad_norm2)]
                                + [repr(float(v)) for v in p.levels1]
                                + [repr(float(v)) for v in p.levels2])


def _rate_grid(gains1, gains2, params: SystemParams, variant: AllocationMethod):
    g1 = np.asarray(gains1, dtype=float)[:, None]
    g2 = np.asarray(gains2, dtype=float)[None, :]
    alphas = alpha_for_variant(g1, g2, params, variant)
    return np.log1p(alphas * params.total_power * np.maximum(g1, g2)) / LN2


def _analytic_partials(gains1, gains2, params: SystemParams,
                       variant: AllocationMethod):
    """Rate grid and its partial derivatives in each gain, closed form.

    Differentiates rate = log2(1 + P*alpha*max) through the closed-form
    alpha = 2*min/g. On the tie set (equal gains) the min/max indicator
    derivatives are set to 1/2 each, which reproduces the average of the
    two one-sided derivatives, i.e. the central-difference limit.
    """
    if variant is AllocationMethod.NOMA:
        z, q = 0.0, 0.0
    else:
        z, q = BOUND_Z[variant], params.q_factor
    power = params.total_power
    h1 = np.asarray(gains1, dtype=float)[:, None]
    h2 = np.asarray(gains2, dtype=float)[None, :]
    m = np.minimum(h1, h2)
    big = np.maximum(h1, h2)
    prod = h1 * h2
    t = z * power * q * m * m
    u = (h1 + h2) - t
    r = np.sqrt(u * u + 4.0 * m * (power * prod + t))
    g = r + u
    ok = g > 0.0
    g_safe = np.where(ok, g, 1.0)
    r_safe = np.where(r > 0.0, r, 1.0)
    alpha = np.where(ok, 2.0 * m / g_safe, 0.0)
    rates = np.log1p(alpha * power * big) / LN2

    # indicator derivatives of min and max in each argument; ties average
    eq = np.equal(h1, h2).astype(float)
    dm1 = np.less(h1, h2).astype(float) + 0.5 * eq
    dm2 = np.greater(h1, h2).astype(float) + 0.5 * eq
    dbig1 = 1.0 - dm1
    dbig2 = 1.0 - dm2

    denom = (1.0 + power * alpha * big) * LN2
    out = []
    for dmk, dbigk, dprodk in ((dm1, dbig1, h2), (dm2, dbig2, h1)):
        dt = 2.0 * z * power * q * m * dmk
        du = 1.0 - dt
        dr = np.where(
            ok,
            (u * du + 2.0 * dmk * (power * prod + t)
             + 2.0 * m * (power * dprodk + dt)) / r_safe,
            0.0)
        dg = dr + du
        dalpha = np.where(ok, 2.0 * (dmk * g - m * dg) / (g_safe * g_safe), 0.0)
        out.append(power * (dalpha * big + alpha * dbigk) / denom)
    return rates, out[0], out[1]


def _fd_partials(gains1, gains2, params: SystemParams,
                 variant: AllocationMethod):
    """Rate grid and central-difference partials (used for the exact solver,
    whose alpha has no closed form)."""
    g1 = np.asarray(gains1, dtype=float)
    g2 = np.asarray(gains2, dtype=float)
    rates = _rate_grid(g1, g2, params, variant)

    def partial(axis_gains, other_gains, axis):
        h = 1e-6 * np.maximum(1.0, np.abs(axis_gains))
        lo = np.maximum(axis_gains - h, 0.0)
        hi = axis_gains + h
        if axis == 0:
            r_hi = _rate_grid(hi, other_gains, params, variant)
            r_lo = _rate_grid(lo, other_gains, params, variant)
            span = (hi - lo)[:, None]
        else:
            r_hi = _rate_grid(other_gains, hi, params, variant)
            r_lo = _rate_grid(other_gains, lo, params, variant)
            span = (hi - lo)[None, :]
        return (r_hi - r_lo) / span

    return rates, partial(g1, g2, 0), partial(g2, g1, 1)


def rate_partials(gains1, gains2, params: SystemParams,
                  variant: AllocationMethod,
                  mode: GradientMode = GradientMode.ANALYTIC):
    """(rates, d rate/d gain1, d rate/d gain2) on the outer grid of two axes."""
    if mode is GradientMode.ANALYTIC and variant is not AllocationMethod.ANOMA_EXACT:
        return _analytic_partials(gains1, gains2, params, variant)
    return _fd_partials(gains1, gains2, params, variant)


def objective_and_gradients(cb1: Codebook, cb2: Codebook,
                            d1: ChannelDistribution, d2: ChannelDistribution,
                            params: SystemParams, variant: AllocationMethod,
                            mode: GradientMode = GradientMode.ANALYTIC):
    """Average max-min rate and its gradient in every quantization level.

    Level k > 0 of user 1 collects three terms: the rate derivative inside
    its own bin, the mass it takes from bin k (lower edge moving up), and
    the mass it gives to bin k-1 (that bin's upper edge moving up). Level 0
    is pinned, so both gradients have a leading zero. Cost is one rate-grid
    evaluation: O(N1*N2).
    """
    lev1 = cb1.as_array()
    lev2 = cb2.as_array()
    rates, dr1, dr2 = rate_partials(lev1, lev2, params, variant, mode)
    m1 = bin_masses(cb1, d1)
    m2 = bin_masses(cb2, d2)
    f1 = d1.pdf(lev1)
    f2 = d2.pdf(lev2)
    objective = float(m1 @ rates @ m2)

    row_rate = rates @ m2
    row_slope = dr1 @ m2
    grad1 = np.zeros_like(lev1)
    grad1[1:] = (row_slope[1:] * m1[1:]
                 + f1[1:] * (row_rate[:-1] - row_rate[1:]))

    col_rate = m1 @ rates
    col_slope = m1 @ dr2
    grad2 = np.zeros_like(lev2)
    grad2[1:] = (col_slope[1:] * m2[1:]
                 + f2[1:] * (col_rate[:-1] - col_rate[1:]))
    return objective, grad1, grad2


def gradient_level_own(i: int, j: int, cb1: Codebook, cb2: Codebook,
                       d1: ChannelDistribution, d2: ChannelDistribution,
                       params: SystemParams, variant: AllocationMethod,
                       mode: GradientMode = GradientMode.ANALYTIC) -> float:
    """Bin (i, j)'s own contribution to the gradient of user 1's level i.

    Valid for 1 <= i <= N1-1: the rate-argument derivative weighted by the
    bin's mass, minus the mass flowing out through the moving lower edge.
    """
    if not 1 <= i <= cb1.n_levels - 1:
        raise ValueError(f"level index {i} not movable (1..{cb1.n_levels - 1})")
    if not 0 <= j <= cb2.n_levels - 1:
        raise ValueError(f"bin index {j} out of range (0..{cb2.n_levels - 1})")
    lev1 = cb1.as_array()
    lev2 = cb2.as_array()
    rates, dr1, _ = rate_partials(lev1[i:i + 1], lev2[j:j + 1], params,
                                  variant, mode)
    m1 = bin_masses(cb1, d1)
    m2 = bin_masses(cb2, d2)
    f1 = float(d1.pdf(lev1[i]))
    return float((dr1[0, 0] * m1[i] - rates[0, 0] * f1) * m2[j])


def gradient_level_right(i: int, j: int, cb1: Codebook, cb2: Codebook,
                         d1: ChannelDistribution, d2: ChannelDistribution,
                         params: SystemParams, variant: AllocationMethod) -> float:
    """Bin (i, j)'s contribution to the gradient of user 1's level i+1.

    Valid for i+1 <= N1-1 (the top bin has no upper edge to move): the
    bin's rate times the density at the departing upper edge; nonnegative.
    """
    if not 0 <= i <= cb1.n_levels - 2:
        raise ValueError(
            f"bin index {i} has no movable upper edge (0..{cb1.n_levels - 2})")
    if not 0 <= j <= cb2.n_levels - 1:
        raise ValueError(f"bin index {j} out of range (0..{cb2.n_levels - 1})")
    lev1 = cb1.as_array()
    lev2 = cb2.as_array()
    rate = float(_rate_grid(lev1[i:i + 1], lev2[j:j + 1], params, variant)[0, 0])
    m2 = bin_masses(cb2, d2)
    return rate * float(d1.pdf(lev1[i + 1])) * float(m2[j])


def _repair_ordering(levels: np.ndarray, eps: float) -> np.ndarray:
    """Project onto the strictly-increasing set, keeping level 0 at 0.

    Subtracting k*eps, taking the running maximum, and adding k*eps back
    enforces a minimum gap of eps in one vectorized pass.
    """
    offsets = eps * np.arange(levels.size)
    repaired = np.maximum.accumulate(levels - offsets) + offsets
    repaired[0] = 0.0
    return repaired


def optimize(cb1_init: Codebook, cb2_init: Codebook, d1: ChannelDistribution,
             d2: ChannelDistribution, params: SystemParams,
             config: OptimizerConfig):
    """Joint gradient ascent on both codebooks.

    Each iteration takes one fixed-size step for every movable level, then
    (by default) halves the step until the objective does not decrease, so
    the trace is nondecreasing. Stops at max_iterations or when an
    iteration improves the objective by less than improvement_tol.
    Returns (codebook1, codebook2, trace).
    """
    lev1 = cb1_init.as_array()
    lev2 = cb2_init.as_array()

    def evaluate(a1, a2):
        return objective_and_gradients(Codebook(tuple(a1)), Codebook(tuple(a2)),
                                       d1, d2, params, config.variant,
                                       config.gradient_mode)

    obj, g1, g2 = evaluate(lev1, lev2)
    points = [TracePoint(0, obj, tuple(lev1), tuple(lev2),
                         float(np.linalg.norm(g1)), float(np.linalg.norm(g2)))]
    for it in range(1, config.max_iterations + 1):
        step = config.step_size
        for _ in range(config.max_halvings + 1):
            cand1 = _repair_ordering(lev1 + step * g1, config.ordering_eps)
            cand2 = _repair_ordering(lev2 + step * g2, config.ordering_eps)
            new_obj, new_g1, new_g2 = evaluate(cand1, cand2)
            if new_obj >= obj or not config.backtracking:
                break
            step *= 0.5
        else:
            # no acceptable step: keep the current point and let the
            # improvement test end the run
            cand1, cand2 = lev1, lev2
            new_obj, new_g1, new_g2 = obj, g1, g2
        improvement = new_obj - obj
        lev1, lev2, obj, g1, g2 = cand1, cand2, new_obj, new_g1, new_g2
        points.append(TracePoint(it, obj, tuple(lev1), tuple(lev2),
                                 float(np.linalg.norm(g1)),
                                 float(np.linalg.norm(g2))))
        if improvement < config.improvement_tol:
            break
    return (Codebook(tuple(lev1)), Codebook(tuple(lev2)),
            OptimizerTrace(points=tuple(points)))
