"""Acceptance gate: ten end-to-end checks covering the ordering result, the
exact solver, the rate formulas, gradients, the optimizer, Monte Carlo
consistency, outage-freedom, sweep trends, and optimized codebook structure.

Each test prints one PASS/FAIL line (visible with pytest -s or in the
verbose per-test listing).
"""

import time

import numpy as np

from anoma_feedback import (
    AllocationMethod,
    ChannelDistribution,
    Codebook,
    GradientMode,
    OptimizerConfig,
    QuadratureSpec,
    SystemParams,
    bound_alpha_values,
    exact_alpha_values,
    expected_rate,
    full_csi_rate,
    monte_carlo,
    noma_alpha_values,
    objective_and_gradients,
    optimize,
    quartic_residual,
    rate_strong,
    rate_weak,
    uniform_codebook,
)

D1 = ChannelDistribution(0.5)
D2 = ChannelDistribution(1.0)
PARAMS = SystemParams(10.0, 0.5)

_OPTIMIZED: dict = {}


def _report(num: int, passed: bool, detail: str) -> None:
    status = "PASS" if passed else "FAIL"
    print(f"[criterion {num:02d}] {status}: {detail}")
    assert passed, f"criterion {num:02d} failed: {detail}"


def _sample_gain_pairs(n: int = 10_000):
    rng = np.random.default_rng(20240)
    return D1.sample(rng, n), D2.sample(rng, n)


def _optimized_at_defaults(variant: AllocationMethod):
    if variant not in _OPTIMIZED:
        config = OptimizerConfig(variant=variant)
        _OPTIMIZED[variant] = optimize(uniform_codebook(D1, 3),
                                       uniform_codebook(D2, 3),
                                       D1, D2, PARAMS, config)
    return _OPTIMIZED[variant]


def _fd_gradient(cb1, cb2, variant, step=1e-6):
    """Central finite differences of the assembled objective."""
    def value(levels1, levels2):
        return expected_rate(Codebook(tuple(levels1)), Codebook(tuple(levels2)),
                             D1, D2, PARAMS, variant).expected_maxmin

    grads = []
    for which, base in enumerate((cb1.as_array(), cb2.as_array())):
        grad = np.zeros(base.size)
        for k in range(1, base.size):
            h = step * max(1.0, abs(base[k]))
            hi, lo = base.copy(), base.copy()
            hi[k] += h
            lo[k] -= h
            if which == 0:
                grad[k] = (value(hi, cb2.levels) - value(lo, cb2.levels)) / (2 * h)
            else:
                grad[k] = (value(cb1.levels, hi) - value(cb1.levels, lo)) / (2 * h)
        grads.append(grad)
    return grads


def test_criterion_01_power_coefficient_ordering():
    start = time.perf_counter()
    h1, h2 = _sample_gain_pairs()
    worst = -np.inf
    for tau in (0.1, 0.3, 0.5, 0.9):
        params = SystemParams(10.0, tau)
        a_n = noma_alpha_values(h1, h2, params.total_power)
        a_l = bound_alpha_values(h1, h2, params, 0.5)
        a_u = bound_alpha_values(h1, h2, params, 1.0)
        a_e = exact_alpha_values(h1, h2, params)
        worst = max(worst, float(np.max(a_n - a_l)), float(np.max(a_l - a_e)),
                    float(np.max(a_e - a_u)))
    sync = SystemParams(10.0, 0.0)
    stacked = np.stack([bound_alpha_values(h1, h2, sync, 0.5),
                        bound_alpha_values(h1, h2, sync, 1.0),
                        exact_alpha_values(h1, h2, sync)])
    collapse = float(np.max(np.abs(stacked - noma_alpha_values(h1, h2, 10.0))))
    elapsed = time.perf_counter() - start
    _report(1, worst <= 1e-9 and collapse <= 1e-9 and elapsed < 10.0,
            f"coefficient ordering on 10^4 gain pairs x 4 offsets, worst "
            f"violation {worst:.2e} (slack 1e-09), zero-offset collapse "
            f"{collapse:.2e}, {elapsed:.1f}s")


def test_criterion_02_exact_solver_residual():
    h1, h2 = _sample_gain_pairs()
    worst = 0.0
    for tau in (0.1, 0.3, 0.5, 0.9):
        params = SystemParams(10.0, tau)
        alphas = exact_alpha_values(h1, h2, params)
        worst = max(worst, float(np.max(quartic_residual(alphas, h1, h2,
                                                         params))))
    _report(2, worst <= 1e-6,
            f"max relative equal-rate residual {worst:.2e} over 10^4 gain "
            f"pairs x 4 offsets (tol 1e-06)")


def test_criterion_03_rate_formula_reduction():
    # gains bounded away from 0 and alpha away from {0, 1} keep the
    # reference rate positive, so the relative error is well defined;
    # the strictness condition (positive gain, interior alpha, nonzero
    # timing factor) then holds on every sample
    rng = np.random.default_rng(303)
    h = rng.exponential(2.0, 1000) + 0.05
    alpha = rng.uniform(0.02, 0.98, 1000)
    sync = SystemParams(10.0, 0.0)
    reduced = rate_weak(h, alpha, sync)
    reference = np.log2((1.0 + 10.0 * h) / (1.0 + alpha * 10.0 * h))
    rel = float(np.max(np.abs(reduced - reference) / reference))
    gain = rate_weak(h, alpha, PARAMS) - reduced
    strict = bool(np.all(gain > 0.0))
    _report(3, rel <= 1e-12 and strict,
            f"zero-offset weak-rate reduction within {rel:.2e} relative on "
            f"10^3 samples (tol 1e-12); offset weak rate strictly larger on "
            f"all samples (min gain {float(np.min(gain)):.2e})")


def test_criterion_04_gradient_correctness():
    rng = np.random.default_rng(404)
    variants = (AllocationMethod.NOMA, AllocationMethod.ANOMA_Z05,
                AllocationMethod.ANOMA_Z1)
    worst = 0.0
    for trial in range(100):
        variant = variants[trial % 3]
        # random spacings bounded away from zero keep the central
        # differences inside each bin
        cb1 = Codebook((0.0, *np.cumsum(rng.uniform(0.05, 1.2, 7))))
        cb2 = Codebook((0.0, *np.cumsum(rng.uniform(0.05, 0.8, 7))))
        _, g1, g2 = objective_and_gradients(cb1, cb2, D1, D2, PARAMS, variant,
                                            GradientMode.ANALYTIC)
        fd1, fd2 = _fd_gradient(cb1, cb2, variant)
        for analytic, fd in ((g1, fd1), (g2, fd2)):
            # relative error with an absolute floor at 0.1% of the O(1)
            # objective scale, for components crossing zero
            scale = np.maximum(np.abs(fd), 1e-3)
            worst = max(worst, float(np.max(np.abs(analytic - fd) / scale)))
    _report(4, worst <= 1e-5,
            f"analytic vs central-difference gradients on 100 random 3-bit "
            f"codebook pairs, worst relative error {worst:.2e} (tol 1e-05)")


def test_criterion_05_optimizer_ascent_and_improvement():
    start = time.perf_counter()
    ok = True
    parts = []
    for variant in (AllocationMethod.NOMA, AllocationMethod.ANOMA_Z05):
        _, _, trace = _optimized_at_defaults(variant)
        ok = ok and trace.is_monotone(0.0)
        ok = ok and trace.final.objective > trace.objectives[0]
        parts.append(f"{variant.value} {trace.objectives[0]:.4f}->"
                     f"{trace.final.objective:.4f}")
    elapsed = time.perf_counter() - start
    _report(5, ok and elapsed < 60.0,
            "nondecreasing traces with strict improvement over the uniform "
            "start: " + ", ".join(parts) + f", {elapsed:.1f}s")


def test_criterion_06_one_bit_brute_force_equivalence():
    config = OptimizerConfig(variant=AllocationMethod.NOMA)
    _, _, trace = optimize(uniform_codebook(D1, 1), uniform_codebook(D2, 1),
                           D1, D2, PARAMS, config)
    best_opt = trace.final.objective

    # with levels (0, a) and (0, b) only the top-top bin contributes:
    # rate(a, b) * P(H1 >= a) * P(H2 >= b)
    def closed_value(a, b):
        alphas = noma_alpha_values(a, b, PARAMS.total_power)
        rates = rate_strong(np.maximum(a, b), alphas, PARAMS)
        return rates * np.exp(-0.5 * a) * np.exp(-1.0 * b)

    probe = expected_rate(Codebook((0.0, 2.0)), Codebook((0.0, 1.5)),
                          D1, D2, PARAMS, AllocationMethod.NOMA).expected_maxmin
    np.testing.assert_allclose(closed_value(np.array(2.0), np.array(1.5)),
                               probe, rtol=1e-12)

    grid = np.arange(1, 10_001, dtype=float) * 1e-3
    best_grid = -np.inf
    for chunk in np.array_split(grid, 20):
        values = closed_value(chunk[:, None], grid[None, :])
        best_grid = max(best_grid, float(values.max()))
    diff = abs(best_opt - best_grid)
    _report(6, diff <= 1e-3,
            f"1-bit optimizer {best_opt:.7f} vs exhaustive 1e-3 grid "
            f"{best_grid:.7f}, |diff| = {diff:.2e} (tol 1e-03)")


def test_criterion_07_closed_form_vs_monte_carlo():
    start = time.perf_counter()
    cb1, cb2 = uniform_codebook(D1, 3), uniform_codebook(D2, 3)
    ok = True
    parts = []
    for offset, variant in enumerate(AllocationMethod):
        closed = expected_rate(cb1, cb2, D1, D2, PARAMS,
                               variant).expected_maxmin
        mc = monte_carlo(cb1, cb2, D1, D2, PARAMS, variant, 1_000_000,
                         777 + offset)
        delta = abs(closed - mc.estimate)
        ok = ok and delta <= 3.0 * mc.standard_error
        parts.append(f"{variant.value} |diff|={delta:.1e} "
                     f"3SE={3.0 * mc.standard_error:.1e}")
    elapsed = time.perf_counter() - start
    _report(7, ok and elapsed < 30.0,
            "closed form within 3 standard errors of 10^6-sample Monte Carlo "
            "for every variant: " + ", ".join(parts) + f", {elapsed:.1f}s")


def test_criterion_08_outage_freedom():
    cb1, cb2 = uniform_codebook(D1, 3), uniform_codebook(D2, 3)
    ok = True
    parts = []
    for offset, variant in enumerate(AllocationMethod):
        mc = monte_carlo(cb1, cb2, D1, D2, PARAMS, variant, 1_000_000,
                         808 + offset)
        ok = ok and mc.outage_count == 0
        parts.append(f"{variant.value} mismatch "
                     f"{mc.order_mismatch_count / 1e6:.4f}")
    _report(8, ok,
            "zero outage events in 10^6 transmissions per variant; "
            "order-mismatch frequencies (no threshold): " + ", ".join(parts))


def test_criterion_09_bits_sweep_trends():
    quad = QuadratureSpec()
    curves = {}
    ok = True
    for variant in AllocationMethod:
        bound = full_csi_rate(D1, D2, PARAMS, variant, quad)
        values = [expected_rate(uniform_codebook(D1, b), uniform_codebook(D2, b),
                                D1, D2, PARAMS, variant).expected_maxmin
                  for b in range(1, 9)]
        curves[variant] = values
        ok = ok and all(b >= a for a, b in zip(values, values[1:]))
        ok = ok and all(v < bound for v in values)
    noma = curves[AllocationMethod.NOMA]
    z05 = curves[AllocationMethod.ANOMA_Z05]
    ok = ok and all(a >= n for a, n in zip(z05, noma))
    bits_needed = next((b for b, v in enumerate(z05, start=1)
                        if v >= noma[-1]), 9)
    ok = ok and bits_needed <= 8
    _report(9, ok,
            f"per-variant averages nondecreasing in bits and below the "
            f"full-information bound; offset curve dominates pointwise and "
            f"matches the synchronous 8-bit average with {bits_needed} bits")


def test_criterion_10_codebook_structure():
    ok = True
    parts = []
    for variant in (AllocationMethod.NOMA, AllocationMethod.ANOMA_Z05):
        cb1, cb2, _ = _optimized_at_defaults(variant)
        ratios = []
        for cb in (cb1, cb2):
            gaps = np.diff(cb.as_array())
            ratios.append(float(gaps.max() / gaps.min()))
        ok = ok and all(r > 1.1 for r in ratios)
        ok = ok and cb1.levels[-1] > cb2.levels[-1]
        parts.append(f"{variant.value} gap ratios "
                     f"{ratios[0]:.1f}/{ratios[1]:.1f}, top levels "
                     f"{cb1.levels[-1]:.3f} > {cb2.levels[-1]:.3f}")
    _report(10, ok,
            "optimized 3-bit codebooks are non-uniform (max/min adjacent gap "
            "ratio > 1.1) with user 1's top level above user 2's: "
            + "; ".join(parts))
