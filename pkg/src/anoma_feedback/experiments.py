"""Config-driven experiment runners: feedback-bits sweeps, quantizer
optimization runs, codebook dumps, ordering checks, and an end-to-end
validation harness.

Every runner writes CSV/JSON outputs plus the resolved configuration next
to them, and reruns with the same configuration are byte-identical.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
from dataclasses import dataclass

import numpy as np

from .allocation import (
    AllocationMethod,
    bound_alpha_values,
    exact_alpha_values,
    noma_alpha_values,
    quartic_residual,
)
from .evaluation import (
    QuadratureSpec,
    expected_rate,
    full_csi_rate,
    monte_carlo,
)
from .model import ChannelDistribution, SystemParams
from .optimizer import GradientMode, OptimizerConfig, optimize
from .quantizer import save_codebook, uniform_codebook

SCENARIOS = ("bits_sweep", "optimizer_run", "codebook_dump", "theorem_check",
             "monte_carlo_validate")

_VARIANT_NAMES = tuple(v.value for v in AllocationMethod)


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment configuration; defaults reproduce the reference
    simulation setup (P = 10, tau = 0.5, gains Exp(0.5) and Exp(1))."""

    scenario: str = "bits_sweep"
    power: float = 10.0
    tau: float = 0.5
    lambda1: float = 0.5
    lambda2: float = 1.0
    bits: int = 3
    bits_min: int = 1
    bits_max: int = 8
    variants: tuple[str, ...] = _VARIANT_NAMES
    step_size: float = 0.05
    max_iterations: int = 500
    gradient_mode: str = "analytic"
    backtracking: bool = True
    n_samples: int = 1_000_000
    seed: int = 12345
    theorem_pairs: int = 10_000
    theorem_slack: float = 1e-9
    residual_tol: float = 1e-6
    quad_nodes: int = 512
    quad_tol: float = 1e-6
    output_dir: str = "."

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; "
                             f"expected one of {SCENARIOS}")
        if isinstance(self.variants, str):
            parts = tuple(p.strip() for p in self.variants.split(",") if p.strip())
            object.__setattr__(self, "variants", parts)
        else:
            object.__setattr__(self, "variants", tuple(self.variants))
        for name in self.variants:
            if name not in _VARIANT_NAMES:
                raise ValueError(f"unknown variant {name!r}; "
                                 f"expected one of {_VARIANT_NAMES}")
        if not self.variants:
            raise ValueError("variants must not be empty")
        if self.bits < 0 or self.bits_min < 0:
            raise ValueError("bit counts must be nonnegative")
        if self.bits_min > self.bits_max:
            raise ValueError(f"empty bits range [{self.bits_min}, {self.bits_max}]")
        if self.gradient_mode not in ("analytic", "finite_difference"):
            raise ValueError(f"unknown gradient_mode {self.gradient_mode!r}")
        if self.n_samples < 1 or self.theorem_pairs < 1:
            raise ValueError("sample counts must be positive")
        if not self.quad_tol > 0.0:
            raise ValueError("quad_tol must be positive")
        # delegate range checks on power/tau/lambdas to the model types
        self.system_params()
        self.dist1()
        self.dist2()

    def system_params(self) -> SystemParams:
        return SystemParams(self.power, self.tau)

    def dist1(self) -> ChannelDistribution:
        return ChannelDistribution(self.lambda1)

    def dist2(self) -> ChannelDistribution:
        return ChannelDistribution(self.lambda2)

    def allocation_variants(self) -> tuple[AllocationMethod, ...]:
        return tuple(AllocationMethod(name) for name in self.variants)

    def optimizer_config(self, variant: AllocationMethod) -> OptimizerConfig:
        return OptimizerConfig(variant=variant, step_size=self.step_size,
                               max_iterations=self.max_iterations,
                               gradient_mode=GradientMode(self.gradient_mode),
                               backtracking=self.backtracking)

    def quadrature(self) -> QuadratureSpec:
        # a reduced node budget only makes sense with a matching tolerance
        return QuadratureSpec(nodes=self.quad_nodes, error_tol=self.quad_tol)

    @classmethod
    def from_mapping(cls, mapping: dict) -> "ExperimentConfig":
        """Build a config from string key-value pairs (config file or CLI)."""
        fields = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, raw in mapping.items():
            if key not in fields:
                raise ValueError(f"unknown config key {key!r}")
            kwargs[key] = _parse_field(fields[key], raw)
        return cls(**kwargs)

    def resolved_lines(self) -> list[str]:
        lines = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.name == "variants":
                value = ",".join(value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{f.name}={value}")
        return lines

    def write_resolved(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(self.resolved_lines()) + "\n")


def _parse_field(field, raw):
    if isinstance(raw, str):
        raw = raw.strip()
    if field.type in ("float", float):
        return float(raw)
    if field.type in ("int", int):
        return int(raw)
    if field.type in ("bool", bool):
        if isinstance(raw, bool):
            return raw
        if raw.lower() in ("true", "1", "yes", "on"):
            return True
        if raw.lower() in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"cannot parse boolean from {raw!r}")
    return raw


def read_config_file(path) -> dict:
    """Flat key=value file; blank lines and # comments are ignored."""
    mapping = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}:{lineno}: expected key=value, "
                                 f"got {stripped!r}")
            key, _, value = stripped.partition("=")
            mapping[key.strip()] = value.strip()
    return mapping


def _out(config: ExperimentConfig, name: str) -> str:
    os.makedirs(config.output_dir, exist_ok=True)
    return os.path.join(config.output_dir, name)


def run_bits_sweep(config: ExperimentConfig):
    """Average rate of uniform codebooks versus feedback bits, per variant.

    Writes sweep.csv (bits, variant, expected_maxmin, full_csi), a gnuplot
    script, and the resolved config; returns the rows.
    """
    params = config.system_params()
    d1, d2 = config.dist1(), config.dist2()
    quad = config.quadrature()
    rows = []
    for variant in config.allocation_variants():
        bound = full_csi_rate(d1, d2, params, variant, quad)
        for bits in range(config.bits_min, config.bits_max + 1):
            cb1 = uniform_codebook(d1, bits)
            cb2 = uniform_codebook(d2, bits)
            report = expected_rate(cb1, cb2, d1, d2, params, variant)
            rows.append({"bits": bits, "variant": variant.value,
                         "expected_maxmin": report.expected_maxmin,
                         "full_csi": bound})
    csv_path = _out(config, "sweep.csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bits", "variant", "expected_maxmin", "full_csi"])
        for row in rows:
            writer.writerow([row["bits"], row["variant"],
                             repr(row["expected_maxmin"]), repr(row["full_csi"])])
    _write_sweep_plot(config, _out(config, "sweep.gnuplot"), "sweep.csv")
    config.write_resolved(_out(config, "sweep.config"))
    return rows, csv_path


def _write_sweep_plot(config: ExperimentConfig, path, csv_name) -> None:
    header = [
        "set datafile separator ','",
        "set key bottom right",
        "set xlabel 'feedback bits'",
        "set ylabel 'average max-min rate (bits/use)'",
        "set grid",
    ]
    plots = []
    for name in config.variants:
        plots.append(f"  '{csv_name}' using 1:(stringcolumn(2) eq '{name}' ? $3 : NaN) "
                     f"with linespoints title '{name}'")
        plots.append(f"  '{csv_name}' using 1:(stringcolumn(2) eq '{name}' ? $4 : NaN) "
                     f"with lines dashtype 2 title '{name} full CSI'")
    body = "plot \\\n" + ", \\\n".join(plots)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(header) + "\n" + body + "\n")


def run_optimizer_experiment(config: ExperimentConfig):
    """Optimize both codebooks from a uniform start, per variant.

    Writes optimizer.csv (iteration, variant, objective), the final
    codebooks as plain-text files, a gnuplot script, and the resolved
    config; returns {variant: (codebook1, codebook2, trace)}.
    """
    params = config.system_params()
    d1, d2 = config.dist1(), config.dist2()
    results = {}
    rows = []
    for variant in config.allocation_variants():
        cb1 = uniform_codebook(d1, config.bits)
        cb2 = uniform_codebook(d2, config.bits)
        opt1, opt2, trace = optimize(cb1, cb2, d1, d2, params,
                                     config.optimizer_config(variant))
        results[variant] = (opt1, opt2, trace)
        for point in trace.points:
            rows.append((point.iteration, variant.value, point.objective))
        save_codebook(opt1, _out(config, f"codebook_{variant.value}_user1.txt"))
        save_codebook(opt2, _out(config, f"codebook_{variant.value}_user2.txt"))
        trace.write_csv(_out(config, f"trace_{variant.value}.csv"))
    csv_path = _out(config, "optimizer.csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "variant", "objective"])
        for iteration, name, objective in rows:
            writer.writerow([iteration, name, repr(objective)])
    plot_path = _out(config, "optimizer.gnuplot")
    with open(plot_path, "w", encoding="utf-8") as fh:
        fh.write("set datafile separator ','\n"
                 "set key bottom right\n"
                 "set xlabel 'iteration'\n"
                 "set ylabel 'average max-min rate (bits/use)'\n"
                 "set grid\n"
                 "plot " + ", \\\n     ".join(
                     f"'optimizer.csv' using 1:(stringcolumn(2) eq '{name}' ? $3 : NaN) "
                     f"with lines title '{name}'"
                     for name in config.variants) + "\n")
    config.write_resolved(_out(config, "optimizer.config"))
    return results, csv_path


def run_codebook_dump(config: ExperimentConfig):
    """Write both users' uniform codebooks at the configured bit width."""
    paths = []
    for user, dist in ((1, config.dist1()), (2, config.dist2())):
        cb = uniform_codebook(dist, config.bits)
        path = _out(config, f"codebook_user{user}.txt")
        save_codebook(cb, path)
        paths.append(path)
    config.write_resolved(_out(config, "codebook.config"))
    return paths


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[CheckResult, ...]
    info: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failing(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def to_json(self) -> str:
        payload = {
            "passed": self.passed,
            "checks": [dataclasses.asdict(c) for c in self.checks],
            "info": self.info,
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _theorem_checks(config: ExperimentConfig) -> list[CheckResult]:
    params = config.system_params()
    rng = np.random.default_rng(config.seed)
    n = config.theorem_pairs
    h1 = rng.exponential(config.dist1().mean_gain, n)
    h2 = rng.exponential(config.dist2().mean_gain, n)
    slack = config.theorem_slack

    a_n = noma_alpha_values(h1, h2, params.total_power)
    a_l = bound_alpha_values(h1, h2, params, 0.5)
    a_u = bound_alpha_values(h1, h2, params, 1.0)
    a_e = exact_alpha_values(h1, h2, params)
    chain = (np.all(a_n <= a_l + slack) and np.all(a_l <= a_e + slack)
             and np.all(a_e <= a_u + slack))
    worst = max(float(np.max(a_n - a_l)), float(np.max(a_l - a_e)),
                float(np.max(a_e - a_u)))
    checks = [CheckResult(
        "theorem_chain", bool(chain),
        f"ordering noma <= z05 <= exact <= z1 on {n} pairs at tau={params.tau}; "
        f"worst violation {worst:.3e} (slack {slack:.0e})")]

    sync = params.synchronous()
    s_l = bound_alpha_values(h1, h2, sync, 0.5)
    s_u = bound_alpha_values(h1, h2, sync, 1.0)
    s_e = exact_alpha_values(h1, h2, sync)
    spread = np.max(np.stack([s_l, s_u, s_e]), axis=0) - np.min(
        np.stack([s_l, s_u, s_e]), axis=0)
    gap = float(np.max(np.abs(np.stack([s_l, s_u, s_e]) - a_n)))
    checks.append(CheckResult(
        "tau_zero_equality", bool(gap <= slack),
        f"all variants collapse to the synchronous alpha at tau=0; "
        f"max deviation {gap:.3e} (slack {slack:.0e}, spread {float(spread.max()):.3e})"))

    residual = float(np.max(quartic_residual(a_e, h1, h2, params)))
    checks.append(CheckResult(
        "exact_solver_residual", bool(residual <= config.residual_tol),
        f"max relative equal-rate residual {residual:.3e} "
        f"(tol {config.residual_tol:.0e})"))
    return checks


def run_theorem_check(config: ExperimentConfig):
    """Sampled ordering and residual checks; writes theorem.json."""
    checks = _theorem_checks(config)
    report = ValidationReport(checks=tuple(checks),
                              info={"seed": config.seed, "generator": "PCG64",
                                    "pairs": config.theorem_pairs})
    path = _out(config, "theorem.json")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(report.to_json() + "\n")
    config.write_resolved(_out(config, "theorem.config"))
    return report, path


def run_validation(config: ExperimentConfig):
    """End-to-end consistency harness; writes validate.json.

    Per variant: the closed-form average over 3-bit uniform codebooks must
    match Monte Carlo within 3 standard errors and produce zero outages.
    Adds the ordering/residual checks and reports order-mismatch
    frequencies (informational, no threshold).
    """
    params = config.system_params()
    d1, d2 = config.dist1(), config.dist2()
    checks = _theorem_checks(config)
    mismatch = {}
    for offset, variant in enumerate(config.allocation_variants()):
        cb1 = uniform_codebook(d1, config.bits)
        cb2 = uniform_codebook(d2, config.bits)
        closed = expected_rate(cb1, cb2, d1, d2, params, variant).expected_maxmin
        mc = monte_carlo(cb1, cb2, d1, d2, params, variant, config.n_samples,
                         config.seed + offset)
        delta = abs(closed - mc.estimate)
        checks.append(CheckResult(
            f"closed_vs_mc_{variant.value}", bool(delta <= 3.0 * mc.standard_error),
            f"|closed - MC| = {delta:.3e} vs 3 SE = {3.0 * mc.standard_error:.3e} "
            f"({config.n_samples} samples, seed {mc.seed})"))
        checks.append(CheckResult(
            f"outage_free_{variant.value}", mc.outage_count == 0,
            f"{mc.outage_count} outage events in {config.n_samples} transmissions"))
        mismatch[variant.value] = mc.order_mismatch_count / config.n_samples
    report = ValidationReport(
        checks=tuple(checks),
        info={"seed": config.seed, "generator": "PCG64",
              "n_samples": config.n_samples, "bits": config.bits,
              "order_mismatch_frequency": mismatch})
    path = _out(config, "validate.json")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(report.to_json() + "\n")
    config.write_resolved(_out(config, "validate.config"))
    return report, path
