"""HTTP service exposing the allocation, quantization, evaluation,
optimization, and experiment operations."""

from __future__ import annotations

import dataclasses

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..allocation import (
    AllocationMethod,
    ConvergenceError,
    alpha_anoma_bound,
    alpha_anoma_exact,
    alpha_noma,
    check_theorem,
)
from ..evaluation import (
    QuadratureError,
    QuadratureSpec,
    expected_rate,
    full_csi_with_estimate,
    monte_carlo,
)
from ..experiments import (
    ExperimentConfig,
    run_bits_sweep,
    run_codebook_dump,
    run_optimizer_experiment,
    run_theorem_check,
    run_validation,
)
from ..model import ChannelDistribution, SystemParams, rate_strong, rate_weak
from ..optimizer import GradientMode, OptimizerConfig, optimize
from ..quantizer import Codebook, quantize_index, uniform_codebook
from . import schemas


def _experiment_config(req: schemas.ExperimentRequest, scenario: str) -> ExperimentConfig:
    overrides = {k: v for k, v in req.model_dump().items() if v is not None}
    return ExperimentConfig(scenario=scenario, **overrides)


def create_app() -> FastAPI:
    app = FastAPI(title="anoma-feedback", version=__version__)

    @app.exception_handler(ValueError)
    async def value_error_handler(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(QuadratureError)
    async def quadrature_error_handler(request: Request, exc: QuadratureError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(ConvergenceError)
    async def convergence_error_handler(request: Request, exc: ConvergenceError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/model/rates", response_model=schemas.RatePairResponse)
    def model_rates(req: schemas.RatePairRequest):
        params = SystemParams(req.power, req.tau)
        return schemas.RatePairResponse(
            rate_strong=float(rate_strong(req.h_strong, req.alpha, params)),
            rate_weak=float(rate_weak(req.h_weak, req.alpha, params)))

    @app.post("/allocation/solve", response_model=schemas.AllocationResponse)
    def allocation_solve(req: schemas.AllocationRequest):
        params = SystemParams(req.power, req.tau)
        method = AllocationMethod(req.method)
        if method is AllocationMethod.NOMA:
            result = alpha_noma(req.h1, req.h2, params)
        elif method is AllocationMethod.ANOMA_EXACT:
            result = alpha_anoma_exact(req.h1, req.h2, params)
        else:
            z = req.z if req.z is not None else \
                (0.5 if method is AllocationMethod.ANOMA_Z05 else 1.0)
            result = alpha_anoma_bound(req.h1, req.h2, params, z)
        return schemas.AllocationResponse(
            alpha=result.alpha, sic_user=result.sic_user.value,
            method=result.method.value, maxmin_rate=result.maxmin_rate)

    @app.post("/allocation/theorem-check",
              response_model=schemas.TheoremCheckResponse)
    def allocation_theorem_check(req: schemas.TheoremCheckRequest):
        chk = check_theorem(req.h1, req.h2, SystemParams(req.power, req.tau),
                            req.tol)
        return schemas.TheoremCheckResponse(**dataclasses.asdict(chk))

    @app.post("/quantizer/uniform", response_model=schemas.CodebookResponse)
    def quantizer_uniform(req: schemas.UniformCodebookRequest):
        cb = uniform_codebook(ChannelDistribution(req.rate_param), req.bits,
                              req.log_base)
        return schemas.CodebookResponse(levels=list(cb.levels))

    @app.post("/quantizer/quantize", response_model=schemas.QuantizeResponse)
    def quantizer_quantize(req: schemas.QuantizeRequest):
        cb = Codebook(levels=tuple(req.levels))
        idx = quantize_index(req.values, cb)
        return schemas.QuantizeResponse(
            indices=[int(i) for i in idx],
            quantized=[float(cb.levels[i]) for i in idx])

    @app.post("/evaluation/expected-rate",
              response_model=schemas.ExpectedRateResponse)
    def evaluation_expected_rate(req: schemas.ExpectedRateRequest):
        report = expected_rate(
            Codebook(levels=tuple(req.levels1)), Codebook(levels=tuple(req.levels2)),
            ChannelDistribution(req.lambda1), ChannelDistribution(req.lambda2),
            SystemParams(req.power, req.tau), AllocationMethod(req.variant))
        return schemas.ExpectedRateResponse(expected_maxmin=report.expected_maxmin)

    @app.post("/evaluation/full-csi", response_model=schemas.FullCsiResponse)
    def evaluation_full_csi(req: schemas.FullCsiRequest):
        value, err = full_csi_with_estimate(
            ChannelDistribution(req.lambda1), ChannelDistribution(req.lambda2),
            SystemParams(req.power, req.tau), AllocationMethod(req.variant),
            QuadratureSpec(nodes=req.nodes, tail_mass=req.tail_mass,
                           error_tol=req.error_tol))
        return schemas.FullCsiResponse(value=value, error_estimate=err)

    @app.post("/evaluation/monte-carlo", response_model=schemas.MonteCarloResponse)
    def evaluation_monte_carlo(req: schemas.MonteCarloRequest):
        result = monte_carlo(
            Codebook(levels=tuple(req.levels1)), Codebook(levels=tuple(req.levels2)),
            ChannelDistribution(req.lambda1), ChannelDistribution(req.lambda2),
            SystemParams(req.power, req.tau), AllocationMethod(req.variant),
            req.n_samples, req.seed, req.block_size)
        return schemas.MonteCarloResponse(**dataclasses.asdict(result))

    @app.post("/optimizer/run", response_model=schemas.OptimizeResponse)
    def optimizer_run(req: schemas.OptimizeRequest):
        config = OptimizerConfig(variant=AllocationMethod(req.variant),
                                 step_size=req.step_size,
                                 max_iterations=req.max_iterations,
                                 gradient_mode=GradientMode(req.gradient_mode),
                                 backtracking=req.backtracking)
        cb1, cb2, trace = optimize(
            Codebook(levels=tuple(req.levels1)), Codebook(levels=tuple(req.levels2)),
            ChannelDistribution(req.lambda1), ChannelDistribution(req.lambda2),
            SystemParams(req.power, req.tau), config)
        return schemas.OptimizeResponse(
            levels1=list(cb1.levels), levels2=list(cb2.levels),
            objectives=[float(x) for x in trace.objectives],
            iterations=trace.final.iteration, monotone=trace.is_monotone())

    @app.post("/experiments/sweep", response_model=schemas.SweepResponse)
    def experiments_sweep(req: schemas.ExperimentRequest):
        rows, csv_path = run_bits_sweep(_experiment_config(req, "bits_sweep"))
        return schemas.SweepResponse(
            rows=[schemas.SweepRow(**row) for row in rows], csv_path=csv_path)

    @app.post("/experiments/optimize",
              response_model=schemas.OptimizerExperimentResponse)
    def experiments_optimize(req: schemas.ExperimentRequest):
        results, csv_path = run_optimizer_experiment(
            _experiment_config(req, "optimizer_run"))
        payload = {
            variant.value: schemas.OptimizerVariantResult(
                levels1=list(cb1.levels), levels2=list(cb2.levels),
                objectives=[float(x) for x in trace.objectives])
            for variant, (cb1, cb2, trace) in results.items()
        }
        return schemas.OptimizerExperimentResponse(results=payload,
                                                   csv_path=csv_path)

    @app.post("/experiments/dump-codebook", response_model=schemas.DumpResponse)
    def experiments_dump(req: schemas.ExperimentRequest):
        config = _experiment_config(req, "codebook_dump")
        paths = run_codebook_dump(config)
        return schemas.DumpResponse(
            paths=paths,
            levels1=list(uniform_codebook(config.dist1(), config.bits).levels),
            levels2=list(uniform_codebook(config.dist2(), config.bits).levels))

    @app.post("/experiments/check-theorem",
              response_model=schemas.ValidationResponse)
    def experiments_check_theorem(req: schemas.ExperimentRequest):
        report, path = run_theorem_check(_experiment_config(req, "theorem_check"))
        return schemas.ValidationResponse(
            passed=report.passed,
            checks=[schemas.CheckModel(**dataclasses.asdict(c))
                    for c in report.checks],
            info=report.info, report_path=path)

    @app.post("/experiments/validate", response_model=schemas.ValidationResponse)
    def experiments_validate(req: schemas.ExperimentRequest):
        report, path = run_validation(
            _experiment_config(req, "monte_carlo_validate"))
        return schemas.ValidationResponse(
            passed=report.passed,
            checks=[schemas.CheckModel(**dataclasses.asdict(c))
                    for c in report.checks],
            info=report.info, report_path=path)

    return app


app = create_app()
