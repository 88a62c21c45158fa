"""Command-line client for the experiment service.

Every subcommand builds a flat experiment configuration (defaults, then
config file, then explicit flags), posts it to the service, and renders the
response. By default the service runs in-process; --server targets a
running instance instead.
"""

from __future__ import annotations

import dataclasses
import warnings

import click
from click.core import ParameterSource

from . import __version__
from .experiments import ExperimentConfig, read_config_file


class ServiceClient:
    def __init__(self, server: str | None = None):
        if server:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=3600.0)
        else:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

                from .service import app

                self._client = TestClient(app)

    def post(self, path: str, payload: dict) -> dict:
        response = self._client.post(path, json=payload)
        if response.status_code != 200:
            try:
                detail = response.json().get("detail")
            except Exception:
                detail = response.text
            raise click.ClickException(
                f"{path} failed with status {response.status_code}: {detail}")
        return response.json()


def _build_config(ctx: click.Context, config_path: str | None, scenario: str,
                  values: dict) -> ExperimentConfig:
    """Defaults < config file < explicit command-line flags."""
    mapping: dict = dict(read_config_file(config_path)) if config_path else {}
    mapping["scenario"] = scenario
    for key, value in values.items():
        if value is None:
            continue
        explicit = ctx.get_parameter_source(key) in (
            ParameterSource.COMMANDLINE, ParameterSource.ENVIRONMENT)
        if explicit or key not in mapping:
            mapping[key] = value
    try:
        return ExperimentConfig.from_mapping(mapping)
    except ValueError as exc:
        raise click.ClickException(str(exc))


def _payload(config: ExperimentConfig) -> dict:
    data = dataclasses.asdict(config)
    data.pop("scenario")
    data["variants"] = list(config.variants)
    return data


def _client(ctx: click.Context) -> ServiceClient:
    return ServiceClient(ctx.obj)


def _echo_report(data: dict) -> None:
    for check in data["checks"]:
        status = "PASS" if check["passed"] else "FAIL"
        click.echo(f"[{status}] {check['name']}: {check['detail']}")
    mismatch = data["info"].get("order_mismatch_frequency") or {}
    for name, freq in mismatch.items():
        click.echo(f"[INFO] order mismatch frequency ({name}): {freq}")
    click.echo(f"report written to {data['report_path']}")
    if not data["passed"]:
        failing = ", ".join(c["name"] for c in data["checks"] if not c["passed"])
        raise click.ClickException(f"failing checks: {failing}")


def _common_options(f):
    options = [
        click.option("--config", "config_path",
                     type=click.Path(exists=True, dir_okay=False),
                     default=None, help="Flat key=value configuration file."),
        click.option("--power", type=float, default=10.0, show_default=True,
                     help="Total transmit power."),
        click.option("--tau", type=float, default=0.5, show_default=True,
                     help="Normalized timing offset."),
        click.option("--lambda1", type=float, default=0.5, show_default=True,
                     help="Rate parameter of user 1's gain law."),
        click.option("--lambda2", type=float, default=1.0, show_default=True,
                     help="Rate parameter of user 2's gain law."),
        click.option("--seed", type=int, default=12345, show_default=True),
        click.option("--output-dir", type=click.Path(file_okay=False),
                     default=".", show_default=True),
    ]
    for option in reversed(options):
        f = option(f)
    return f


ALL_VARIANTS = "noma,anoma_z05,anoma_z1,anoma_exact"


@click.group()
@click.version_option(__version__)
@click.option("--server", default=None, metavar="URL",
              help="Send requests to a running service at URL instead of "
                   "executing in-process.")
@click.pass_context
def main(ctx: click.Context, server: str | None):
    """Two-user downlink power allocation with limited feedback."""
    ctx.obj = server


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host: str, port: int):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("anoma_feedback.service:app", host=host, port=port)


@main.command()
@_common_options
@click.option("--bits-min", type=int, default=1, show_default=True)
@click.option("--bits-max", type=int, default=8, show_default=True)
@click.option("--variants", default=ALL_VARIANTS, show_default=True,
              help="Comma-separated allocation variants.")
@click.option("--quad-nodes", type=int, default=512, show_default=True,
              help="Quadrature nodes per axis for the full-CSI bound.")
@click.option("--quad-tol", type=float, default=1e-6, show_default=True,
              help="Acceptable quadrature error estimate; loosen it when "
                   "reducing the node count.")
@click.pass_context
def sweep(ctx: click.Context, config_path, **values):
    """Average rate of uniform codebooks versus feedback bits."""
    config = _build_config(ctx, config_path, "bits_sweep", values)
    data = _client(ctx).post("/experiments/sweep", _payload(config))
    for row in data["rows"]:
        click.echo(f"bits={row['bits']} {row['variant']:<12s} "
                   f"E[R*]={row['expected_maxmin']:.6f} "
                   f"full-CSI={row['full_csi']:.6f}")
    click.echo(f"table written to {data['csv_path']}")


@main.command()
@_common_options
@click.option("--bits", type=int, default=3, show_default=True)
@click.option("--variants", default="noma,anoma_z05", show_default=True,
              help="Comma-separated allocation variants.")
@click.option("--step-size", type=float, default=0.05, show_default=True)
@click.option("--max-iterations", type=int, default=500, show_default=True)
@click.option("--gradient-mode", default="analytic", show_default=True,
              type=click.Choice(["analytic", "finite_difference"]))
@click.option("--backtracking/--no-backtracking", default=True,
              show_default=True)
@click.pass_context
def optimize(ctx: click.Context, config_path, **values):
    """Optimize both users' quantization levels from a uniform start."""
    config = _build_config(ctx, config_path, "optimizer_run", values)
    data = _client(ctx).post("/experiments/optimize", _payload(config))
    for name, result in data["results"].items():
        objectives = result["objectives"]
        click.echo(f"{name}: E[R*] {objectives[0]:.6f} -> {objectives[-1]:.6f} "
                   f"in {len(objectives) - 1} iterations")
        click.echo(f"  levels1: {', '.join(f'{v:.4f}' for v in result['levels1'])}")
        click.echo(f"  levels2: {', '.join(f'{v:.4f}' for v in result['levels2'])}")
    click.echo(f"trace written to {data['csv_path']}")


@main.command("dump-codebook")
@_common_options
@click.option("--bits", type=int, default=3, show_default=True)
@click.pass_context
def dump_codebook(ctx: click.Context, config_path, **values):
    """Write both users' uniform codebooks as plain-text level files."""
    config = _build_config(ctx, config_path, "codebook_dump", values)
    data = _client(ctx).post("/experiments/dump-codebook", _payload(config))
    click.echo(f"user 1 levels: {', '.join(f'{v:.6f}' for v in data['levels1'])}")
    click.echo(f"user 2 levels: {', '.join(f'{v:.6f}' for v in data['levels2'])}")
    for path in data["paths"]:
        click.echo(f"wrote {path}")


@main.command("check-theorem")
@_common_options
@click.option("--theorem-pairs", type=int, default=10_000, show_default=True,
              help="Number of random gain pairs to test.")
@click.option("--theorem-slack", type=float, default=1e-9, show_default=True)
@click.option("--residual-tol", type=float, default=1e-6, show_default=True)
@click.pass_context
def check_theorem(ctx: click.Context, config_path, **values):
    """Check the power-coefficient ordering on sampled channel gains."""
    config = _build_config(ctx, config_path, "theorem_check", values)
    _echo_report(_client(ctx).post("/experiments/check-theorem",
                                   _payload(config)))


@main.command()
@_common_options
@click.option("--bits", type=int, default=3, show_default=True)
@click.option("--n-samples", type=int, default=1_000_000, show_default=True)
@click.option("--variants", default=ALL_VARIANTS, show_default=True,
              help="Comma-separated allocation variants.")
@click.option("--theorem-pairs", type=int, default=10_000, show_default=True)
@click.option("--theorem-slack", type=float, default=1e-9, show_default=True)
@click.option("--residual-tol", type=float, default=1e-6, show_default=True)
@click.pass_context
def validate(ctx: click.Context, config_path, **values):
    """End-to-end consistency checks; nonzero exit on any failure."""
    config = _build_config(ctx, config_path, "monte_carlo_validate", values)
    _echo_report(_client(ctx).post("/experiments/validate", _payload(config)))


if __name__ == "__main__":
    main()
