"""Command-line front end.

Thin client over the service layer: subcommands validate inputs, call the
service handlers (in process by default, over HTTP with ``--server``) and
print machine-parsable results. Exit codes: 0 success, 2 usage, 3 bad
config/input, 4 runtime failure (including runs that produced error rows).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import httpx
from pydantic import ValidationError

from . import service
from .config import ExperimentConfig

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_RUNTIME = 4

SEED_ENV_VAR = "DP_RESAMPLE_SEED"
_FMT = "%.9g"


class ConfigError(Exception):
    pass


class RuntimeFailure(Exception):
    pass


_ROUTES = {
    "budget": (service.BudgetRequest, service.compute_budget, service.BudgetResponse),
    "ci": (service.CiRequest, service.compute_ci, service.CiResponse),
    "coverage": (service.CoverageRequest, service.compute_coverage, service.CoverageResponse),
    "cdf": (service.CdfRequest, service.compute_cdf, service.CdfResponse),
}


def call_service(route: str, request, server: str | None):
    """Dispatch a request locally or to a remote server, same models both ways."""
    request_model, handler, response_model = _ROUTES[route]
    assert isinstance(request, request_model)
    if server is None:
        return handler(request)
    try:
        resp = httpx.post(
            server.rstrip("/") + "/" + route,
            json=request.model_dump(mode="json"),
            timeout=None,
        )
    except httpx.HTTPError as exc:
        raise RuntimeFailure(f"cannot reach {server}: {exc}") from exc
    if resp.status_code in (400, 422):
        raise ConfigError(f"server rejected the request: {resp.text}")
    if resp.status_code != 200:
        raise RuntimeFailure(f"server error {resp.status_code}: {resp.text}")
    return response_model.model_validate(resp.json())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpresample",
        description="Differentially private confidence intervals by subsampling.",
    )
    parser.add_argument("--server", default=None, help="base URL of a remote service; default runs in process")
    sub = parser.add_subparsers(dest="command", required=True)

    ci = sub.add_parser("ci", help="one private CI from a dataset file (one float per line)")
    ci.add_argument("data", help="path to the data file, one float per line")
    ci.add_argument("--m", type=int, required=True, help="subsample size")
    ci.add_argument("--T", type=int, default=50, help="number of subsamples (default 50)")
    ci.add_argument("--alpha", type=float, default=0.1, help="significance level (default 0.1)")
    ci.add_argument("--eps-total", type=float, default=5.0, help="total privacy budget epsilon (default 5)")
    ci.add_argument("--delta-total", type=float, default=0.0, help="total delta (default 0)")
    ci.add_argument("--split", type=float, default=0.5, help="budget share of the full-sample call (default 0.5)")
    ci.add_argument("--mode", choices=["basic", "advanced"], default="basic", help="composition mode")
    ci.add_argument(
        "--mechanism",
        choices=["inverse_sensitivity_median", "laplace_mean", "gaussian_mean"],
        default="inverse_sensitivity_median",
    )
    ci.add_argument("--range-lo", type=float, default=None, help="public lower data bound (defaults to the data minimum; set explicitly for a real guarantee)")
    ci.add_argument("--range-hi", type=float, default=None, help="public upper data bound (defaults to the data maximum)")
    ci.add_argument("--tau", default="sqrt", help="'sqrt' for the sqrt(m/n) ratio, or custom:<ratio>")
    ci.add_argument("--seed", type=int, default=0)
    ci.add_argument("--emit-cdf", default=None, metavar="PATH", help="write the scaled CDF points, one float per line")

    budget = sub.add_parser("budget", help="calibrate per-call budgets from a total budget")
    budget.add_argument("--eps-total", type=float, required=True)
    budget.add_argument("--delta-total", type=float, default=0.0)
    budget.add_argument("--m", type=int, required=True)
    budget.add_argument("--n", type=int, required=True)
    budget.add_argument("--T", type=int, required=True)
    budget.add_argument("--split", type=float, default=0.5)
    budget.add_argument("--mode", choices=["basic", "advanced"], default="basic")

    coverage = sub.add_parser("coverage", help="Monte Carlo coverage/width grid from a JSON config")
    coverage.add_argument("--config", required=True, help="experiment config (JSON)")
    coverage.add_argument("--workers", type=int, default=1)
    coverage.add_argument("--output", default=None, help="override the config's output_path")

    cdf = sub.add_parser("cdf", help="CDF-convergence grid from a JSON config")
    cdf.add_argument("--config", required=True, help="experiment config (JSON)")
    cdf.add_argument("--output", default=None, help="override the config's output_path")
    cdf.add_argument("--emit-grid", default=None, metavar="PATH", help="also write the per-point curves")

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _read_data_file(path: str) -> list[float]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [line.strip() for line in fh]
    except OSError as exc:
        raise ConfigError(f"cannot read data file {path!r}: {exc}") from exc
    try:
        values = [float(line) for line in lines if line]
    except ValueError as exc:
        raise ConfigError(f"non-numeric line in {path!r}: {exc}") from exc
    if not values:
        raise ConfigError(f"data file {path!r} is empty")
    return values


def _parse_tau(text: str, m: int, n: int) -> float | None:
    if text == "sqrt":
        return None
    if text.startswith("custom:"):
        try:
            return float(text.split(":", 1)[1])
        except ValueError as exc:
            raise ConfigError(f"bad --tau value {text!r}") from exc
    raise ConfigError("--tau must be 'sqrt' or custom:<ratio>")


def _load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    try:
        config = ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(p) for p in first["loc"])
        raise ConfigError(f"config {path!r} invalid at {where}: {first['msg']}") from exc
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            config = config.model_copy(update={"root_seed": int(env_seed)})
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer") from exc
    return config


def _cmd_ci(args) -> int:
    values = _read_data_file(args.data)
    tau_ratio = _parse_tau(args.tau, args.m, len(values))
    try:
        request = service.CiRequest(
            values=values, m=args.m, T=args.T, alpha=args.alpha,
            eps_total=args.eps_total, delta_total=args.delta_total,
            split=args.split, mode=args.mode, mechanism=args.mechanism,
            range_lo=args.range_lo, range_hi=args.range_hi,
            tau_ratio=tau_ratio, seed=args.seed,
        )
    except ValidationError as exc:
        raise ConfigError(str(exc.errors()[0]["msg"])) from exc
    response = call_service("ci", request, args.server)
    print(f"{_FMT % response.lower} {_FMT % response.upper}")
    if args.emit_cdf:
        try:
            with open(args.emit_cdf, "w", encoding="utf-8", newline="\n") as fh:
                for point in response.cdf_points:
                    fh.write(_FMT % point + "\n")
        except OSError as exc:
            raise RuntimeFailure(f"cannot write {args.emit_cdf!r}: {exc}") from exc
    return EXIT_OK


def _cmd_budget(args) -> int:
    try:
        request = service.BudgetRequest(
            eps_total=args.eps_total, delta_total=args.delta_total,
            m=args.m, n=args.n, T=args.T, split=args.split, mode=args.mode,
        )
    except ValidationError as exc:
        raise ConfigError(str(exc.errors()[0]["msg"])) from exc
    r = call_service("budget", request, args.server)
    columns = (
        ("eps_total", r.eps_total), ("delta_total", r.delta_total),
        ("m", r.m), ("n", r.n), ("T", r.T), ("split", r.split), ("mode", r.mode),
        ("eps_center", r.eps_center), ("delta_center", r.delta_center),
        ("eps_subsample", r.eps_subsample), ("delta_subsample", r.delta_subsample),
        ("eps_amp", r.eps_amp), ("delta_amp", r.delta_amp),
        ("delta_slack", r.delta_slack),
        ("composed_eps", r.composed_eps), ("composed_delta", r.composed_delta),
    )
    print(" ".join(name for name, _ in columns))
    print(" ".join(_FMT % v if isinstance(v, float) else str(v) for _, v in columns))
    return EXIT_OK


def _cmd_coverage(args) -> int:
    config = _load_config(args.config)
    request = service.CoverageRequest(config=config, workers=args.workers)
    response = call_service("coverage", request, args.server)
    report = service.coverage_report_from_rows(response.rows)
    out_path = args.output or config.output_path
    from .harness import write_coverage_csv

    write_coverage_csv(report, out_path)
    with open(out_path, "r", encoding="utf-8") as fh:
        sys.stdout.write(fh.read())
    if response.has_errors:
        raise RuntimeFailure("one or more grid cells produced error rows")
    return EXIT_OK


def _cmd_cdf(args) -> int:
    config = _load_config(args.config)
    request = service.CdfRequest(config=config, include_grid=bool(args.emit_grid))
    response = call_service("cdf", request, args.server)
    report = service.cdf_report_from_rows(response.rows)
    out_path = args.output or config.output_path
    from .harness import write_cdf_csv, write_cdf_grid_csv

    write_cdf_csv(report, out_path)
    if args.emit_grid:
        write_cdf_grid_csv(report, args.emit_grid)
    with open(out_path, "r", encoding="utf-8") as fh:
        sys.stdout.write(fh.read())
    if response.has_errors:
        raise RuntimeFailure("one or more grid cells produced error rows")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run(service.app, host=args.host, port=args.port)
    return EXIT_OK


_COMMANDS = {
    "ci": _cmd_ci,
    "budget": _cmd_budget,
    "coverage": _cmd_coverage,
    "cdf": _cmd_cdf,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RuntimeFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
