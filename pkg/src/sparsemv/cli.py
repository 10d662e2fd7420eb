"""Command-line front end.

Settings are resolved in four layers, later ones winning: built-in
defaults, the JSON file given by ``--config``, ``SPARSEMV_*`` environment
variables, then command-line flags.  Environment overrides use
``SPARSEMV_SEED``, ``SPARSEMV_TOL``, ``SPARSEMV_INPUT``, ``SPARSEMV_OUT``,
``SPARSEMV_INPUT_KIND`` and ``SPARSEMV_<SECTION>__<KEY>`` for nested keys,
e.g. ``SPARSEMV_CALIBRATION__P1=0.9``.  Values are parsed as JSON when
possible and taken as strings otherwise.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 solver
non-convergence.
"""
from __future__ import annotations

import argparse
import copy
import json
import logging
import os
import sys
import time
from importlib import resources
from pathlib import Path

import jsonschema

from . import io
from .backtest import BacktestConfig, build_problem, run_backtest
from .estimation import DEFAULT_ETA_FLOOR, estimate
from .exceptions import ConfigurationError, DataError, NonConvergenceError, SparseMVError
from .objective import objective
from .schemas import CONFIG_SCHEMA, SCHEMA_VERSION
from .solvers import SolverConfig, solve
from .synthetic import planted_problem

logger = logging.getLogger("sparsemv")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NONCONVERGENCE = 0, 2, 3, 4
ENV_PREFIX = "SPARSEMV_"

DEFAULT_CONFIG = {
    "spec_version": SCHEMA_VERSION,
    "input": None,
    "input_kind": "prices",
    "out": ".",
    "seed": 0,
    "solver": {"method": "adaptive", "tol": 1e-6, "lam": None, "batch_size": None,
               "max_inner": 10_000, "max_outer": None},
    "estimation": {"mean_method": "james_stein", "cov_method": "ledoit_wolf",
                   "eigen_floor": None, "eta_floor": DEFAULT_ETA_FLOOR},
    "calibration": {"K": 200, "p1": 0.7, "p2": 0.7, "alpha_floor": None,
                    "criterion": "weighted_elastic_net"},
    "backtest": {"train_len": 252, "hold_len": 63},
    "bench": {"dimensions": [500, 2000], "planted": [90], "seeds": [0],
              "solvers": ["adaptive", "split_bregman", "fista"]},
}


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def _parse_env_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def env_overrides(environ=None) -> dict:
    """Nested override dict built from ``SPARSEMV_*`` variables."""
    environ = os.environ if environ is None else environ
    out: dict = {}
    for name, raw in sorted(environ.items()):
        if not name.startswith(ENV_PREFIX) or name == ENV_PREFIX + "CONFIG":
            continue
        path = [part.lower() for part in name[len(ENV_PREFIX):].split("__")]
        if path == ["tol"]:
            path = ["solver", "tol"]
        if path[-1] == "k":
            path[-1] = "K"
        node = out
        for part in path[:-1]:
            node = node.setdefault(part, {})
        node[path[-1]] = _parse_env_value(raw)
    return out


def _field_path(error: jsonschema.ValidationError) -> str:
    return ".".join(str(p) for p in error.absolute_path) or "<config>"


def validate_config(config: dict) -> dict:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(config), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        lines = [f"{_field_path(e)}: {e.message}" for e in errors]
        raise ConfigurationError("invalid configuration:\n  " + "\n  ".join(lines))
    return config


def load_config(path=None, environ=None, flags: dict | None = None) -> dict:
    """Resolve defaults, config file, environment and flags; then validate."""
    environ = os.environ if environ is None else environ
    config = DEFAULT_CONFIG
    path = path or environ.get(ENV_PREFIX + "CONFIG")
    if path:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigurationError(f"config {path} must hold a JSON object")
        config = _merge(config, user)
    config = _merge(config, env_overrides(environ))
    config = _merge(config, flags or {})
    return validate_config(config)


def backtest_config(config: dict) -> BacktestConfig:
    s, e, c, b = config["solver"], config["estimation"], config["calibration"], config["backtest"]
    solver_config = SolverConfig(lam=s["lam"], tol=s["tol"], batch_size=s["batch_size"],
                                 max_inner=s["max_inner"], max_outer=s["max_outer"])
    return BacktestConfig(train_len=b["train_len"], hold_len=b["hold_len"], criterion=c["criterion"],
                          p1=c["p1"], p2=c["p2"], n_bootstrap=c["K"], solver=s["method"],
                          solver_config=solver_config, seed=config["seed"],
                          alpha_floor=c["alpha_floor"], mean_method=e["mean_method"],
                          cov_method=e["cov_method"], eigen_floor=e["eigen_floor"],
                          eta_floor=e["eta_floor"])


def sample_data_path() -> Path:
    return Path(str(resources.files("sparsemv") / "data" / "sample_prices.csv"))


def load_returns(config: dict):
    path = config["input"] or sample_data_path()
    if config["input_kind"] == "returns":
        return io.read_returns(path)
    return io.compute_excess_returns(io.read_prices(path))


def _out_dir(config: dict) -> Path:
    out = Path(config["out"])
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigurationError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def cmd_solve(config: dict) -> int:
    returns = load_returns(config)
    bc = backtest_config(config)
    problem = build_problem(returns.data, bc, config["seed"])
    start = time.perf_counter()
    portfolio = solve(problem, bc.solver_config, bc.solver)
    elapsed = time.perf_counter() - start
    out = _out_dir(config)
    io.write_weights(out / "weights.csv", returns.asset_ids, portfolio.w)
    _write_json(out / "certificate.json", {
        "spec_version": SCHEMA_VERSION,
        "objective": objective(problem, portfolio.w),
        "certified_gap": portfolio.certified_gap,
        "support_size": portfolio.support_size,
        "iterations": int(portfolio.iterations),
        "wall_time": elapsed,
        "solver": bc.solver,
        "seed": config["seed"],
    })
    logger.info("support %d, certified gap %s", portfolio.support_size, portfolio.certified_gap)
    return EXIT_OK


def cmd_backtest(config: dict) -> int:
    returns = load_returns(config)
    bc = backtest_config(config)
    report = run_backtest(returns, bc)
    out = _out_dir(config)
    rebalances = [
        {"date": date, "support_size": size, "turnover": turnover,
         "weights": {a: float(x) for a, x in zip(report.asset_ids, w) if x != 0.0}}
        for date, size, turnover, w in zip(report.rebalance_dates, report.support_sizes,
                                           report.turnover, report.weights)
    ]
    _write_json(out / "report.json", {
        "spec_version": SCHEMA_VERSION,
        "sharpe": report.sharpe,
        "n_periods": int(report.returns.size),
        "criterion": bc.criterion,
        "seed": config["seed"],
        "rebalances": rebalances,
    })
    io.write_columns(out / "daily_returns.csv", ["date", "portfolio_return"],
                     [report.periods, [float(r) for r in report.returns]])
    logger.info("Sharpe %.6f over %d periods", report.sharpe, report.returns.size)
    return EXIT_OK


def cmd_bench(config: dict) -> int:
    bench = config["bench"]
    tol = config["solver"]["tol"]
    solver_config = backtest_config(config).solver_config
    columns = [[] for _ in range(7)]
    for n in bench["dimensions"]:
        for planted in bench["planted"]:
            for seed in bench["seeds"]:
                problem = planted_problem(n, planted, seed)
                for name in bench["solvers"]:
                    start = time.perf_counter()
                    portfolio = solve(problem, solver_config, name)
                    elapsed = time.perf_counter() - start
                    row = (n, planted, seed, portfolio.support_size, name, elapsed,
                           objective(problem, portfolio.w))
                    for col, value in zip(columns, row):
                        col.append(value)
                    logger.info("N=%d planted=%d seed=%d %s: %.3fs support %d (tol %g)",
                                n, planted, seed, name, elapsed, portfolio.support_size, tol)
    io.write_columns(_out_dir(config) / "bench.csv",
                     ["dimension", "planted", "seed", "sparsity_achieved", "solver",
                      "wall_time_sec", "objective"], columns)
    return EXIT_OK


def cmd_estimate(config: dict) -> int:
    returns = load_returns(config)
    e = config["estimation"]
    est = estimate(returns, e["eigen_floor"], e["eta_floor"], e["mean_method"], e["cov_method"])
    _write_json(_out_dir(config) / "estimates.json", {
        "spec_version": SCHEMA_VERSION,
        "asset_ids": list(returns.asset_ids),
        "mu": est.mu.tolist(),
        "gamma": est.gamma.tolist(),
        "mean_method": est.mean_method,
        "cov_method": est.cov_method,
        "intensities": {k: float(v) for k, v in est.intensities.items()},
    })
    return EXIT_OK


def cmd_calibrate(config: dict) -> int:
    from .backtest import penalty_weights

    returns = load_returns(config)
    weights = penalty_weights(returns.data, backtest_config(config), config["seed"])
    io.write_columns(_out_dir(config) / "penalty_weights.csv", ["asset_id", "alpha", "beta"],
                     [returns.asset_ids, [float(a) for a in weights.alpha],
                      [float(b) for b in weights.beta]])
    return EXIT_OK


COMMANDS = {
    "solve": (cmd_solve, "estimate, calibrate and solve on the input; write weights.csv and certificate.json"),
    "backtest": (cmd_backtest, "rolling-window backtest; write report.json and daily_returns.csv"),
    "bench": (cmd_bench, "time the solvers on synthetic planted-support problems; write bench.csv"),
    "estimate": (cmd_estimate, "write the mean and covariance estimates to estimates.json"),
    "calibrate": (cmd_calibrate, "write bootstrap-calibrated penalty weights to penalty_weights.csv"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--input", metavar="PATH", help="price (or returns) CSV; defaults to the bundled sample")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--seed", metavar="U64", type=int, help="bootstrap / instance seed")
    common.add_argument("--tol", metavar="REAL", type=float, help="certified objective gap")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = argparse.ArgumentParser(prog="sparsemv", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text, description=help_text)
    return parser


def _flag_overrides(args: argparse.Namespace) -> dict:
    flags: dict = {}
    for key in ("input", "out", "seed"):
        if getattr(args, key) is not None:
            flags[key] = getattr(args, key)
    if args.tol is not None:
        flags["solver"] = {"tol": args.tol}
    return flags


def main(argv=None, environ=None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config, environ, _flag_overrides(args))
        return COMMANDS[args.command][0](config)
    except NonConvergenceError as exc:
        print(f"error: solver did not converge: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SparseMVError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
