import argparse
import json
import logging
import sys
from functools import partial
from typing import List, Optional

import anyio
from pydantic import ValidationError

from .api.endpoints import ExtrapolationRoutes, LatticeRoutes, SobolevRoutes
from .api.router import ExperimentRouter
from .api.schemas.experiment_schemas import EXPERIMENTS, ExperimentConfig, ReportRow
from .core.config import Settings
from .core.errors import LabError, UsageError
from .core.initializer import LabInitializer
from .core.runner import LabRunner
from .db.database import Database
from .dependencies import Dependency


def create_lab(settings: Optional[Settings] = None) -> LabRunner:
    settings = settings or Settings.from_env()

    # Initialize lab components
    initializer = LabInitializer(settings, Database(settings.report_db))
    initializer.initialize()

    dependency = Dependency(initializer.db)
    # Include routers
    router = ExperimentRouter()
    lattice_routes = LatticeRoutes(dependency=dependency)
    sobolev_routes = SobolevRoutes()
    extrapolation_routes = ExtrapolationRoutes()
    router.include_router(lattice_routes.router)
    router.include_router(sobolev_routes.router)
    router.include_router(extrapolation_routes.router)

    return LabRunner(router, settings, dependency)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latlab",
        description="Run lattice lab experiments, or merge their reports with `latlab merge <csv>...`.",
    )
    parser.add_argument("experiments", nargs="*", metavar="experiment",
                        help=f"one or more of: {', '.join(EXPERIMENTS)}")
    parser.add_argument("--config", help="experiment config JSON")
    parser.add_argument("--out", help="output directory (overrides the config)")
    parser.add_argument("--seed", type=int, help="random seed (overrides the config)")
    return parser


def build_merge_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latlab merge", description="Merge report CSVs into one summary.")
    parser.add_argument("paths", nargs="+", metavar="csv")
    return parser


def _validation_fields(error: ValidationError) -> dict:
    return {".".join(str(part) for part in item["loc"]) or "config": item["msg"] for item in error.errors()}


def load_configs(args: argparse.Namespace, settings: Settings) -> List[ExperimentConfig]:
    base = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as handle:
                base = json.load(handle)
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read config {args.config}: {e}", fields={"config": str(e)})
        if not isinstance(base, dict):
            raise UsageError(f"config {args.config} is not a JSON object", fields={"config": "not an object"})
    experiments = list(args.experiments) or ([base["experiment"]] if "experiment" in base else [])
    if not experiments:
        raise UsageError("no experiment given", fields={"experiment": "at least one experiment is required"})
    configs = []
    for name in experiments:
        data = {**base, "experiment": name}
        data.setdefault("seed", settings.seed)
        if args.seed is not None:
            data["seed"] = args.seed
        if args.out is not None:
            data["out"] = args.out
        try:
            configs.append(ExperimentConfig.model_validate(data))
        except ValidationError as e:
            fields = _validation_fields(e)
            logging.error(f"Invalid config for {name}: {fields}")
            raise UsageError(f"invalid config for {name}", fields=fields)
    return configs


async def run_all(runner: LabRunner, configs: List[ExperimentConfig]) -> List[List[ReportRow]]:
    """Runs independent configs concurrently in worker threads; results keep the config order."""
    results: List[Optional[List[ReportRow]]] = [None] * len(configs)
    errors: List[Optional[Exception]] = [None] * len(configs)

    async def run_one(index: int, config: ExperimentConfig):
        # keep failures out of the task group so the caller sees the error itself
        try:
            results[index] = await anyio.to_thread.run_sync(partial(runner.run, config))
        except Exception as e:
            logging.error(f"Run of {config.experiment} failed: {e}")
            errors[index] = e

    async with anyio.create_task_group() as task_group:
        for index, config in enumerate(configs):
            task_group.start_soon(run_one, index, config)
    for error in errors:
        if error is not None:
            raise error
    return results


def main(argv: Optional[List[str]] = None) -> int:
    """Exit code 0 when every row passes, 1 on any FAIL, 2 on a usage error, otherwise the error's own code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        settings = Settings.from_env()
    except ValidationError as e:
        logging.error(f"Invalid environment settings: {_validation_fields(e)}")
        return UsageError.exit_code
    try:
        if argv[:1] == ["merge"]:
            args = build_merge_parser().parse_args(argv[1:])
            runner = create_lab(settings)
            summary = runner.report_merge(args.paths)
            print(json.dumps(summary.model_dump(by_alias=True), sort_keys=True, indent=2))
            return 0 if summary.status == "PASS" else 1
        args = build_parser().parse_args(argv)
        configs = load_configs(args, settings)
        runner = create_lab(settings)
        reports = anyio.run(run_all, runner, configs)
    except LabError as e:
        logging.error(f"latlab stopped: {e}")
        return e.exit_code
    failed = sum(row.status == "FAIL" for rows in reports for row in rows)
    return 1 if failed else 0
