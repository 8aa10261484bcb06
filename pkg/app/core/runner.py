import logging
import time
from pathlib import Path
from typing import List, Sequence

from app.api.router import ExperimentRouter
from app.api.schemas.experiment_schemas import ExperimentConfig, MergeSummary, ReportRow, RunSummary
from app.core.config import Settings
from app.core.errors import UsageError
from app.crud.report_crud import ReportCRUD
from app.dependencies import Dependency
from app.models.report_models import ReportRecord
from app.utils.grid_io import write_grid_function
from app.utils.report_io import read_report, to_plain, write_report, write_summary

logger = logging.getLogger(__name__)


class LabRunner:
    def __init__(self, router: ExperimentRouter, settings: Settings, dependency: Dependency,
                 report_crud=ReportCRUD):
        self.router = router
        self.settings = settings
        self.dependency = dependency
        self.report_crud = report_crud

    def run(self, config: ExperimentConfig) -> List[ReportRow]:
        """Runs one experiment and writes <experiment>-<run_id>.csv/.json to the output directory."""
        started = time.perf_counter()
        run_id = config.run_id
        logger.info(f"Running {config.experiment} run_id={run_id} seed={config.seed}")
        results = self.router.dispatch(config)
        rows = [
            ReportRow(
                run_id=run_id,
                experiment=config.experiment,
                row=index,
                case=result.case,
                seed=config.seed,
                parameters=to_plain(result.parameters),
                measured=result.measured,
                gap=result.gap,
                status="PASS" if result.passed else "FAIL",
                witness=to_plain(result.witness),
            )
            for index, result in enumerate(results)
        ]
        out_dir = Path(config.out or self.settings.out_dir)
        stem = f"{config.experiment}-{run_id}"
        write_report(out_dir / f"{stem}.csv", rows, config.experiment, run_id, config.seed)
        for result in results:
            for name, grid_function in result.artifacts.items():
                write_grid_function(out_dir / f"{stem}-{name}.csv", grid_function)
        gaps = [row.gap for row in rows if row.gap is not None]
        summary = RunSummary(
            run_id=run_id,
            experiment=config.experiment,
            passed=sum(row.status == "PASS" for row in rows),
            fail=sum(row.status == "FAIL" for row in rows),
            worst_gap=max(gaps) if gaps else None,
            seed=config.seed,
            wall_time=time.perf_counter() - started,
        )
        write_summary(out_dir / f"{stem}.json", summary)
        logger.info(f"{config.experiment} run_id={run_id}: {summary.passed} PASS, {summary.fail} FAIL")
        return rows

    def report_merge(self, paths: Sequence) -> MergeSummary:
        """Per-experiment PASS/FAIL counts over the given report CSVs, idempotent per (run_id, row)."""
        if not paths:
            raise UsageError("report merge needs at least one CSV")
        db_session = self.dependency.get_db()
        db = next(db_session)
        try:
            with self.dependency.db.bind([ReportRecord]):
                self.dependency.db.create_tables([ReportRecord])
                report_crud = self.report_crud(db)
                run_ids = set()
                for path in paths:
                    _, rows = read_report(path)
                    report_crud.create_rows(rows, source=str(path))
                    run_ids.update(row.run_id for row in rows)
                return report_crud.summarize(run_ids)
        finally:
            db_session.close()
