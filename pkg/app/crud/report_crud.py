import json
from typing import Iterable, List, Optional

from peewee import chunked

from app.api.schemas.experiment_schemas import ExperimentTally, MergeSummary, ReportRow
from app.models.report_models import ReportRecord

# keeps each INSERT below SQLite's bound-variable limit
INSERT_BATCH = 50


class ReportCRUD:
    def __init__(self, db):
        self.db = db

    def create_rows(self, rows: Iterable[ReportRow], source: Optional[str] = None):
        """Inserts rows; a (run_id, row) pair already present is ignored."""
        payload = [
            {
                "run_id": row.run_id,
                "experiment": row.experiment,
                "row": row.row,
                "case": row.case,
                "seed": row.seed,
                "parameters": json.dumps(row.parameters, sort_keys=True),
                "measured": row.measured,
                "gap": row.gap,
                "status": row.status,
                "witness": None if row.witness is None else json.dumps(row.witness, sort_keys=True),
                "source": source,
            }
            for row in rows
        ]
        with self.db.atomic():
            for batch in chunked(payload, INSERT_BATCH):
                ReportRecord.insert_many(batch).on_conflict_ignore().execute()

    def get_rows(self, run_ids: Optional[Iterable[str]] = None) -> List[ReportRecord]:
        query = ReportRecord.select().order_by(ReportRecord.experiment, ReportRecord.run_id, ReportRecord.row)
        if run_ids is not None:
            query = query.where(ReportRecord.run_id.in_(sorted(run_ids)))
        return list(query)

    def summarize(self, run_ids: Optional[Iterable[str]] = None) -> MergeSummary:
        tallies, witnesses = {}, []
        for record in self.get_rows(run_ids):
            tally = tallies.setdefault(record.experiment, ExperimentTally())
            if record.run_id not in tally.runs:
                tally.runs.append(record.run_id)
            if record.status == "PASS":
                tally.passed += 1
            else:
                tally.fail += 1
                witnesses.append({
                    "run_id": record.run_id,
                    "experiment": record.experiment,
                    "row": record.row,
                    "case": record.case,
                    "witness": json.loads(record.witness) if record.witness else None,
                })
            if record.gap is not None and (tally.worst_gap is None or record.gap > tally.worst_gap):
                tally.worst_gap = record.gap
        status = "FAIL" if any(tally.fail for tally in tallies.values()) else "PASS"
        return MergeSummary(status=status, experiments=tallies, witnesses=witnesses)
