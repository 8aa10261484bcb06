import pytest
from peewee import IntegrityError

from app.db.database import Database
from app.models.report_models import ReportRecord


@pytest.fixture
def report_db(tmp_path):
    db = Database(str(tmp_path / "reports.db"))
    with db.bind([ReportRecord]):
        db.create_tables([ReportRecord])
        yield db
    db.close()


def record(**overrides):
    fields = {
        "run_id": "abc123def456",
        "experiment": "sup-construct",
        "row": 0,
        "case": "z=0",
        "seed": 0,
        "parameters": "{}",
        "status": "PASS",
    }
    fields.update(overrides)
    return fields


def test_report_record_table_name():
    assert ReportRecord._meta.table_name == "report_rows"


def test_report_record_optional_fields_default_to_none(report_db):
    # Act
    created = ReportRecord.create(**record())

    # Assert
    stored = ReportRecord.get_by_id(created.id)
    assert stored.measured is None
    assert stored.gap is None
    assert stored.witness is None
    assert stored.source is None


def test_report_record_run_and_row_are_unique(report_db):
    ReportRecord.create(**record())

    with pytest.raises(IntegrityError):
        ReportRecord.create(**record(case="duplicate"))


def test_report_record_same_row_in_other_run(report_db):
    ReportRecord.create(**record())
    ReportRecord.create(**record(run_id="000000000000"))

    assert ReportRecord.select().count() == 2
