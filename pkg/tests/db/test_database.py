import pytest
from unittest.mock import patch

from app.db.database import Database
from app.models.report_models import ReportRecord


@pytest.fixture
def scratch_db(tmp_path):
    db = Database(str(tmp_path / "scratch.db"))
    yield db
    db.close()


def test_sqlite_path_is_passed_through():
    with patch("app.db.database.SqliteDatabase") as MockSqliteDatabase:
        Database("reports.db")

    MockSqliteDatabase.assert_called_once_with("reports.db")


def test_connect_twice_reuses_the_connection(scratch_db):
    scratch_db.connect()
    scratch_db.connect()

    assert not scratch_db.database.is_closed()


def test_close_is_a_no_op_when_closed(scratch_db):
    scratch_db.connect()
    scratch_db.close()
    scratch_db.close()

    assert scratch_db.database.is_closed()


def test_create_tables_opens_a_connection(scratch_db):
    # Act
    with scratch_db.bind([ReportRecord]):
        scratch_db.create_tables([ReportRecord])

    # Assert
    assert not scratch_db.database.is_closed()
    assert scratch_db.database.table_exists("report_rows")


def test_create_tables_is_safe_to_repeat(scratch_db):
    with scratch_db.bind([ReportRecord]):
        scratch_db.create_tables([ReportRecord])
        scratch_db.create_tables([ReportRecord])

    assert scratch_db.database.get_tables() == ["report_rows"]


def test_bind_is_scoped(scratch_db):
    default = ReportRecord._meta.database

    with scratch_db.bind([ReportRecord]):
        assert ReportRecord._meta.database is scratch_db.database

    assert ReportRecord._meta.database is default
