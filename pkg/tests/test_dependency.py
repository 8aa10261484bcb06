import pytest
from unittest.mock import MagicMock

from app.clients.lp_client import LinearProgramClient
from app.db.database import Database
from app.dependencies import Dependency


@pytest.fixture
def report_db():
    return MagicMock(spec=Database, database=MagicMock(name="sqlite"))


def test_session_is_the_sqlite_handle(report_db):
    # Arrange
    dependency = Dependency(report_db)

    # Act
    session = dependency.get_db()
    handle = next(session)

    # Assert
    report_db.connect.assert_called_once_with()
    report_db.close.assert_not_called()
    assert handle is report_db.database
    session.close()


def test_session_closes_when_the_merge_fails(report_db):
    session = Dependency(report_db).get_db()
    next(session)

    with pytest.raises(RuntimeError):
        session.throw(RuntimeError("merge failed"))

    report_db.close.assert_called_once_with()


@pytest.mark.parametrize("tolerance", [1e-9, 1e-6])
def test_lp_client_carries_the_tolerance(report_db, tolerance):
    client = Dependency(report_db, lp_tolerance=tolerance).get_lp_client()

    assert isinstance(client, LinearProgramClient)
    assert client.tolerance == tolerance
    assert client.method == "highs"


def test_default_lp_tolerance(report_db):
    assert Dependency(report_db).get_lp_client().tolerance == 1e-9
