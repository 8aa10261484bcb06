import pytest
from unittest.mock import patch, MagicMock
from app.core.config import Settings
from app.core.initializer import LOG_FORMAT, LabInitializer
from app.db.database import Database
from app.models.report_models import ReportRecord


@pytest.fixture
def mock_database():
    db_mock = MagicMock(spec=Database)
    db_mock.database = MagicMock()
    return db_mock


@pytest.fixture
def settings(tmp_path):
    return Settings(out_dir=str(tmp_path / "results"), log_level="debug")


@pytest.fixture
def lab_initializer(settings, mock_database):
    return LabInitializer(settings, mock_database)


def test_initialize_creates_report_table(lab_initializer, mock_database):
    with patch('app.core.initializer.logging.basicConfig'):
        lab_initializer.initialize()

    mock_database.create_tables.assert_called_once_with([ReportRecord])


def test_initialize_configures_logging(lab_initializer):
    with patch('app.core.initializer.logging.basicConfig') as mock_basic_config:
        lab_initializer.initialize()

    mock_basic_config.assert_called_once_with(level="DEBUG", format=LOG_FORMAT)


def test_initialize_creates_output_directory(lab_initializer, settings, tmp_path):
    with patch('app.core.initializer.logging.basicConfig'):
        lab_initializer.initialize()

    assert (tmp_path / "results").is_dir()


def test_report_table_is_created_on_the_bound_database(lab_initializer, mock_database):
    with patch('app.core.initializer.logging.basicConfig'):
        lab_initializer.initialize()

    mock_database.bind.assert_called_once_with([ReportRecord])
    mock_database.bind.return_value.__enter__.assert_called_once()
