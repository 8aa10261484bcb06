import pytest
from pydantic import ValidationError

from app.core.config import Settings


def test_settings_defaults(monkeypatch):
    for name in ("LATLAB_OUT_DIR", "LATLAB_SEED", "LATLAB_LOG_LEVEL", "LATLAB_REPORT_DB"):
        monkeypatch.delenv(name, raising=False)

    settings = Settings.from_env()

    assert settings == Settings(out_dir="results", seed=0, log_level="INFO", report_db=":memory:")


def test_settings_from_environment(monkeypatch):
    # Arrange
    monkeypatch.setenv("LATLAB_OUT_DIR", "/tmp/latlab")
    monkeypatch.setenv("LATLAB_SEED", "42")
    monkeypatch.setenv("LATLAB_LOG_LEVEL", "debug")
    monkeypatch.setenv("LATLAB_REPORT_DB", "reports.db")

    # Act
    settings = Settings.from_env()

    # Assert
    assert settings.out_dir == "/tmp/latlab"
    assert settings.seed == 42
    assert settings.log_level == "DEBUG"
    assert settings.report_db == "reports.db"


@pytest.mark.parametrize("fields", [{"seed": -1}, {"log_level": "chatty"}])
def test_settings_validation(fields):
    with pytest.raises(ValidationError):
        Settings(**fields)
