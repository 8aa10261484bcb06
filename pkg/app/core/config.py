import os
from typing import Literal

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator

load_dotenv()


class Settings(BaseModel):
    out_dir: str = "results"
    seed: int = Field(default=0, ge=0)
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"
    report_db: str = ":memory:"

    @field_validator("log_level", mode="before")
    def normalize_level(cls, value):
        return value.upper() if isinstance(value, str) else value

    @classmethod
    def from_env(cls) -> "Settings":
        return cls(
            out_dir=os.getenv("LATLAB_OUT_DIR", "results"),
            seed=os.getenv("LATLAB_SEED", "0"),
            log_level=os.getenv("LATLAB_LOG_LEVEL", "INFO"),
            report_db=os.getenv("LATLAB_REPORT_DB", ":memory:"),
        )
