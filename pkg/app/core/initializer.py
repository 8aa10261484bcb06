import logging
from pathlib import Path

from app.core.config import Settings
from app.models.report_models import ReportRecord

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class LabInitializer:
    def __init__(self, settings: Settings, db):
        self.settings = settings
        self.db = db

    def initialize(self):
        logging.basicConfig(level=self.settings.log_level, format=LOG_FORMAT)
        Path(self.settings.out_dir).mkdir(parents=True, exist_ok=True)
        with self.db.bind([ReportRecord]):
            self.db.create_tables([ReportRecord])
