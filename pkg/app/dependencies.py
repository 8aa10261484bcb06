from app.clients.lp_client import LinearProgramClient
from app.db.database import Database


class Dependency:
    def __init__(self, db: Database, lp_tolerance: float = 1e-9):
        self.db = db
        self.lp_tolerance = lp_tolerance

    def get_db(self):
        try:
            self.db.connect()
            yield self.db.database
        finally:
            self.db.close()

    def get_lp_client(self) -> LinearProgramClient:
        return LinearProgramClient(tolerance=self.lp_tolerance)
