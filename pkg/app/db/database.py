# app/db/database.py
from peewee import SqliteDatabase


class Database:

    def __init__(self, database_path: str = ":memory:"):
        self.database = SqliteDatabase(database_path)

    def connect(self):
        self.database.connect(reuse_if_open=True)

    def close(self):
        if not self.database.is_closed():
            self.database.close()

    def create_tables(self, models):
        """Create tables in the database."""
        # an in-memory database loses its tables once the connection closes
        self.connect()
        self.database.create_tables(models, safe=True)

    def bind(self, models):
        """Temporarily bind models to this database (scratch merges)."""
        return self.database.bind_ctx(models)


# default binding for the models; a lab binds them to the Settings.report_db database
database_instance = Database()
