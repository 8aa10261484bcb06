from peewee import Model, AutoField, IntegerField, CharField, TextField, FloatField

from app.db.database import database_instance


class ReportRecord(Model):
    id = AutoField()
    run_id = CharField(index=True)
    experiment = CharField(index=True)
    row = IntegerField()
    case = CharField()
    seed = IntegerField()
    parameters = TextField()
    measured = FloatField(null=True)
    gap = FloatField(null=True)
    status = CharField()  # PASS | FAIL
    witness = TextField(null=True)
    source = TextField(null=True)  # file the row was merged from

    class Meta:
        database = database_instance.database
        table_name = 'report_rows'
        indexes = (
            (('run_id', 'row'), True),
        )
