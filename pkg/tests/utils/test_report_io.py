import json

import numpy as np
import pytest

from app.api.schemas.experiment_schemas import ReportRow, RunSummary
from app.core.errors import ReportFormatError
from app.utils.report_io import (
    COLUMNS,
    dump_json,
    format_number,
    read_report,
    render_report,
    to_plain,
    write_report,
    write_summary,
)

HEADER = "# schema=1,experiment=sup-construct,run_id=abc,seed=7"


@pytest.fixture
def rows():
    return [
        ReportRow(run_id="abc", experiment="sup-construct", row=0, case="z=0", seed=7,
                  parameters={"n": 32, "tol": 1e-6}, measured=0.1, gap=-1e-7, status="PASS"),
        ReportRow(run_id="abc", experiment="sup-construct", row=1, case="z=1", seed=7,
                  parameters={}, measured=None, gap=None, status="FAIL",
                  witness={"z": [1.0, -0.5], "note": "a, b"}),
    ]


def test_to_plain_converts_numpy_values():
    value = {"a": np.float64(0.5), "b": np.arange(3), "c": (np.int64(2), [np.bool_(True)])}

    assert to_plain(value) == {"a": 0.5, "b": [0, 1, 2], "c": [2, [True]]}


def test_dump_json_is_canonical():
    assert dump_json({"b": 1, "a": [1.5]}) == '{"a":[1.5],"b":1}'


@pytest.mark.parametrize("value, text", [(None, ""), (0.1, "0.10000000000000001"), (2, "2")])
def test_format_number(value, text):
    assert format_number(value) == text


def test_render_report_layout(rows):
    lines = render_report(rows, "sup-construct", "abc", 7).splitlines()

    assert lines[0] == HEADER
    assert lines[1] == ",".join(COLUMNS)
    assert lines[2].startswith("abc,sup-construct,0,z=0,7,")
    assert lines[3].endswith('FAIL,"{""note"":""a, b"",""z"":[1.0,-0.5]}"')


def test_write_and_read_report(tmp_path, rows):
    # Arrange
    path = tmp_path / "out" / "sup-construct-abc.csv"

    # Act
    write_report(path, rows, "sup-construct", "abc", 7)
    header, parsed = read_report(path)

    # Assert
    assert header == {"schema": "1", "experiment": "sup-construct", "run_id": "abc", "seed": "7"}
    assert [row.model_dump() for row in parsed] == [row.model_dump() for row in rows]
    assert not list(path.parent.glob("*.tmp"))


def test_write_summary_uses_pass_alias(tmp_path):
    summary = RunSummary(run_id="abc", experiment="sup-construct", passed=2, fail=1, worst_gap=0.5,
                         seed=7, wall_time=1.25)

    path = write_summary(tmp_path / "abc.json", summary)

    assert json.loads(path.read_text())["pass"] == 2


@pytest.mark.parametrize("body, line", [
    ("", 1),
    ("schema=1\n", 1),
    ("# schema=2,experiment=x,run_id=y,seed=0\n", 1),
    (HEADER + "\nrun_id,experiment\n", 2),
    (HEADER + "\n" + ",".join(COLUMNS) + "\nabc,sup-construct,0\n", 3),
    (HEADER + "\n" + ",".join(COLUMNS) + "\nabc,sup-construct,x,c,7,{},,,PASS,\n", 3),
    (HEADER + "\n" + ",".join(COLUMNS) + "\nabc,sup-construct,0,c,7,{},,,FAIL,\n", 3),
])
def test_malformed_reports_name_file_and_line(tmp_path, body, line):
    # Arrange
    path = tmp_path / "bad.csv"
    path.write_text(body, encoding="utf-8")

    # Act
    with pytest.raises(ReportFormatError) as error:
        read_report(path)

    # Assert
    assert error.value.line == line
    assert str(error.value).startswith(f"{path}:{line}: ")


def test_missing_report(tmp_path):
    with pytest.raises(ReportFormatError) as error:
        read_report(tmp_path / "missing.csv")

    assert error.value.line == 0
