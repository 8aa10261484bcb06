import numpy as np
import pytest

from app.core.errors import ReportFormatError
from app.services.sobolev_grid import GridDomain, GridFunction
from app.utils.grid_io import read_grid_function, render_grid_function, write_grid_function


def test_render_interval_function():
    f = GridFunction(GridDomain.interval(5), [0.0, 1.0, 0.5, 0.25, 0.0])

    lines = render_grid_function(f).splitlines()

    assert lines == ["# domain=interval,n=5,h=0.25", "0", "1", "0.5", "0.25", "0"]


def test_render_rectangle_function_has_one_value_per_line():
    f = GridFunction(GridDomain.rectangle(4), np.arange(16.0))

    lines = render_grid_function(f).splitlines()

    assert lines[0].startswith("# domain=rectangle,n=4,h=0.333")
    assert len(lines) == 17
    assert all("," not in line for line in lines[1:])
    assert lines[-1] == "15"


def test_write_and_read_grid_function(tmp_path):
    # Arrange
    domain = GridDomain.torus(16)
    f = GridFunction(domain, np.sin(2 * np.pi * domain.nodes[:, 0]))

    # Act
    path = write_grid_function(tmp_path / "f.csv", f)
    loaded = read_grid_function(path)

    # Assert
    assert loaded.domain == domain
    np.testing.assert_array_equal(loaded.values, f.values)


@pytest.mark.parametrize("body", [
    "0\n1\n",
    "# domain=sphere,n=4,h=0.25\n",
    "# domain=interval,n=5,h=0.2\n0\n0\n0\n0\n0\n",
    "# domain=interval,n=5,h=0.25\n0\n1\n",
    "# domain=interval,n=5,h=0.25\n0\n1\nx\n0\n0\n",
    "# domain=interval,n=5,h=0.25\nx,value\n0\n1\n0\n0\n",
])
def test_malformed_grid_files(tmp_path, body):
    path = tmp_path / "bad.csv"
    path.write_text(body, encoding="utf-8")

    with pytest.raises(ReportFormatError):
        read_grid_function(path)
