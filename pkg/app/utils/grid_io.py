from pathlib import Path

import numpy as np

from app.core.errors import ReportFormatError
from app.services.sobolev_grid import GridDomain, GridFunction
from app.utils.report_io import format_number, write_atomic


def render_grid_function(f: GridFunction) -> str:
    """A `# domain=<kind>,n=<n>,h=<h>` header, then one value per line in node order."""
    domain = f.domain
    lines = [f"# domain={domain.kind},n={domain.n},h={format_number(domain.h)}"]
    lines.extend(format_number(value) for value in np.ravel(f.values))
    return "\n".join(lines) + "\n"


def write_grid_function(path, f: GridFunction) -> Path:
    return write_atomic(path, render_grid_function(f))


def read_grid_function(path) -> GridFunction:
    """Reads a grid function on the unit domain named in the header."""
    path = str(path)
    with open(path, encoding="utf-8", newline="") as handle:
        lines = handle.read().splitlines()
    if not lines or not lines[0].startswith("# "):
        raise ReportFormatError("missing '# domain=...' header", path, 1)
    try:
        header = dict(token.split("=", 1) for token in lines[0][2:].split(","))
        kind, n = header["domain"], int(header["n"])
        builders = {"interval": GridDomain.interval, "torus": GridDomain.torus,
                    "rectangle": GridDomain.rectangle}
        domain = builders[kind](n)
    except (KeyError, ValueError) as e:
        raise ReportFormatError(f"malformed header: {e}", path, 1)
    if abs(domain.h - float(header.get("h", domain.h))) > 1e-12:
        raise ReportFormatError(f"h={header['h']} does not match the unit {kind} with n={n}", path, 1)
    body = lines[1:]
    if len(body) != domain.size:
        raise ReportFormatError(f"expected {domain.size} values, got {len(body)}", path, len(lines))
    values = np.empty(domain.size)
    for index, line in enumerate(body):
        try:
            values[index] = float(line)
        except ValueError:
            raise ReportFormatError(f"malformed value {line!r}", path, index + 2)
    return GridFunction(domain, values)
