"""files.py - Report export and grid file utilities.

Writes run reports as JSON, CSV and formatted text tables, and reads and
writes sampled wave functions in the documented grid format:

    # ndims 2
    # axis 0 <nodes> <lo> <hi>
    # axis 1 <nodes> <lo> <hi>
    <values, row-major, one line per last-axis row>

Complex samples are written as Python complex literals (`0.5+0.25j`).
A `.npz` path selects the binary form instead, which also keeps
non-uniform axes and custom quadrature weights.
"""

__author__ = "Abiola Raji"
__version__ = "2.0"
__date__ = "2026-10-17"

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .factorization import GriddedFunction, trapezoid_weights


def prettify(data, headers=None):
    """Convert list of tuples into formatted ASCII table.

    Creates a boxed table with proper alignment and borders
    for displaying tabular data in console output.

    Args:
        data (list): List of tuples to format as table.
        headers (tuple): Optional first row.

    Returns:
        str: Formatted ASCII table string.
    """
    if not data:
        return "No data"

    rows = ([tuple(headers)] if headers else []) + list(data)
    str_data = [tuple(map(str, row)) for row in rows]

    # Find max width for each column
    num_cols = max(len(row) for row in str_data)
    col_widths = [0] * num_cols
    for row in str_data:
        for i, val in enumerate(row):
            col_widths[i] = max(col_widths[i], len(val))

    horizontal = "+".join("-" * (w + 2) for w in col_widths)
    horizontal = f"+{horizontal}+"

    lines = [horizontal]
    for row in str_data:
        pretty_row = " | ".join(val.ljust(col_widths[i]) for i, val in enumerate(row))
        lines.append(f"| {pretty_row} |")
        lines.append(horizontal)

    return "\n".join(lines)


def _plain(value):
    """Numpy scalars and arrays to JSON types; non-finite floats become strings."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    if isinstance(value, complex):
        return str(value)
    return value


def write_json(path, payload: dict) -> bool:
    """Write a report as indented JSON.

    Args:
        path: Destination file.
        payload (dict): Report contents.

    Returns:
        bool: True when the file was written.
    """
    try:
        with open(path, "w", newline="\n") as file:
            file.write(json.dumps(_plain(payload), indent=2))
            file.write("\n")
        return True

    except Exception as e:
        print(f"Error writing to file: {e}")
        return False


def write_csv(path, header, rows) -> bool:
    """Write rows under a header line, LF line endings.

    Args:
        path: Destination file.
        header (tuple): Column names.
        rows (list): Row tuples.

    Returns:
        bool: True when the file was written.
    """
    try:
        with open(path, "w", newline="") as file:
            writer = csv.writer(file, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_plain(value) for value in row])
        return True

    except Exception as e:
        print(f"Error writing to file: {e}")
        return False


def write_report(path, title: str, sections) -> bool:
    """Write titled ASCII tables to a text report.

    Args:
        path: Destination file.
        title (str): Report heading.
        sections (list): (heading, headers, rows) triples.

    Returns:
        bool: True when the file was written.
    """
    try:
        with open(path, "w") as file:
            file.write(f"{title}\n")
            for heading, headers, rows in sections:
                file.write(f"\n\n{heading}:\n")
                file.write(prettify(rows, headers))
            file.write("\n")
        return True

    except Exception as e:
        print(f"Error writing to file: {e}")
        return False


def _format_value(value) -> str:
    if isinstance(value, complex):
        sign = "+" if value.imag >= 0 else "-"
        return f"{value.real!r}{sign}{abs(value.imag)!r}j"
    return repr(float(value))


def _check_text_axes(psi: GriddedFunction) -> None:
    for i, (axis, weights) in enumerate(zip(psi.axes, psi.weights)):
        span = axis[-1] - axis[0]
        uniform = np.linspace(axis[0], axis[-1], axis.size)
        if not np.allclose(axis, uniform, rtol=0.0, atol=1e-12 * span):
            raise ValidationError(f"axis {i} is not uniform; write the grid as .npz")
        if not np.allclose(weights, trapezoid_weights(axis), rtol=1e-12, atol=0.0):
            raise ValidationError(f"axis {i} has non-trapezoidal weights; write the grid as .npz")


def write_grid(path, psi: GriddedFunction) -> bool:
    """Write a sampled function in the text grid format, or as `.npz`.

    The text header holds only node counts and endpoints, so text files
    need uniform axes with trapezoidal weights. Archives store every axis
    and its weights.

    Returns:
        bool: True when the file was written.
    """
    try:
        if str(path).endswith(".npz"):
            arrays = {f"axis{i}": axis for i, axis in enumerate(psi.axes)}
            arrays.update({f"weights{i}": weights for i, weights in enumerate(psi.weights)})
            np.savez(path, values=psi.values, **arrays)
            return True

        _check_text_axes(psi)
        with open(path, "w", newline="\n") as file:
            file.write(f"# ndims {psi.ndim}\n")
            for i, axis in enumerate(psi.axes):
                file.write(f"# axis {i} {axis.size} {float(axis[0])!r} {float(axis[-1])!r}\n")
            rows = psi.values.reshape(-1, psi.shape[-1])
            for row in rows:
                file.write(" ".join(_format_value(v.item()) for v in row))
                file.write("\n")
        return True

    except Exception as e:
        print(f"Error writing to file: {e}")
        return False


def _read_npz(path) -> GriddedFunction:
    with np.load(path, allow_pickle=False) as data:
        axes = []
        while f"axis{len(axes)}" in data:
            axes.append(data[f"axis{len(axes)}"])
        if "values" not in data:
            raise ValidationError(f"{path}: missing 'values' array")
        weights = None
        if all(f"weights{i}" in data for i in range(len(axes))):
            weights = tuple(data[f"weights{i}"] for i in range(len(axes)))
        return GriddedFunction(tuple(axes), data["values"], weights)


def read_grid(path) -> GriddedFunction:
    """Read a sampled function written by write_grid.

    Args:
        path: Text grid file or `.npz` archive.

    Returns:
        GriddedFunction: Samples with trapezoidal weights.

    Raises:
        ValidationError: If the file is missing or the header and values disagree.
    """
    if not Path(path).is_file():
        raise ValidationError(f"grid file {path} not found")
    if str(path).endswith(".npz"):
        return _read_npz(path)

    ndims = None
    axes = {}
    tokens = []
    with open(path) as file:
        for number, line in enumerate(file, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                try:
                    if parts[0] == "ndims":
                        ndims = int(parts[1])
                    elif parts[0] == "axis":
                        axes[int(parts[1])] = np.linspace(float(parts[3]), float(parts[4]), int(parts[2]))
                    else:
                        raise ValueError(f"unknown header field '{parts[0]}'")
                except (IndexError, ValueError) as e:
                    raise ValidationError(f"{path}:{number}: malformed header line: {e}") from None
                continue
            tokens.extend(line.replace(",", " ").split())

    if ndims not in (2, 3):
        raise ValidationError(f"{path}: header must declare ndims 2 or 3, got {ndims}")
    if sorted(axes) != list(range(ndims)):
        raise ValidationError(f"{path}: expected axis lines 0..{ndims - 1}, got {sorted(axes)}")
    shape = tuple(axes[i].size for i in range(ndims))
    if len(tokens) != int(np.prod(shape)):
        raise ValidationError(f"{path}: header promises {int(np.prod(shape))} values, found {len(tokens)}")

    try:
        if any("j" in token for token in tokens):
            values = np.array([complex(token) for token in tokens])
        else:
            values = np.array([float(token) for token in tokens])
    except ValueError as e:
        raise ValidationError(f"{path}: bad value: {e}") from None
    return GriddedFunction(tuple(axes[i] for i in range(ndims)), values.reshape(shape))
