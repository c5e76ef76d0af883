# kinkstats/utils/tables.py
"""
Plot-ready CSV/JSON artifacts. Every file opens with the artifact version and the
fully resolved run configuration.
"""
import csv
import io
import logging
import math
import numbers
from pathlib import Path

from .. import artifact_version, dumps
from ..errors import MalformedTableError, ParameterError
from ..models import SweepRow, SweepTable

log = logging.getLogger(__name__)

SWEEP_KEY_COLUMNS = ("N", "tau_Q", "method")


def format_value(value):
    """17 significant digits for floats, so every double survives a round trip."""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, numbers.Integral):
        return str(int(value))
    if isinstance(value, numbers.Real):
        return f"{float(value):.17g}"
    if value is None:
        return ""
    if isinstance(value, (list, tuple)):
        return ",".join(format_value(v) for v in value)
    return str(getattr(value, "value", value))


def header_lines(config):
    lines = [f"# kinkstats {artifact_version()}"]
    lines += [f"# {key}={format_value(config[key])}" for key in sorted(config)]
    return lines


def write_csv(path, columns, rows, config):
    """`rows` are sequences aligned with `columns`. LF line endings, no locale."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    text = "\n".join(header_lines(config)) + "\n" + buffer.getvalue()
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    log.debug(f"Wrote {path}")
    return path


def write_json(path, payload, config):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {"version": artifact_version(), "config": config, **payload}
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(dumps(document) + "\n")
    log.debug(f"Wrote {path}")
    return path


def _data_lines(path):
    """(line number, text) of every non-comment, non-blank line, plus the header config."""
    config = {}
    data = []
    with open(path, encoding="utf-8", newline="") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\r\n")
            if line.startswith("#"):
                entry = line[1:].strip()
                if "=" in entry:
                    key, value = entry.split("=", 1)
                    config[key.strip()] = value
                continue
            if line.strip():
                data.append((lineno, line))
    return data, config


def read_header(path):
    _, config = _data_lines(path)
    return config


# ---------------------------------------------------------
# SWEEP TABLES
# ---------------------------------------------------------
def sweep_columns(qmax):
    return [*SWEEP_KEY_COLUMNS, *(f"kappa{q}" for q in range(1, qmax + 1)), "wall_time"]


def write_sweep_csv(path, table, config):
    qmax = table.qmax
    rows = [
        [row.N, row.tau_Q, row.method.value, *row.kappa[:qmax], row.wall_time]
        for row in table
    ]
    return write_csv(path, sweep_columns(qmax), rows, config)


def _parse_columns(lineno, header):
    if tuple(header[:3]) != SWEEP_KEY_COLUMNS:
        raise MalformedTableError(f"expected columns {','.join(SWEEP_KEY_COLUMNS)}, got {','.join(header[:3])}", lineno)
    kappas = header[3:]
    has_wall_time = bool(kappas) and kappas[-1] == "wall_time"
    if has_wall_time:
        kappas = kappas[:-1]
    expected = [f"kappa{q}" for q in range(1, len(kappas) + 1)]
    if not kappas or kappas != expected:
        raise MalformedTableError(f"cumulant columns must be kappa1..kappaQ, got {','.join(kappas)}", lineno)
    return len(kappas), has_wall_time


def _parse_row(lineno, fields, qmax, has_wall_time):
    width = 3 + qmax + int(has_wall_time)
    if len(fields) != width:
        raise MalformedTableError(f"expected {width} fields, got {len(fields)}", lineno)
    try:
        N = int(fields[0])
        tau_Q = float(fields[1])
        kappa = [float(v) for v in fields[3:3 + qmax]]
        wall_time = float(fields[-1]) if has_wall_time else 0.0
    except ValueError as e:
        raise MalformedTableError(f"unparseable number: {e}", lineno)
    if not (math.isfinite(tau_Q) and tau_Q > 0):
        raise MalformedTableError(f"tau_Q must be positive, got {fields[1]!r}", lineno)
    try:
        return SweepRow(N=N, tau_Q=tau_Q, method=fields[2], kappa=kappa, wall_time=wall_time)
    except ValueError as e:
        raise MalformedTableError(str(e), lineno)


def read_sweep_csv(path):
    """Parses a sweep CSV back into a SweepTable; returns (table, header config)."""
    data, config = _data_lines(path)
    if not data:
        raise MalformedTableError(f"{path} has no column header")

    lineno, header_text = data[0]
    header = next(csv.reader([header_text]))
    qmax, has_wall_time = _parse_columns(lineno, header)

    table = SweepTable()
    for lineno, text in data[1:]:
        row = _parse_row(lineno, next(csv.reader([text])), qmax, has_wall_time)
        try:
            table.add(row)
        except ParameterError as e:
            raise MalformedTableError(str(e), lineno)
    return table, config


# ---------------------------------------------------------
# OTHER ARTIFACTS
# ---------------------------------------------------------
def write_distribution_csv(path, comparison, config):
    rows = zip(
        comparison.exact.support.tolist(),
        comparison.exact.probabilities.tolist(),
        comparison.normal.tolist(),
    )
    return write_csv(path, ["n", "P_exact", "P_normal"], rows, config)


def write_modes_csv(path, momenta, p_lz, config, p_ode=None):
    columns = ["ell", "k", "p_lz"]
    values = [range(1, len(momenta) + 1), momenta, p_lz]
    if p_ode is not None:
        columns.append("p_ode")
        values.append(p_ode)
    rows = zip(*(list(v) for v in values))
    return write_csv(path, columns, rows, config)
