"""Result-table serialization: RFC-4180 CSV and canonical JSON.

Both formats carry the same values row for row, in the same column order,
with the suite's config hash and provenance on every row (CSV has no place
for out-of-band metadata, and repeating it keeps the two formats
value-identical). Floats are rendered with shortest round-trip repr, so a
table serializes to the same bytes on every run.
"""

from __future__ import annotations

import csv
import io

from ..canonical import canonical_bytes
from .suites import ResultTable

COLUMNS = ("suite", "cell", "successes", "trials", "rate", "reference",
           "config_hash", "provenance")

FORMATS = ("csv", "json")


class ReportError(Exception):
    pass


def _cell_values(table: ResultTable, row) -> list:
    return [
        table.suite,
        row.cell,
        row.successes,
        row.trials,
        row.rate,
        row.reference_rate,
        table.config_hash,
        table.provenance,
    ]


def emit_report(table: ResultTable, format: str = "csv") -> bytes:
    if format == "json":
        return canonical_bytes(table.to_doc())
    if format != "csv":
        raise ReportError(f"unknown report format {format!r}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(COLUMNS)
    for row in table.rows:
        values = _cell_values(table, row)
        writer.writerow(["" if v is None else repr(v) if isinstance(v, float) else v
                         for v in values])
    return buf.getvalue().encode("utf-8")
