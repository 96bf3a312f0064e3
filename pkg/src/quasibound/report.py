"""Deterministic report files: JSON documents, CSV tables and JSONL records.

Every file is written to a temporary name in the target directory and then
moved into place with :func:`os.replace`, so readers never see a partial
file.  Output never contains timestamps; the same results give the same bytes.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import gmpy2

from ._mp import to_decimal

FORMATS = ("json", "csv", "both")

CERTIFICATE_COLUMNS = ["instance_id", "lemma", "claimed", "measured", "slack", "pass"]


@dataclass
class Report:
    """What a command produces.

    ``document`` becomes ``<name>.json``, each entry of ``tables`` becomes
    ``<name>_<table>.csv`` and ``records`` becomes ``<name>.jsonl``.
    """

    name: str
    document: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    records: list | None = None


def plain(obj, digits_bits=128):
    """Recursively turn mpfr/mpq/tuples into JSON-ready values."""
    if isinstance(obj, gmpy2.mpfr(0).__class__):
        return to_decimal(obj, digits_bits)
    if isinstance(obj, type(gmpy2.mpq(0))):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, type(gmpy2.mpz(0))):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): plain(v, digits_bits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v, digits_bits) for v in obj]
    return obj


def dumps(doc):
    return json.dumps(plain(doc), sort_keys=True, indent=2) + "\n"


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        if isinstance(row, dict):
            row = [row.get(h) for h in header]
        w.writerow(["" if v is None else _cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, gmpy2.mpfr(0).__class__):
        return format(v, ".17g")
    return v


def jsonl_text(records):
    return "".join(json.dumps(plain(r), sort_keys=True) + "\n" for r in records)


def atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def emit_report(report, output_dir, fmt="both"):
    """Write ``report`` under ``output_dir``; returns the written paths in order."""
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    out = Path(output_dir)
    written = []
    if fmt in ("json", "both"):
        written.append(atomic_write(out / f"{report.name}.json", dumps(report.document)))
        if report.records is not None:
            written.append(atomic_write(out / f"{report.name}.jsonl", jsonl_text(report.records)))
    if fmt in ("csv", "both"):
        for table in sorted(report.tables):
            header, rows = report.tables[table]
            written.append(atomic_write(out / f"{report.name}_{table}.csv", csv_text(header, rows)))
    return written


def certificate_table(certs, ids=None):
    ids = range(len(certs)) if ids is None else ids
    return CERTIFICATE_COLUMNS, [c.summary_row(i) for i, c in zip(ids, certs)]
