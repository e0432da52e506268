"""CSV/JSON result files, written atomically and byte-deterministically."""

from __future__ import annotations

import csv
import io
import json
import os
import shutil
import tempfile
from pathlib import Path

from .sectors import SpectrumTable

__all__ = ["SPECTRUM_HEADER", "CHECKS_HEADER", "fmt", "spectrum_csv", "checks_csv", "emit_results"]

SPECTRUM_HEADER = ["n", "k", "j", "lambda", "lambda_sq", "encl_lo", "encl_hi"]
CHECKS_HEADER = ["check", "n", "k", "j", "value", "bound", "margin", "pass"]
ARTIFACTS = {"spectrum.csv", "checks.csv", "summary.json", "series"}


def fmt(x) -> str:
    """12 significant digits; negative zero printed as zero."""
    v = float(x)
    if v == 0.0:
        v = 0.0
    return format(v, ".12g")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def spectrum_csv(table: SpectrumTable) -> str:
    return _csv(SPECTRUM_HEADER, (
        [r.n, fmt(r.k), r.j, fmt(r.lam), fmt(r.lam_sq), fmt(r.lo), fmt(r.hi)]
        for r in table.rows
    ))


def checks_csv(reports) -> str:
    rows = sorted(
        (r for rep in reports for r in rep.rows),
        key=lambda r: (r.n, r.k, r.j, r.check),
    )
    return _csv(CHECKS_HEADER, (
        [r.check, r.n, fmt(r.k), r.j, fmt(r.value), fmt(r.bound), fmt(r.margin),
         "true" if r.passed else "false"]
        for r in rows
    ))


def _series(table: SpectrumTable) -> dict[str, str]:
    out = {}
    for k in table.sectors():
        js = sorted({r.j for r in table.select(k=k)})
        for j in js:
            rows = [r for r in table.select(k=k) if r.j == j]
            name = f"k{fmt(k)}_j{j}.csv"
            out[name] = _csv(["n", "abs_lambda"], ([r.n, fmt(abs(r.lam))] for r in rows))
    return out


def emit_results(table: SpectrumTable, reports, out_dir, summary: dict | None = None) -> list[Path]:
    """Write ``spectrum.csv``, ``checks.csv``, ``summary.json`` and ``series/``.

    Files go to a temporary sibling directory that replaces ``out_dir``
    only once everything is written.  An existing ``out_dir`` is replaced
    only if it holds nothing but artifacts of a previous run.
    """
    out = Path(out_dir)
    if out.exists():
        if not out.is_dir():
            raise FileExistsError(f"{out} exists and is not a directory")
        stray = {p.name for p in out.iterdir()} - ARTIFACTS
        if stray:
            raise FileExistsError(f"{out} contains files not written by a run: {sorted(stray)}")
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}.", dir=out.parent))
    try:
        files = {
            "spectrum.csv": spectrum_csv(table),
            "checks.csv": checks_csv(reports),
            "summary.json": json.dumps(summary or {}, indent=2, sort_keys=True) + "\n",
        }
        for name, text in files.items():
            (tmp / name).write_text(text, encoding="utf-8")
        (tmp / "series").mkdir()
        for name, text in _series(table).items():
            (tmp / "series" / name).write_text(text, encoding="utf-8")
        if out.exists():
            old = Path(tempfile.mkdtemp(prefix=f".{out.name}.old.", dir=out.parent))
            os.replace(out, old / out.name)
            os.replace(tmp, out)
            shutil.rmtree(old)
        else:
            os.replace(tmp, out)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return sorted(p for p in out.rglob("*") if p.is_file())
