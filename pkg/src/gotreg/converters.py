"""Converters from public raw formats to the CSV layouts of :mod:`gotreg.dataio`.

Neither source is bundled; users download the files themselves.

Human Mortality Database period life tables (``fltper_1x1.txt`` and
``mltper_1x1.txt``): whitespace-separated with a free-text preamble, a
header line starting with ``Year`` and columns
``Year Age mx qx ax lx dx Lx Tx ex``; the last age is written ``110+``.
The age-at-death distribution of a year is the ``dx`` column, spread
uniformly within each year of age (the open class ``110+`` is treated as
``[110, 111)``), and is written as a quantile grid.

NOAA GHCN-Daily extracts from the Climate Data Online portal: CSV with at
least ``STATION``, ``DATE`` (``YYYY-MM-DD``), ``TMIN`` and ``TMAX``.  Days
of the requested year and months with both temperatures present become
``(tmin, tmax)`` samples of a ``pairs`` file, one id per station.
"""

from __future__ import annotations

import csv
import os

import numpy as np

from .dataio import exact, quantiles_from_density
from .errors import IngestionError

HMD_SUPPORT = (0.0, 111.0)


def read_hmd_lifetable(path):
    """Parse an HMD 1x1 life table into ``{year: dx array of length 111}``."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    start = next((i for i, line in enumerate(lines) if line.split()[:2] == ["Year", "Age"]), None)
    if start is None:
        raise IngestionError(f"{path}: no 'Year Age ...' header line")
    header = lines[start].split()
    if "dx" not in header:
        raise IngestionError(f"{path}: no dx column")
    col = header.index("dx")
    table: dict = {}
    for lineno, line in enumerate(lines[start + 1 :], start=start + 2):
        parts = line.split()
        if not parts:
            continue
        try:
            year = int(parts[0])
            age = int(parts[1].rstrip("+"))
            deaths = float(parts[col])
        except (ValueError, IndexError) as exc:
            raise IngestionError(f"{path}:{lineno}: malformed row ({exc})") from exc
        if not 0 <= age <= 110:
            raise IngestionError(f"{path}:{lineno}: age {age} out of range")
        table.setdefault(year, np.zeros(111))[age] = deaths
    return table


def lifetable_quantiles(dx, grid_size=200):
    """Quantile grid of the age-at-death distribution given by ``dx``."""
    dx = np.asarray(dx, dtype=float)
    total = dx.sum()
    if total <= 0:
        raise IngestionError("life table has no deaths")
    return quantiles_from_density(dx / total, HMD_SUPPORT, grid_size)


def convert_hmd(paths, year, output, grid_size=200):
    """Write a ``quantiles`` CSV with one row per life-table file.

    The id is the file-name prefix before the first dot (``UKR`` for
    ``UKR.fltper_1x1.txt``).
    """
    rows = []
    for path in paths:
        table = read_hmd_lifetable(path)
        if year not in table:
            raise IngestionError(f"{path}: no data for year {year}")
        key = os.path.basename(path).split(".")[0]
        rows.append((key, lifetable_quantiles(table[year], grid_size)))
    with open(output, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id"] + [f"q{k + 1}" for k in range(grid_size)])
        for key, q in rows:
            writer.writerow([key] + [exact(v) for v in q])
    return len(rows)


def convert_ghcnd(paths, year, months, output):
    """Write a ``pairs`` CSV of daily ``(tmin, tmax)`` per station."""
    months = {int(m) for m in months}
    out_rows = []
    for path in paths:
        try:
            with open(path, newline="", encoding="utf-8") as fh:
                reader = csv.DictReader(fh)
                missing = {"STATION", "DATE", "TMIN", "TMAX"} - set(reader.fieldnames or ())
                if missing:
                    raise IngestionError(f"{path}: missing columns {sorted(missing)}")
                for row in reader:
                    date = row["DATE"].strip()
                    try:
                        y, m = int(date[:4]), int(date[5:7])
                    except ValueError as exc:
                        raise IngestionError(f"{path}: bad date {date!r}") from exc
                    if y != year or m not in months:
                        continue
                    tmin, tmax = row["TMIN"].strip(), row["TMAX"].strip()
                    if not tmin or not tmax:
                        continue
                    out_rows.append((row["STATION"].strip(), float(tmin), float(tmax)))
        except OSError as exc:
            raise IngestionError(f"cannot read {path}: {exc}") from exc
    if not out_rows:
        raise IngestionError(f"no complete observations for {year}, months {sorted(months)}")
    with open(output, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "tmin", "tmax"])
        for station, tmin, tmax in out_rows:
            writer.writerow([station, exact(tmin), exact(tmax)])
    return len({r[0] for r in out_rows})
