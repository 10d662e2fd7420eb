"""CSV ingestion and emission.

Price files have a header row ``date,<asset>,...`` with an optional column
named exactly ``RISK_FREE`` holding the per-period risk-free rate.  The rate
on row ``k`` applies to the period from row ``k`` to row ``k + 1``, so the
value on the last row is ignored.  Returns files have the same layout with
one row per period and no risk-free column.

Floats are written with ``repr`` so that reading a file back reproduces the
written values exactly.
"""
from __future__ import annotations

import csv
import datetime as _dt
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .estimation import ReturnMatrix
from .exceptions import IngestionError

RISK_FREE_COLUMN = "RISK_FREE"


def _check_increasing(dates) -> None:
    try:
        keys = [_dt.date.fromisoformat(str(d)) for d in dates]
    except ValueError:
        keys = [str(d) for d in dates]
    for k in range(1, len(keys)):
        if not keys[k] > keys[k - 1]:
            raise IngestionError(f"dates must be strictly increasing: row {k + 1} ({dates[k]!r}) "
                                 f"does not follow {dates[k - 1]!r}")


@dataclass(frozen=True)
class PriceTable:
    """T+1 price observations of N assets and T per-period risk-free rates."""

    dates: tuple
    prices: np.ndarray
    risk_free: np.ndarray | None = None
    asset_ids: tuple = ()

    def __post_init__(self):
        prices = np.array(self.prices, dtype=float)
        if prices.ndim != 2 or prices.shape[0] < 2 or prices.shape[1] < 1:
            raise IngestionError(f"need at least two price rows and one asset, got shape {prices.shape}")
        t1, n = prices.shape
        dates = tuple(self.dates)
        if len(dates) != t1:
            raise IngestionError(f"got {len(dates)} dates for {t1} price rows")
        _check_increasing(dates)
        ids = tuple(self.asset_ids) if len(self.asset_ids) else tuple(f"A{i}" for i in range(n))
        if len(ids) != n:
            raise IngestionError(f"got {len(ids)} asset ids for {n} price columns")
        bad = np.argwhere(~(prices > 0))
        if bad.size:
            row, col = bad[0]
            raise IngestionError(f"non-positive or missing price {float(prices[row, col])!r} at data row "
                                 f"{row + 1} (date {dates[row]}), column {ids[col]!r}")
        rf = np.zeros(t1 - 1) if self.risk_free is None else np.array(self.risk_free, dtype=float).ravel()
        if rf.shape != (t1 - 1,):
            raise IngestionError(f"need {t1 - 1} risk-free rates, got {rf.size}")
        if not np.all(np.isfinite(rf)):
            raise IngestionError("risk-free rates must be finite")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "risk_free", rf)
        object.__setattr__(self, "asset_ids", ids)


def compute_excess_returns(table: PriceTable) -> ReturnMatrix:
    """Simple returns minus the risk-free rate, labelled by the period's end date."""
    s = table.prices
    r = (s[1:] - s[:-1]) / s[:-1] - table.risk_free[:, None]
    return ReturnMatrix(r, table.asset_ids, table.dates[1:])


def _read_rows(path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [row for row in csv.reader(fh) if row]
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise IngestionError(f"{path}: expected a header and at least one data row")
    return rows[0], rows[1:]


def _parse_float(text: str, path, row: int, column: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise IngestionError(f"{path}: row {row}, column {column!r}: cannot parse {text!r} as a number") from None


def _read_table(path) -> tuple[list[str], tuple, np.ndarray]:
    header, rows = _read_rows(path)
    if len(header) < 2:
        raise IngestionError(f"{path}: expected a date column followed by asset columns")
    names = [h.strip() for h in header[1:]]
    if len(set(names)) != len(names):
        raise IngestionError(f"{path}: duplicate column names")
    values = np.empty((len(rows), len(names)))
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise IngestionError(f"{path}: row {i + 1} has {len(row)} fields, expected {len(header)}")
        for j, cell in enumerate(row[1:]):
            values[i, j] = _parse_float(cell, path, i + 1, names[j])
    return names, tuple(row[0].strip() for row in rows), values


def read_prices(path) -> PriceTable:
    """Read a price CSV; a ``RISK_FREE`` column becomes the risk-free series."""
    names, dates, values = _read_table(path)
    rf = None
    if RISK_FREE_COLUMN in names:
        j = names.index(RISK_FREE_COLUMN)
        rf = values[:-1, j]
        values = np.delete(values, j, axis=1)
        names.pop(j)
    if not names:
        raise IngestionError(f"{path}: no asset columns")
    return PriceTable(dates, values, rf, tuple(names))


def read_returns(path) -> ReturnMatrix:
    names, dates, values = _read_table(path)
    _check_increasing(dates)
    if not np.all(np.isfinite(values)):
        row, col = np.argwhere(~np.isfinite(values))[0]
        raise IngestionError(f"{path}: non-finite return at row {row + 1}, column {names[col]!r}")
    return ReturnMatrix(values, tuple(names), dates)


def write_returns(path, returns: ReturnMatrix) -> None:
    with Path(path).open("w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["date", *returns.asset_ids])
        for label, row in zip(returns.period_index, returns.data):
            out.writerow([label, *(repr(float(x)) for x in row)])


def write_prices(path, table: PriceTable, include_risk_free: bool = True) -> None:
    with Path(path).open("w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["date", *table.asset_ids, *([RISK_FREE_COLUMN] if include_risk_free else [])])
        rf = np.append(table.risk_free, 0.0)
        for label, row, r in zip(table.dates, table.prices, rf):
            extra = [repr(float(r))] if include_risk_free else []
            out.writerow([label, *(repr(float(x)) for x in row), *extra])


def write_weights(path, asset_ids, weights) -> None:
    """Write ``asset_id,weight`` rows sorted by decreasing ``|weight|``.

    Ties keep the input order.
    """
    w = np.asarray(weights, dtype=float).ravel()
    order = np.argsort(-np.abs(w), kind="stable")
    with Path(path).open("w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["asset_id", "weight"])
        for i in order:
            out.writerow([asset_ids[i], repr(float(w[i]))])


def read_weights(path) -> tuple[tuple, np.ndarray]:
    """Return ``(asset_ids, weights)`` in file order."""
    header, rows = _read_rows(path)
    if [h.strip() for h in header] != ["asset_id", "weight"]:
        raise IngestionError(f"{path}: expected header asset_id,weight")
    ids, w = [], []
    for i, row in enumerate(rows):
        if len(row) != 2:
            raise IngestionError(f"{path}: row {i + 1} has {len(row)} fields, expected 2")
        ids.append(row[0])
        w.append(_parse_float(row[1], path, i + 1, "weight"))
    return tuple(ids), np.array(w)


def write_columns(path, header, columns) -> None:
    """Write equal-length columns as CSV; floats via ``repr``."""
    def fmt(x):
        if isinstance(x, (float, np.floating)):
            return repr(float(x))
        return x

    with Path(path).open("w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for row in zip(*columns):
            out.writerow([fmt(x) for x in row])
