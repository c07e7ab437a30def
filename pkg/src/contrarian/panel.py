"""Monthly return panels: CSV ingestion, period slicing and eligibility.

A panel is a dense ``months x stocks`` grid of simple monthly returns with a
boolean availability mask. Months are integer ordinals counted from
``1997-01`` (ordinal 0); negative ordinals are valid earlier months.
"""

from __future__ import annotations

import csv
import io
import math
import os
import re
from dataclasses import dataclass, field
from typing import BinaryIO, Sequence

import numpy as np

EPOCH_YEAR = 1997
HEADER = ("month", "stock_id", "return")

_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")


class PanelError(ValueError):
    """Raised for malformed input or an invalid panel operation."""


def parse_month(text: str) -> int:
    """Convert ``"YYYY-MM"`` to a month ordinal (``1997-01`` -> 0)."""
    m = _MONTH_RE.match(text.strip())
    if m is None:
        raise PanelError(f"bad month {text!r}, expected YYYY-MM")
    year, month = int(m.group(1)), int(m.group(2))
    if not 1 <= month <= 12:
        raise PanelError(f"bad month {text!r}, month out of range")
    return (year - EPOCH_YEAR) * 12 + (month - 1)


def format_month(ordinal: int) -> str:
    year, month0 = divmod(int(ordinal), 12)
    return f"{year + EPOCH_YEAR:04d}-{month0 + 1:02d}"


def _check_stock_id(sid: str) -> str:
    if not sid or any(c.isspace() or c == "," for c in sid):
        raise PanelError(f"bad stock_id {sid!r}")
    return sid


@dataclass(frozen=True)
class PanelFilterConfig:
    """Ingestion filter.

    ``start``/``end`` of ``None`` mean "first/last month present in the data".
    """

    drop_first_month: bool = True
    start: int | None = None
    end: int | None = None

    def __post_init__(self):
        if self.start is not None and self.end is not None and self.start > self.end:
            raise PanelError("filter start is after end")


@dataclass(frozen=True, eq=False)
class ReturnPanel:
    """Immutable month-by-stock return grid.

    Attributes
    ----------
    start : int
        Ordinal of the first month (row 0).
    stocks : tuple of str
        Stock ids in ascending byte-wise order (column order).
    values : np.ndarray
        ``(n_months, n_stocks)`` float array; masked cells hold 0.0.
    mask : np.ndarray
        ``(n_months, n_stocks)`` bool array, True where a return is present.
    """

    start: int
    stocks: tuple[str, ...]
    values: np.ndarray = field(repr=False)
    mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        mask = np.array(self.mask, dtype=bool)
        if values.ndim != 2 or values.shape != mask.shape:
            raise PanelError("values and mask must be 2-D arrays of equal shape")
        if values.shape[1] != len(self.stocks):
            raise PanelError("column count does not match stock list")
        if values.shape[0] == 0 or values.shape[1] == 0:
            raise PanelError("empty input")
        if list(self.stocks) != sorted(self.stocks) or len(set(self.stocks)) != len(self.stocks):
            raise PanelError("stock ids must be unique and sorted")
        values = np.where(mask, values, 0.0)
        present = values[mask]
        if not np.all(np.isfinite(present)) or np.any(present <= -1.0):
            raise PanelError("returns must be finite and > -1")
        if not mask.any(axis=0).all():
            raise PanelError("every stock needs at least one present return")
        values.flags.writeable = False
        mask.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "stocks", tuple(self.stocks))

    @property
    def n_months(self) -> int:
        return self.values.shape[0]

    @property
    def n_stocks(self) -> int:
        return self.values.shape[1]

    @property
    def end(self) -> int:
        return self.start + self.n_months - 1

    @property
    def months(self) -> range:
        return range(self.start, self.end + 1)

    def row(self, month: int) -> int:
        """Row index of ``month``; raises if outside the panel."""
        if not self.start <= month <= self.end:
            raise PanelError(f"month {format_month(month)} outside panel range")
        return month - self.start

    def get(self, month: int, stock: str) -> float | None:
        j = self.stocks.index(stock)
        i = self.row(month)
        return float(self.values[i, j]) if self.mask[i, j] else None

    def __eq__(self, other):
        if not isinstance(other, ReturnPanel):
            return NotImplemented
        return (
            self.start == other.start
            and self.stocks == other.stocks
            and np.array_equal(self.mask, other.mask)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


def panel_from_cells(cells: dict[tuple[int, str], float], start: int | None = None,
                     end: int | None = None) -> ReturnPanel:
    """Build a panel from ``{(month, stock_id): return}``.

    Stocks with no cell inside ``[start, end]`` are dropped.
    """
    if not cells:
        raise PanelError("empty input")
    months = [m for m, _ in cells]
    start = min(months) if start is None else start
    end = max(months) if end is None else end
    kept = {k: v for k, v in cells.items() if start <= k[0] <= end}
    if not kept:
        raise PanelError("empty input")
    stocks = sorted({s for _, s in kept})
    col = {s: j for j, s in enumerate(stocks)}
    values = np.zeros((end - start + 1, len(stocks)))
    mask = np.zeros_like(values, dtype=bool)
    for (m, s), r in kept.items():
        values[m - start, col[s]] = r
        mask[m - start, col[s]] = True
    return ReturnPanel(start, tuple(stocks), values, mask)


def _read_text(source) -> str:
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source.read()
        if isinstance(data, str):
            return data
    try:
        return data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise PanelError(f"input is not UTF-8: {exc}") from None


def load_panel(source: bytes | BinaryIO | str | os.PathLike,
               config: PanelFilterConfig | None = None) -> ReturnPanel:
    """Parse a ``month,stock_id,return`` CSV into a :class:`ReturnPanel`.

    ``source`` may be raw bytes, a binary stream or a file path. The IPO-month
    exclusion is applied against each stock's full history, before the
    ``[start, end]`` restriction.
    """
    config = config or PanelFilterConfig()
    text = _read_text(source)
    rows = csv.reader(io.StringIO(text, newline=""))
    header = next(rows, None)
    if header is None or (len(header) == 1 and not header[0].strip()):
        raise PanelError("empty input")
    if tuple(h.strip() for h in header) != HEADER:
        raise PanelError(f"bad header {header!r}, expected {','.join(HEADER)}")

    cells: dict[tuple[int, str], float] = {}
    for lineno, row in enumerate(rows, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 3:
            raise PanelError(f"line {lineno}: expected 3 fields, got {len(row)}")
        month = parse_month(row[0])
        sid = _check_stock_id(row[1].strip())
        try:
            r = float(row[2])
        except ValueError:
            raise PanelError(f"line {lineno}: non-numeric return {row[2]!r}") from None
        if not math.isfinite(r) or r <= -1.0:
            raise PanelError(f"line {lineno}: return {row[2]!r} must be finite and > -1")
        if (month, sid) in cells:
            raise PanelError(f"line {lineno}: duplicate cell ({row[0]}, {sid})")
        cells[(month, sid)] = r

    if not cells:
        raise PanelError("empty input")
    # default range covers the raw data, so a masked IPO month stays in the grid
    months = [m for m, _ in cells]
    start = min(months) if config.start is None else config.start
    end = max(months) if config.end is None else config.end
    if config.drop_first_month:
        first: dict[str, int] = {}
        for m, s in cells:
            if s not in first or m < first[s]:
                first[s] = m
        for s, m in first.items():
            del cells[(m, s)]

    if not cells:
        raise PanelError("empty input")
    return panel_from_cells(cells, start, end)


def write_panel(panel: ReturnPanel, stream=None) -> str:
    """Canonical emitter: present cells sorted by (month, stock_id), LF, 17 sig. digits.

    Writes to ``stream`` (text) when given; always returns the CSV text.
    """
    lines = [",".join(HEADER)]
    for i in range(panel.n_months):
        label = format_month(panel.start + i)
        for j in np.flatnonzero(panel.mask[i]):
            lines.append(f"{label},{panel.stocks[j]},{panel.values[i, j]:.17g}")
    text = "\n".join(lines) + "\n"
    if stream is not None:
        stream.write(text)
    return text


def slice_period(panel: ReturnPanel, start: int, end: int) -> ReturnPanel:
    """Sub-panel over ``[start, end]`` clipped to the panel; empty stocks dropped."""
    if start > end:
        raise PanelError("slice start is after end")
    lo, hi = max(start, panel.start), min(end, panel.end)
    if lo > hi:
        raise PanelError("slice does not intersect the panel")
    rows = slice(lo - panel.start, hi - panel.start + 1)
    mask = panel.mask[rows]
    keep = mask.any(axis=0)
    if not keep.any():
        raise PanelError("empty input")
    stocks = tuple(s for s, k in zip(panel.stocks, keep) if k)
    return ReturnPanel(lo, stocks, panel.values[rows][:, keep], mask[:, keep])


def estimation_rows(panel: ReturnPanel, t: int, J: int, skip: int) -> slice:
    """Row slice of the estimation window ``[t-J-skip+1, t-skip]``."""
    if J < 1 or skip < 0:
        raise PanelError("need J >= 1 and skip >= 0")
    first, last = t - J - skip + 1, t - skip
    if first < panel.start or last > panel.end:
        raise PanelError(
            f"estimation window {format_month(first)}..{format_month(last)} outside panel")
    return slice(first - panel.start, last - panel.start + 1)


def eligible_stocks(panel: ReturnPanel, t: int, J: int, skip: int = 0) -> list[str]:
    """Stocks with a present return in every month of the estimation window."""
    rows = estimation_rows(panel, t, J, skip)
    ok = panel.mask[rows].all(axis=0)
    return [s for s, k in zip(panel.stocks, ok) if k]


def stock_columns(panel: ReturnPanel, stocks: Sequence[str]) -> np.ndarray:
    col = {s: j for j, s in enumerate(panel.stocks)}
    try:
        return np.array([col[s] for s in stocks], dtype=np.intp)
    except KeyError as exc:
        raise PanelError(f"unknown stock {exc.args[0]!r}") from None
