"""Panel builders shared by the test modules."""

import numpy as np

from contrarian.panel import ReturnPanel, panel_from_cells, parse_month


def make_panel(rows, start="1997-01", stocks=None):
    """Panel from a list of per-month rows; ``None`` marks a missing cell."""
    n_stocks = len(rows[0])
    stocks = stocks or [f"S{i:02d}" for i in range(n_stocks)]
    values = np.array([[0.0 if v is None else v for v in row] for row in rows])
    mask = np.array([[v is not None for v in row] for row in rows])
    return ReturnPanel(parse_month(start), tuple(stocks), values, mask)


def random_cells(rng, n_months, n_stocks, missing=0.1):
    """Random cells with planted ties (duplicated and flat stocks)."""
    stocks = [f"X{i}" for i in range(n_stocks)]
    cells = {}
    for j, s in enumerate(stocks):
        for m in range(n_months):
            if rng.random() < missing:
                continue
            if j == 1 and n_stocks > 2:
                src = (m, stocks[0])
                if src in cells:
                    cells[(m, s)] = cells[src]
                continue
            if j == 2 and n_stocks > 3:
                cells[(m, s)] = 0.0
                continue
            cells[(m, s)] = float(np.round(rng.normal(0.01, 0.1), 3 if j % 2 else 6))
    for s in stocks:
        if not any((m, s) in cells for m in range(n_months)):
            cells[(0, s)] = 0.02
    return cells, stocks


def panel_of(cells, n_months):
    return panel_from_cells(cells, 0, n_months - 1)
