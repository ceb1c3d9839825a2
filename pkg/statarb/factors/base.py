import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from statarb.models.panel import ReturnsPanel, UniverseMask
from statarb.models.results import ResidualPanel

log = logging.getLogger(__name__)

FIT_WINDOW = 60


def modelable_columns(panel: ReturnsPanel, universe: UniverseMask, row: int, window: int) -> np.ndarray:
    """Stocks with `window` full days before `row`, a return at `row` and universe membership at row - 1."""
    if row - window < 0 or row < 1:
        return np.zeros(0, dtype=int)
    full = panel.full_columns(row - window, row) & panel.present(row)
    return np.flatnonzero(full & universe.eligible_at(row - 1))


@dataclass
class ResidualRecorder:
    panel: ReturnsPanel = field(repr=False)
    model: str
    variant: str
    values: np.ndarray = field(init=False, repr=False)
    flagged: np.ndarray = field(init=False, repr=False)
    diagnostics: List[Dict[str, Any]] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.values = np.full((self.panel.n_days, self.panel.n_stocks), np.nan)
        self.flagged = np.zeros((self.panel.n_days, self.panel.n_stocks), dtype=bool)

    def record(self, row: int, columns: np.ndarray, residuals: Optional[np.ndarray], flagged: bool = False) -> None:
        if residuals is None:
            return
        self.values[row, columns] = residuals
        if flagged:
            self.flagged[row, columns] = True

    def skip(self, row: int, reason: str) -> None:
        log.debug('%s %s: no residuals on %s (%s)', self.model, self.variant,
                  self.panel.dates[row].date(), reason)
        self.diagnostics.append({'date': self.panel.dates[row].strftime('%Y-%m-%d'), 'skipped': reason})

    def build(self) -> ResidualPanel:
        return ResidualPanel(self.panel.dates, self.panel.tickers, self.values,
                             self.model, self.variant, self.flagged)
