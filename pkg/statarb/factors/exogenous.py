import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from statarb.factors.base import FIT_WINDOW, ResidualRecorder, modelable_columns
from statarb.factors.ols import ols_fit
from statarb.models.panel import FactorReturns, ReturnsPanel, UniverseMask
from statarb.models.results import ResidualPanel

log = logging.getLogger(__name__)


def exogenous_residual_day(panel: ReturnsPanel, factors: np.ndarray, row: int, columns: np.ndarray,
                           window: int = FIT_WINDOW):
    """Fits rows [row - window, row) and returns (residual at row, fit). The intercept is fit, not projected."""
    start = row - window
    fit = ols_fit(factors[start:row], panel.returns[start:row, columns], intercept=True)
    residuals = panel.returns[row, columns] - factors[row] @ fit.beta
    return residuals, fit


@dataclass
class ExogenousModel:
    factor_returns: FactorReturns = field(repr=False)
    window: int = field(default=FIT_WINDOW)
    name: str = field(default='FF')
    variant: str = field(default='')

    def __post_init__(self):
        if not self.variant:
            self.variant = '+'.join(self.factor_returns.names)

    @property
    def first_row(self) -> int:
        return self.window

    def residuals(self, panel: ReturnsPanel, universe: Optional[UniverseMask] = None,
                  rows: Optional[range] = None) -> ResidualPanel:
        universe = UniverseMask.everyone(panel) if universe is None else universe
        factors = self.factor_returns.align(panel.dates)
        recorder = ResidualRecorder(panel, self.name, self.variant)
        rows = range(self.first_row, panel.n_days) if rows is None else rows
        for row in rows:
            if row < self.first_row:
                continue
            columns = modelable_columns(panel, universe, row, self.window)
            if len(columns) == 0:
                recorder.skip(row, 'no modelable stocks')
                continue
            residuals, fit = exogenous_residual_day(panel, factors, row, columns, self.window)
            if not fit.full_rank:
                log.debug('Rank-deficient factor regression on %s', panel.dates[row].date())
            recorder.record(row, columns, residuals, flagged=not fit.full_rank)
        return recorder.build()


def exogenous_residuals(panel: ReturnsPanel, factor_returns: FactorReturns,
                        universe: Optional[UniverseMask] = None, window: int = FIT_WINDOW,
                        rows: Optional[range] = None) -> ResidualPanel:
    return ExogenousModel(factor_returns, window).residuals(panel, universe, rows)
