import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from statarb.factors.base import FIT_WINDOW, ResidualRecorder, modelable_columns
from statarb.factors.ols import OLSFit, ols_fit
from statarb.market_data.standardize import WINDOW, standardize_window
from statarb.models.errors import InvalidParameterError
from statarb.models.panel import ReturnsPanel, TDate, UniverseMask
from statarb.models.results import ResidualPanel

log = logging.getLogger(__name__)

# entries within this fraction of the largest |entry| tie for the sign rule
SIGN_TIE = 1e-9


def decompose_correlation(correlation: np.ndarray, k: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Top-k eigenpairs (descending) plus the full spectrum.

    Each eigenvector is flipped so that its first entry of largest magnitude is positive.
    """
    n = correlation.shape[0]
    if not 1 <= k <= n:
        raise InvalidParameterError(f'k must lie in 1..{n}, got {k}')
    values, vectors = linalg.eigh(correlation)
    order = np.argsort(values)[::-1]
    values, vectors = values[order], vectors[:, order]
    for j in range(k):
        column = vectors[:, j]
        magnitude = np.abs(column)
        lead = int(np.argmax(magnitude >= (1.0 - SIGN_TIE) * magnitude.max()))
        if column[lead] < 0:
            vectors[:, j] = -column
    return values[:k], vectors[:, :k], values


@dataclass(frozen=True)
class PCAFactorModel:
    correlation: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    spectrum: np.ndarray = field(repr=False)
    volatility: np.ndarray = field(repr=False)
    mean: np.ndarray = field(repr=False)
    columns: np.ndarray = field(repr=False)
    factor_returns: np.ndarray = field(repr=False)

    @property
    def k(self) -> int:
        return len(self.eigenvalues)

    @property
    def weights(self) -> np.ndarray:
        """Eigenportfolio weights v_i / sigma_i, N x k."""
        return self.eigenvectors / self.volatility[:, None]

    def factor_return(self, returns: np.ndarray) -> np.ndarray:
        return np.asarray(returns, dtype=float) @ self.weights


def pca_factors(panel: ReturnsPanel, t: TDate, k: int, window: int = WINDOW,
                columns: Optional[np.ndarray] = None, drop_degenerate: bool = True) -> PCAFactorModel:
    """Eigenportfolios of the correlation of the `window` days ending at `t` (standardized, not clipped)."""
    standardized = standardize_window(panel, t, window, columns=columns, drop_degenerate=drop_degenerate)
    n = len(standardized.columns)
    if k > n:
        raise InvalidParameterError(f'k={k} exceeds the {n} stocks with full windows')
    z = standardized.z
    correlation = z.T @ z / (len(z) - 1)
    correlation = 0.5 * (correlation + correlation.T)
    eigenvalues, eigenvectors, spectrum = decompose_correlation(correlation, k)
    raw = panel.returns[standardized.start:standardized.stop, standardized.columns]
    weights = eigenvectors / standardized.std[:, None]
    return PCAFactorModel(correlation, eigenvalues, eigenvectors, spectrum, standardized.std,
                          standardized.mean, standardized.columns, raw @ weights)


def pca_residual_day(panel: ReturnsPanel, row: int, k: int, columns: np.ndarray, window: int = WINDOW,
                     fit_window: int = FIT_WINDOW) -> Tuple[np.ndarray, np.ndarray, OLSFit, PCAFactorModel]:
    """Residuals at `row` from PCA and regression on rows before it; returns (columns, residuals, fit, model)."""
    model = pca_factors(panel, row - 1, k, window, columns=columns)
    columns = model.columns
    factors = model.factor_returns[-fit_window:]
    start = row - fit_window
    fit = ols_fit(factors, panel.returns[start:row, columns], intercept=True)
    residuals = panel.returns[row, columns] - model.factor_return(panel.returns[row, columns]) @ fit.beta
    return columns, residuals, fit, model


@dataclass
class PCAModel:
    k: int
    window: int = field(default=WINDOW)
    fit_window: int = field(default=FIT_WINDOW)
    name: str = field(default='PCA')

    def __post_init__(self):
        if self.k < 1:
            raise InvalidParameterError(f'k must be >= 1, got {self.k}')
        if self.fit_window > self.window:
            raise InvalidParameterError('the regression window cannot exceed the PCA window')

    @property
    def variant(self) -> str:
        return f'k={self.k}'

    @property
    def first_row(self) -> int:
        return self.window

    def residuals(self, panel: ReturnsPanel, universe: Optional[UniverseMask] = None,
                  rows: Optional[range] = None) -> ResidualPanel:
        universe = UniverseMask.everyone(panel) if universe is None else universe
        recorder = ResidualRecorder(panel, self.name, self.variant)
        rows = range(self.first_row, panel.n_days) if rows is None else rows
        for row in rows:
            if row < self.first_row:
                continue
            columns = modelable_columns(panel, universe, row, self.window)
            if len(columns) < max(self.k, 2):
                recorder.skip(row, f'{len(columns)} stocks for k={self.k}')
                continue
            try:
                columns, residuals, fit, _ = pca_residual_day(panel, row, self.k, columns,
                                                              self.window, self.fit_window)
            except InvalidParameterError as exc:
                recorder.skip(row, str(exc))
                continue
            recorder.record(row, columns, residuals, flagged=not fit.full_rank)
        return recorder.build()


def pca_residuals(panel: ReturnsPanel, k: int, universe: Optional[UniverseMask] = None,
                  window: int = WINDOW, fit_window: int = FIT_WINDOW,
                  rows: Optional[range] = None) -> ResidualPanel:
    return PCAModel(k, window, fit_window).residuals(panel, universe, rows)
