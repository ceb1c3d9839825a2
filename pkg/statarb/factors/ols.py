from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy import linalg

from statarb.models.errors import DimensionMismatchError, InsufficientDataError
from statarb.utils.checks import require_finite

TFloats = Union[float, np.ndarray]


@dataclass(frozen=True)
class OLSFit:
    """Least-squares fit of one target (y: T) or several (y: T x M) on the same regressors."""
    beta: np.ndarray = field(repr=False)
    intercept: TFloats = field(repr=False)
    residuals: np.ndarray = field(repr=False)
    r2: TFloats
    rank: int
    columns: int = field(default=0)

    @property
    def full_rank(self) -> bool:
        return self.rank == self.columns

    def project(self, x: np.ndarray) -> np.ndarray:
        """x @ beta without the intercept."""
        return np.asarray(x, dtype=float) @ self.beta


def ols_fit(x: np.ndarray, y: np.ndarray, intercept: bool = True) -> OLSFit:
    """Minimum-norm least squares; R² is measured against the mean with an intercept, raw otherwise."""
    x = require_finite(x, 'regressors')
    y = require_finite(y, 'targets')
    x = x[:, None] if x.ndim == 1 else x
    n_rows, k = x.shape
    if y.shape[0] != n_rows:
        raise DimensionMismatchError(f'{n_rows} regressor rows for {y.shape[0]} targets')
    if n_rows <= k + 1:
        raise InsufficientDataError(f'{n_rows} observations cannot fit {k} regressors')
    design = np.hstack([np.ones((n_rows, 1)), x]) if intercept else x
    solution, _, rank, _ = linalg.lstsq(design, y, lapack_driver='gelsd')
    residuals = y - design @ solution
    alpha = solution[0] if intercept else np.zeros(solution.shape[1:]) if y.ndim > 1 else 0.0
    beta = solution[1:] if intercept else solution
    centred = y - y.mean(axis=0) if intercept else y
    total = (centred * centred).sum(axis=0)
    ssr = (residuals * residuals).sum(axis=0)
    with np.errstate(divide='ignore', invalid='ignore'):
        r2 = np.where(total > 0, 1.0 - ssr / np.where(total > 0, total, 1.0), 0.0)
    return OLSFit(beta, alpha if y.ndim > 1 else float(alpha), residuals,
                  r2 if y.ndim > 1 else float(r2), int(rank), design.shape[1])
