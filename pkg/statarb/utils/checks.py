from typing import Any

import numpy as np

from statarb.models.errors import NonFiniteError


def require_finite(values: Any, name: str) -> np.ndarray:
    array = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(array)):
        count = int(np.size(array) - np.count_nonzero(np.isfinite(array)))
        raise NonFiniteError(f'{name} has {count} non-finite entries')
    return array


def is_constant(block: np.ndarray, axis: int = 0) -> np.ndarray:
    """True where every value along `axis` is identical (exact, no tolerance)."""
    return np.ptp(block, axis=axis) == 0
