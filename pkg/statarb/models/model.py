from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Protocol

import numpy as np

from statarb.models.config import StrategySpec
from statarb.models.panel import ReturnsPanel, UniverseMask
from statarb.models.results import ResidualPanel, SignalPanel
from statarb.nn.network import Network


class IResidualModel(Protocol):
    name: str
    variant: str

    @property
    def first_row(self) -> int:
        """First panel row that can carry an out-of-sample residual."""
        ...

    def residuals(self, panel: ReturnsPanel, universe: UniverseMask, rows: range) -> ResidualPanel:
        ...


@dataclass
class StrategySignals:
    """Raw signals phi on the panel grid (T x N); only decision rows carry values."""
    rows: range
    phi: np.ndarray = field(repr=False)
    residuals: Optional[ResidualPanel] = field(default=None, repr=False)
    signals: Optional[SignalPanel] = field(default=None, repr=False)
    diagnostics: List[Dict[str, Any]] = field(default_factory=list, repr=False)
    networks: Dict[str, Network] = field(default_factory=dict, repr=False)


class IStrategy(Protocol):
    spec: StrategySpec

    @property
    def warmup(self) -> int:
        """First decision row the strategy can trade."""
        ...

    def signals(self, panel: ReturnsPanel, universe: UniverseMask, rows: range) -> StrategySignals:
        ...
