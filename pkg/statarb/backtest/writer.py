import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

import numpy as np
import pandas as pd

from statarb.io.file import CsvHandler, JsonHandler
from statarb.models.results import BacktestResult
from statarb.nn.checkpoint import save_network
from statarb.utils.paths import create_directory_unless_exist, safe_name

log = logging.getLogger(__name__)

METRIC_COLUMNS = ['model', 'variant', 'label', 'SR', 'mu', 'sigma', 'max_drawdown', 'days']


def _number(value: float) -> Optional[float]:
    return None if value is None or math.isnan(value) else float(value)


def metrics_frame(results: Iterable[BacktestResult]) -> pd.DataFrame:
    rows = [{'model': result.model, 'variant': result.variant, 'label': result.label,
             'SR': result.performance.sharpe, 'mu': result.performance.mu, 'sigma': result.performance.sigma,
             'max_drawdown': result.performance.max_drawdown, 'days': result.performance.days}
            for result in results]
    frame = pd.DataFrame(rows, columns=METRIC_COLUMNS)
    return frame.sort_values(['model', 'variant', 'label'], kind='mergesort').reset_index(drop=True)


def _dates(index: pd.DatetimeIndex) -> np.ndarray:
    return np.asarray(index.strftime('%Y-%m-%d'))


def daily_frame(results: Iterable[BacktestResult]) -> pd.DataFrame:
    frames = [pd.DataFrame({'date': _dates(result.realized_dates), 'label': result.label,
                            'return': result.returns, 'traded': result.traded.astype(int)})
              for result in results]
    return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=['date', 'label', 'return', 'traded'])


def curve_frame(results: Iterable[BacktestResult]) -> pd.DataFrame:
    frames = [pd.DataFrame({'date': _dates(result.realized_dates), 'label': result.label, 'curve': result.curve})
              for result in results]
    return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=['date', 'label', 'curve'])


def weights_frame(results: Iterable[BacktestResult]) -> pd.DataFrame:
    frames = []
    for result in results:
        rows, cols = np.nonzero(result.weights)
        frames.append(pd.DataFrame({'date': _dates(result.decision_dates)[rows], 'label': result.label,
                                    'ticker': np.asarray(result.tickers, dtype=object)[cols],
                                    'weight': result.weights[rows, cols]}))
    return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=['date', 'label', 'ticker', 'weight'])


class ResultsWriter:
    """Writes one run's outputs below `directory`; formatting is fixed so reruns are byte-identical."""

    def __init__(self, directory: Path, csv: Optional[CsvHandler] = None, json: Optional[JsonHandler] = None) -> None:
        self.directory = directory
        self.csv = CsvHandler() if csv is None else csv
        self.json = JsonHandler() if json is None else json

    def _write_csv(self, name: str, frame: pd.DataFrame) -> Path:
        path = self.directory / name
        self.csv.write(path, frame)
        return path

    def write(self, results: List[BacktestResult], manifest: Dict[str, Any], diagnostics: bool = True,
              export_intermediate: bool = False) -> List[Path]:
        create_directory_unless_exist(self.directory)
        paths = [
            self._write_csv('metrics.csv', metrics_frame(results)),
            self._write_csv('daily_returns.csv', daily_frame(results)),
            self._write_csv('equity_curve.csv', curve_frame(results)),
            self._write_csv('weights.csv', weights_frame(results)),
        ]
        if diagnostics:
            paths.extend(self.write_diagnostics(result) for result in results)
        if export_intermediate:
            for result in results:
                paths.extend(self.write_intermediate(result))
        manifest_path = self.directory / 'manifest.json'
        self.json.write(manifest_path, manifest)
        paths.append(manifest_path)
        log.info('Wrote %d result files to %s', len(paths), self.directory)
        return paths

    def write_diagnostics(self, result: BacktestResult) -> Path:
        path = self.directory / 'diagnostics' / f'{safe_name(result.label)}.json'
        performance = result.performance
        self.json.write(path, {
            'label': result.label,
            'model': result.model,
            'variant': result.variant,
            'sharpe': _number(performance.sharpe),
            'degenerate': performance.degenerate,
            'days': performance.days,
            'no_trade_days': int((~result.traded).sum()),
            'flagged_residuals': int(result.residuals.flagged.sum())
            if result.residuals is not None and result.residuals.flagged is not None else 0,
            'days_detail': result.diagnostics,
        })
        return path

    def write_intermediate(self, result: BacktestResult) -> List[Path]:
        paths = []
        name = safe_name(result.label)
        if result.residuals is not None:
            paths.append(self._write_csv(f'residuals/{name}.csv', result.residuals.to_frame()))
        if result.signals is not None:
            paths.append(self._write_csv(f'signals/{name}.csv', result.signals.to_frame()))
        for fold, net in sorted(result.networks.items()):
            path = self.directory / 'networks' / name / f'{fold}.json'
            save_network(net, path)
            paths.append(path)
        return paths
