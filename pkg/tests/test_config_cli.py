import json
from pathlib import Path

import pandas as pd
import pytest

from statarb.__main__ import main
from statarb.command.verify import Check, VerifyReport, verify_command
from statarb.models.config import AE_POLICY, PCA_OU
from statarb.models.errors import ConfigError
from statarb.report.table import TableCreator
from statarb.service import read_config
from statarb.utils.paths import OUTPUT_DIR_ENV

SYNTHETIC = {'n_stocks': 10, 'n_days': 420, 'n_factors': 2, 'seed': 3}


def write_config(folder: Path, **content) -> Path:
    config = {'data': {'source': 'synthetic', 'synthetic': SYNTHETIC},
              'strategies': [{'model': 'PCA-OU', 'k': 2}],
              'output': {'directory': 'out'}}
    config.update(content)
    path = folder / 'config.json'
    path.write_text(json.dumps(config), encoding='utf-8')
    return path


class TestReadConfig:

    def test_minimal(self, tmp_path):
        config = read_config(write_config(tmp_path, strategies=[{'model': 'AE-Policy', 'lambda': 0.25}]))
        assert config.seed == 0
        assert config.parallelism == 1
        assert config.data.synthetic.n_days == 420
        assert config.output.directory == tmp_path / 'out'
        spec = config.strategies[0]
        assert spec.model == AE_POLICY
        assert spec.gearing == 0.25
        assert spec.label == 'AE-Policy l=10'

    def test_defaults_without_output_section(self, tmp_path):
        path = tmp_path / 'config.json'
        path.write_text(json.dumps({'data': {'source': 'synthetic'}, 'strategies': [{'model': 'PCA-OU', 'k': 1}]}),
                        encoding='utf-8')
        config = read_config(path)
        assert config.output.directory == Path('results')
        assert config.data.synthetic is not None
        assert config.strategies[0].model == PCA_OU

    def test_lambda_out_of_range(self, tmp_path):
        with pytest.raises(ConfigError) as info:
            read_config(write_config(tmp_path, strategies=[{'model': 'AE-Policy', 'lambda': 1.5}]))
        assert any('lambda' in violation for violation in info.value.violations)

    def test_every_violation_is_listed(self, tmp_path):
        path = tmp_path / 'config.json'
        path.write_text(json.dumps({'strategies': [{'model': 'PCA-OU', 'k': 'two'}, {'model': 'XX'}],
                                    'colour': 'blue', 'seed': -1}), encoding='utf-8')
        with pytest.raises(ConfigError) as info:
            read_config(path)
        text = '\n'.join(info.value.violations)
        assert 'unknown key "colour"' in text
        assert 'missing required key "data"' in text
        assert 'seed must be a non-negative integer' in text
        assert 'strategies[0].k' in text
        assert 'unknown model "XX"' in text

    def test_unknown_strategy_key(self, tmp_path):
        with pytest.raises(ConfigError) as info:
            read_config(write_config(tmp_path, strategies=[{'model': 'PCA-OU', 'k': 2, 'kk': 3}]))
        assert info.value.violations == ['strategies[0]: unknown key "kk"']

    def test_duplicate_labels(self, tmp_path):
        strategies = [{'model': 'PCA-OU', 'k': 2, 'label': 'x'}, {'model': 'PCA-OU', 'k': 3, 'label': 'x'}]
        with pytest.raises(ConfigError) as info:
            read_config(write_config(tmp_path, strategies=strategies))
        assert info.value.violations == ['strategy label "x" is used more than once']

    def test_csv_source_needs_path(self, tmp_path):
        with pytest.raises(ConfigError) as info:
            read_config(write_config(tmp_path, data={'source': 'csv'}))
        assert 'data.path is required for a csv source' in info.value.violations

    def test_not_json(self, tmp_path):
        path = tmp_path / 'config.json'
        path.write_text('{"data": ', encoding='utf-8')
        with pytest.raises(ConfigError):
            read_config(path)


class TestRunCommand:

    def test_run_writes_results_and_isolates_failures(self, tmp_path, capsys):
        strategies = [{'model': 'FF-OU'}, {'model': 'PCA-OU', 'k': 2},
                      {'model': 'PCA-OU+FFN', 'k': 2, 'label': 'too short'}]
        code = main(['run', '-c', str(write_config(tmp_path, strategies=strategies, parallelism=2))])
        assert code == 1
        out = tmp_path / 'out'
        metrics = pd.read_csv(out / 'metrics.csv')
        assert list(metrics['label']) == ['FF-OU all factors', 'PCA-OU k=2']
        manifest = json.loads((out / 'manifest.json').read_text(encoding='utf-8'))
        assert set(manifest['failed']) == {'too short'}
        assert manifest['completed'] == ['FF-OU all factors', 'PCA-OU k=2']
        assert set(manifest['strategy_seeds']) == {'FF-OU all factors', 'PCA-OU k=2', 'too short'}
        printed = capsys.readouterr().out
        assert 'FAILED too short' in printed
        assert 'PCA-OU k=2' in printed

    def test_reruns_are_byte_identical(self, tmp_path, monkeypatch):
        path = write_config(tmp_path, strategies=[{'model': 'PCA-OU', 'k': 2}])
        monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / 'first'))
        assert main(['run', '-c', str(path)]) == 0
        monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / 'second'))
        assert main(['run', '-c', str(path)]) == 0
        assert not (tmp_path / 'out').exists()
        for name in ('metrics.csv', 'daily_returns.csv', 'weights.csv', 'equity_curve.csv', 'manifest.json'):
            assert (tmp_path / 'first' / name).read_bytes() == (tmp_path / 'second' / name).read_bytes()

    def test_invalid_config_exits_with_two(self, tmp_path, capsys):
        path = write_config(tmp_path, strategies=[{'model': 'AE-Policy', 'lambda': 1.5}])
        assert main(['run', '-c', str(path)]) == 2
        assert 'lambda' in capsys.readouterr().err

    def test_unreadable_market_data_exits_with_two(self, tmp_path, capsys):
        (tmp_path / 'panel.csv').write_text('date,ticker,return,close,mktcap,dollar_volume\n'
                                            '2020-01-02,AAA,abc,10,100,1000\n', encoding='utf-8')
        path = write_config(tmp_path, data={'source': 'csv', 'path': 'panel.csv', 'universe': False})
        assert main(['run', '-c', str(path)]) == 2
        assert 'Cannot load market data' in capsys.readouterr().err
        assert not (tmp_path / 'out').exists()

    def test_synth_on_csv_source_exits_with_two(self, tmp_path, capsys):
        (tmp_path / 'panel.csv').write_text('date,ticker,return,close,mktcap,dollar_volume\n', encoding='utf-8')
        path = write_config(tmp_path, data={'source': 'csv', 'path': 'panel.csv'})
        assert main(['synth', '-c', str(path)]) == 2
        assert 'synth needs data.source "synthetic"' in capsys.readouterr().err

    def test_synth_writes_csv_that_runs(self, tmp_path):
        assert main(['synth', '-c', str(write_config(tmp_path))]) == 0
        data = {'source': 'csv', 'path': 'out/panel.csv', 'factors': 'out/factors.csv', 'universe': False}
        config = tmp_path / 'csv.json'
        config.write_text(json.dumps({'data': data, 'strategies': [{'model': 'FF-OU', 'factors': ['factor_1']}],
                                      'output': {'directory': 'csv-out'}}), encoding='utf-8')
        assert main(['run', '-c', str(config)]) == 0
        metrics = pd.read_csv(tmp_path / 'csv-out' / 'metrics.csv')
        assert list(metrics['label']) == ['FF-OU factor_1']


class TestVerify:

    def test_report(self):
        report = VerifyReport('demo', [])
        report.add(Check.at_most('small', 1e-6, 1e-4))
        assert report.passed
        report.add(Check.at_most('large', 1.0, 1e-4))
        assert not report.passed
        assert 'large' in report.render()

    def test_pca_suite(self):
        assert verify_command('pca').execute().passed

    def test_ou_suite(self):
        assert main(['verify', 'ou', '--seed', '1']) == 0

    def test_unknown_suite(self):
        with pytest.raises(SystemExit):
            main(['verify', 'nope'])

    @pytest.mark.slow
    def test_gradient_suite(self):
        assert verify_command('gradients').execute().passed

    @pytest.mark.slow
    def test_invariant_suite(self):
        assert verify_command('invariants').execute().passed


class TestTable:

    def test_numbers_align_right(self):
        lines = TableCreator(['label', 'SR'], [['a', 1.5], ['long label', 0.25], ['c', None]]).create()
        assert lines[0] == '| label      |   SR |'
        assert lines[1] == '|------------+------|'
        assert lines[2] == '| a          |  1.5 |'
        assert lines[3] == '| long label | 0.25 |'
        assert lines[4] == '| c          |    - |'
