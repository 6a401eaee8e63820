import os

import pandas as pd
import pytest

from batch_scripts import SEEDS, benchmark_grid
from constants import BENCHMARK_CATALOGS
from main import build_parser
from model import save_instance
from run_batch import run_batch, run_experiment, run_id_for, runs_from


@pytest.fixture
def instance_dir(tmp_path, chain_instance, offset_pair_instance):
    directory = tmp_path / 'instances'
    directory.mkdir()
    save_instance(chain_instance, str(directory / 'chain.json'))
    save_instance(offset_pair_instance, str(directory / 'offset_pair.json'))
    (directory / 'notes.txt').write_text('ignored')
    return directory


def _batch_args(tmp_path, *flags):
    return build_parser().parse_args(['--out', str(tmp_path / 'batch'), *flags])


def test_runs_from_directory(instance_dir):
    runs = runs_from(str(instance_dir))
    assert [os.path.basename(run['instance']) for run in runs] == ['chain.json', 'offset_pair.json']
    assert run_id_for(runs[0]) == 'chain'


def test_runs_from_csv(tmp_path):
    path = tmp_path / 'runs.csv'
    pd.DataFrame([
        {'seed': 1992, 'n_turbines': 20, 'n_substations': 1, 'catalog': 3, 'priority': 20},
        {'seed': 1993, 'n_turbines': 40, 'n_substations': 2, 'catalog': None, 'priority': 80},
    ]).to_csv(path, index=False)
    runs = runs_from(str(path))
    assert runs == [
        {'seed': 1992, 'n_turbines': 20, 'n_substations': 1, 'catalog': 3},
        {'seed': 1993, 'n_turbines': 40, 'n_substations': 2},
    ]
    assert all(type(value) is int for value in runs[0].values())
    assert run_id_for(runs[0]) == 'catalog_3_n_substations_1_n_turbines_20_seed_1992'


def test_run_experiment_skips_finished_runs(tmp_path, instance_dir):
    batch_args = _batch_args(tmp_path)
    run = {'instance': str(instance_dir / 'chain.json')}
    first = run_experiment(run, batch_args)
    assert first['run_id'] == 'chain'
    assert first['status'] == 0
    assert os.path.exists(tmp_path / 'batch' / 'chain' / 'report.csv')
    assert os.path.exists(tmp_path / 'batch' / 'logs' / 'chain.txt')
    assert run_experiment(run, batch_args)['status'] is None
    batch_args.overwrite = True
    assert run_experiment(run, batch_args)['status'] == 0


def test_run_batch_writes_summary(tmp_path, instance_dir):
    batch_args = _batch_args(tmp_path, '--batch', str(instance_dir), '--cpu_frac', '0.01', '--run_id', 'summary')
    assert run_batch(batch_args) == 0
    summary = pd.read_csv(tmp_path / 'batch' / 'summary.csv')
    assert summary['run_id'].tolist() == ['chain', 'offset_pair']
    assert summary['status'].tolist() == [0, 0]


def test_empty_batch_fails(tmp_path):
    empty = tmp_path / 'empty'
    empty.mkdir()
    assert run_batch(_batch_args(tmp_path, '--batch', str(empty))) == 1


def test_benchmark_grid_defaults_to_every_catalog():
    grid = benchmark_grid()
    assert grid.equals(benchmark_grid(sorted(BENCHMARK_CATALOGS)))
    assert set(grid['catalog']) <= set(BENCHMARK_CATALOGS)


def test_cli_catalog_choices_match_benchmark_sets():
    action = next(a for a in build_parser()._actions if a.dest == 'catalog')
    assert list(action.choices) == sorted(BENCHMARK_CATALOGS)


def test_benchmark_grid():
    grid = benchmark_grid(sorted(BENCHMARK_CATALOGS))
    assert len(grid) == 4 * 2 * len(SEEDS) == 200
    assert set(grid['catalog']) <= set(BENCHMARK_CATALOGS)
    assert grid.equals(benchmark_grid(sorted(BENCHMARK_CATALOGS)))
