import copy
from functools import partial
import glob
import os
import sys

import pandas as pd
from p_tqdm import p_uimap

from constants import EXIT_FAILURE, EXIT_SUCCESS
from main import build_parser, run_pipeline
from utils import make_run_id

# Columns of a batch CSV that map onto pipeline flags.
RUN_KEYS = ['instance', 'seed', 'n_turbines', 'n_substations', 'catalog', 'neighbors', 'max_feeders']


def runs_from(batch_path: str):
    """
    :param batch_path: directory of instance JSON files, or a CSV with one run per row
    :return: list of run dicts (keys from RUN_KEYS)
    """
    if os.path.isdir(batch_path):
        return [{'instance': path} for path in sorted(glob.glob(os.path.join(batch_path, '*.json')))]
    runs = []
    for record in pd.read_csv(batch_path).to_dict('records'):
        run = {key: record[key] for key in RUN_KEYS if key in record and pd.notna(record[key])}
        for key in run:
            if key != 'instance':
                run[key] = int(run[key])
        runs.append(run)
    return runs


def run_id_for(run) -> str:
    if 'instance' in run:
        return os.path.splitext(os.path.basename(run['instance']))[0]
    return make_run_id(run)


def run_experiment(run, batch_args):
    run_id = run_id_for(run)
    out_dir = os.path.join(batch_args.out, run_id)
    if os.path.exists(os.path.join(out_dir, 'report.csv')) and not batch_args.overwrite:
        print(f'Already ran {run_id}')
        return {'run_id': run_id, 'status': None}
    os.makedirs(os.path.join(batch_args.out, 'logs'), exist_ok=True)
    run_args = copy.copy(batch_args)
    run_args.batch = None
    run_args.out = out_dir
    run_args.log_file = os.path.join(batch_args.out, 'logs', f'{run_id}.txt')
    run_args.remove_stage_logging = True
    for key, value in run.items():
        setattr(run_args, key, value)
    try:
        status = run_pipeline(run_args)
    except Exception as e:
        print(f'Uncaught error in {run_id}: {e}')
        status = EXIT_FAILURE
    return {'run_id': run_id, 'status': status, **run}


def run_batch(batch_args) -> int:
    runs = runs_from(batch_args.batch)
    if not runs:
        print(f'No runs found in {batch_args.batch}')
        return EXIT_FAILURE
    os.makedirs(batch_args.out, exist_ok=True)
    num_cpus = max(1, round(batch_args.cpu_frac * os.cpu_count()))
    statuses = list(p_uimap(partial(run_experiment, batch_args=batch_args), runs, num_cpus=num_cpus))
    summary = pd.DataFrame(statuses).sort_values(by='run_id')
    summary_name = batch_args.run_id or 'batch_summary'
    summary.to_csv(os.path.join(batch_args.out, f'{summary_name}.csv'), index=False)
    ran = summary[summary['status'].notna()]
    print(f'{int((ran["status"] == EXIT_SUCCESS).sum())}/{len(ran)} runs finished with a feasible design.')
    return EXIT_FAILURE if (ran['status'] == EXIT_FAILURE).any() else EXIT_SUCCESS


if __name__ == '__main__':
    parser = build_parser()
    parser.set_defaults(batch='batch_configs.csv')
    sys.exit(run_batch(parser.parse_args()))
