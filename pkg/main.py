import dataclasses
import json
import logging
import math
import os
import sys

import argparse
import pandas as pd

from candidate_graph import ArcMissing, build_candidate_graph
from checker import check_design
from constants import (
    BENCHMARK_CATALOGS, COST_RTOL, DEFAULT_NEIGHBOR_TRUNCATION, DEFAULT_RANDOM_SUBSTATIONS, DEFAULT_RANDOM_TURBINES,
    EXIT_FAILURE, EXIT_REPAIR_INFEASIBLE, EXIT_SUCCESS,
)
from milp_export import IoFailure, build_milp, evaluate_assignment, read_lp_summary, read_warm_start, write_lp, \
    write_warm_start
from model import InstanceError, catalog_from_pairs, generate_random_instance, load_instance
from plotting import plot_design
from stages.base import StageResult
from stages.stage_factory import stage_by_name
from stages.tsh import CapacityExceeded, CapacityInfeasible

REPORT_COLUMNS = ['stage', 'solution_meur', 'display', 'time_ms', 'iterations', 'crossings', 'feasible',
                  'dif_best_pct', 'gain_pct', 'timed_out', 'length_km']


class CollectionSystemPipeline:
    def __init__(self, args):
        self.out = args.out
        self.time_limit = args.time_limit
        self.nccrh_off = args.nccrh_off
        self.export_milp = args.export_milp
        self.plot = args.plot
        self.remove_stage_logging = args.remove_stage_logging
        logging.basicConfig(
            level=getattr(logging, args.log_level.upper()),
            handlers=[logging.FileHandler(args.log_file, mode='w'), logging.StreamHandler()],
            force=True,
        )
        self.logger = logging.getLogger(__name__)

        if args.instance:
            instance = load_instance(args.instance)
        else:
            catalog = catalog_from_pairs(BENCHMARK_CATALOGS[args.catalog]) if args.catalog else None
            instance = generate_random_instance(args.seed, n_turbines=args.n_turbines,
                                                n_substations=args.n_substations, catalog=catalog)
        if args.neighbors is not None:
            instance = instance.with_truncation(args.neighbors)
        if args.max_feeders is not None:
            instance = dataclasses.replace(instance, max_feeders=args.max_feeders)
        self.instance = instance
        self.graph = build_candidate_graph(instance)
        self.results = []
        self.logger.info(f'Instance {instance.name}: {instance.n_turbines} turbines, {instance.n_substations} '
                         f'substation(s), {len(instance.catalog)} cable type(s), '
                         f'{len(self.graph)} candidate arcs (truncation {self.graph.neighbor_truncation}).')

    def run_stage(self, name, tree=None) -> StageResult:
        # The constructive stage always runs to completion.
        time_limit = None if name == 'tsh' else self.time_limit
        result = stage_by_name(name, self.instance, self.graph, time_limit=time_limit).run_timed(tree)
        self.results.append(result)
        if result.timed_out:
            self.logger.warning(f'{name.upper()} hit the {self.time_limit}s limit.')
        self.logger.info(f'{name.upper()}: {result.display} in {result.time_ms:.1f} ms, '
                         f'{result.iterations} iteration(s), {result.crossings} crossing(s).')
        return result

    def run(self) -> int:
        os.makedirs(self.out, exist_ok=True)
        current = self.run_stage('tsh')
        if current.crossings > 0:
            current = self.run_stage('ccrh', current.tree)
            if current.infeasible:
                self.logger.error(f'CCRH could not remove the crossings of {self.instance.name}; '
                                  f'writing the partial report.')
                self.write_outputs(current)
                return EXIT_REPAIR_INFEASIBLE
        if not self.nccrh_off:
            current = self.run_stage('nccrh', current.tree)
        self.write_outputs(current)
        if self.export_milp:
            self.write_milp(current)
        return EXIT_SUCCESS

    def report_frame(self) -> pd.DataFrame:
        rows = []
        best = self.instance.best_known_cost
        previous = None
        for result in self.results:
            cost = result.cost if math.isfinite(result.cost) else None
            row = {
                'stage': result.stage,
                'solution_meur': cost,
                'display': result.display,
                'time_ms': round(result.time_ms, 3),
                'iterations': result.iterations,
                'crossings': result.crossings,
                'feasible': result.feasible,
                'dif_best_pct': None,
                'gain_pct': None,
                'timed_out': result.timed_out,
                'length_km': result.tree.total_length(),
            }
            if best and cost is not None and result.feasible:
                row['dif_best_pct'] = f'{(cost - best) / best * 100:.2f}'
            if result.stage == 'nccrh' and previous is not None:
                row['gain_pct'] = f'{(result.cost - previous.cost) / previous.cost * 100:.2f}'
            if result.feasible:
                previous = result
            rows.append(row)
        return pd.DataFrame(rows, columns=REPORT_COLUMNS)

    def write_outputs(self, final: StageResult):
        frame = self.report_frame()
        frame.to_csv(os.path.join(self.out, 'report.csv'), index=False)
        if not self.remove_stage_logging:
            self.logger.info(f'Stage report for {self.instance.name}:\n{frame.to_string(index=False)}')

        report = check_design(final.tree, self.instance)
        if final.feasible and not report.feasible:
            self.logger.error(f'Checker rejects the {final.stage} design: {report.messages}')
        design = {
            'instance': self.instance.name,
            'stage': final.stage,
            'cost': final.cost if math.isfinite(final.cost) else None,
            'total_length_km': final.tree.total_length(),
            'length_by_cable_km': {str(cable): length for cable, length in final.tree.length_by_cable().items()},
            'edges': final.tree.to_records(),
            'stages': json.loads(frame.to_json(orient='records')),
            'report': report.to_dict(),
        }
        for result in self.results:
            if result.extra:
                design.setdefault('history', {})[result.stage] = result.extra
        with open(os.path.join(self.out, 'design.json'), 'w') as fd:
            json.dump(design, fd, indent=2, default=_to_builtin)

        if self.plot:
            for result in self.results:
                plot_design(result.tree, self.instance, os.path.join(self.out, f'design_{result.stage}.svg'),
                            title=f'{self.instance.name} {result.stage.upper()} {result.display}')

    def write_milp(self, final: StageResult):
        model = build_milp(self.instance, self.graph)
        lp_path = os.path.join(self.out, 'model.lp')
        warm_start_path = os.path.join(self.out, 'warm_start.txt')
        assignment = write_warm_start(final.tree, model, warm_start_path)
        write_lp(model, lp_path, warm_start=assignment)

        objective, violated = evaluate_assignment(model, read_warm_start(warm_start_path))
        summary = read_lp_summary(lp_path)
        audit = {'objective': objective, 'violated': violated, **summary}
        with open(os.path.join(self.out, 'milp_audit.json'), 'w') as fd:
            json.dump(audit, fd, indent=2)
        if violated:
            self.logger.warning(f'Warm start violates {len(violated)} MILP constraint(s): {violated[:10]}')
        if not math.isclose(objective, final.cost, rel_tol=COST_RTOL):
            self.logger.warning(f'Warm start objective {objective:.6f} differs from the design cost {final.cost:.6f}.')
        self.logger.info(f'Wrote {lp_path} ({summary["constraints"]} constraints, {summary["binaries"]} binaries) '
                         f'and {warm_start_path} ({len(assignment)} non-zero variables).')
        return audit


def _to_builtin(value):
    # numpy scalars that end up in the stage history
    if hasattr(value, 'item'):
        return value.item()
    raise TypeError(f'{type(value).__name__} is not JSON serializable')


def run_pipeline(args) -> int:
    """
    :return: exit code (0 success, 2 crossings left after repair, 1 invalid input or I/O failure)
    """
    try:
        return CollectionSystemPipeline(args).run()
    except (InstanceError, IoFailure, OSError, ArcMissing, CapacityInfeasible, CapacityExceeded) as e:
        logging.getLogger(__name__).error(f'{type(e).__name__}: {e}')
        return EXIT_FAILURE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser('Offshore wind farm collection-system designer')

    parser.add_argument('--instance', default=None, help='Instance JSON. A random instance is generated if omitted.')
    parser.add_argument('--out', default='results', help='Directory for the design, report and exported files.')
    parser.add_argument('--export-milp', dest='export_milp', default=False, action='store_true',
                        help='Write the MILP as an LP file plus a warm start from the final design.')
    parser.add_argument('--plot', default=False, action='store_true', help='Write one SVG per stage.')
    parser.add_argument('--nccrh-off', dest='nccrh_off', default=False, action='store_true',
                        help='Stop after the crossing repair.')
    parser.add_argument('--seed', type=int, default=1992, help='Random seed for generated instances.')
    parser.add_argument('--neighbors', type=int, default=None,
                        help=f'Neighbour truncation of the candidate graph (instance value, else '
                             f'{DEFAULT_NEIGHBOR_TRUNCATION}).')
    parser.add_argument('--max-feeders', dest='max_feeders', type=int, default=None,
                        help='Feeders allowed per substation. Reported only.')
    parser.add_argument('--batch', default=None, help='Directory of instance JSONs or a CSV of runs.')
    parser.add_argument('--n_turbines', type=int, default=DEFAULT_RANDOM_TURBINES)
    parser.add_argument('--n_substations', type=int, default=DEFAULT_RANDOM_SUBSTATIONS)
    parser.add_argument('--catalog', type=int, default=None, choices=sorted(BENCHMARK_CATALOGS),
                        help='Benchmark cable set for generated instances.')
    parser.add_argument('--time_limit', type=float, default=None, help='Seconds allowed for CCRH and NCCRH each.')
    parser.add_argument('--log_file', default='pipeline.log')
    parser.add_argument('--log_level', default='INFO', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    parser.add_argument('--run_id', default=None, help='Batch only: name of the summary file under --out.')
    parser.add_argument('--cpu_frac', default=0.33, type=float, help='Batch only: share of CPUs to use.')
    parser.add_argument('-overwrite', default=False, action='store_true', help='Batch only: redo finished runs.')
    parser.add_argument('-remove_stage_logging', default=False, action='store_true')
    return parser


if __name__ == '__main__':
    args = build_parser().parse_args()
    if args.batch:
        from run_batch import run_batch
        sys.exit(run_batch(args))
    sys.exit(run_pipeline(args))
