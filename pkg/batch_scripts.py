import numpy as np
import pandas as pd
from tqdm import tqdm

from constants import BENCHMARK_CATALOGS

TURBINE_COUNTS = [20, 40, 60, 80]

SUBSTATION_COUNTS = [1, 2]

SEEDS = list(range(1992, 1992 + 25))


def benchmark_grid(catalog_ids=None, seeds=SEEDS):
    catalog_ids = sorted(BENCHMARK_CATALOGS) if catalog_ids is None else list(catalog_ids)
    rows = []
    for n_turbines in tqdm(TURBINE_COUNTS):
        for n_substations in SUBSTATION_COUNTS:
            for seed in seeds:
                # Same seed and size always draw the same cable set.
                rng = np.random.default_rng([seed, n_turbines, n_substations])
                rows.append({
                    'seed': seed,
                    'n_turbines': n_turbines,
                    'n_substations': n_substations,
                    'catalog': int(rng.choice(catalog_ids)),
                    'priority': n_turbines * n_substations,
                })
    return pd.DataFrame(rows)


if __name__ == '__main__':
    df = benchmark_grid()
    df.sort_values(by='priority', inplace=True, kind='stable')
    df.to_csv('batch_configs.csv', index=False)
    print(f'Done! {len(df)} runs.')
