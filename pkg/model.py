from dataclasses import dataclass, field
import json
import logging
import math
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from constants import (
    DEFAULT_AREA, DEFAULT_MIN_SEPARATION, DEFAULT_NEIGHBOR_TRUNCATION, DEFAULT_RANDOM_SUBSTATIONS,
    DEFAULT_RANDOM_TURBINES, METERS_PER_KM, PLACEMENT_ATTEMPTS_PER_NODE, BENCHMARK_CATALOGS,
)


logger = logging.getLogger(__name__)


class InstanceError(Exception):
    def __init__(self, value='Invalid instance'):
        self.value = value

    def __str__(self):
        return repr(self.value)


class EmptyCatalog(InstanceError):
    def __init__(self, value='No valid cable left in the catalog'):
        super().__init__(value)


class PlacementFailure(InstanceError):
    def __init__(self, value='Could not place all nodes with the requested separation'):
        super().__init__(value)


@dataclass(eq=True, frozen=True)
class CableType:
    capacity: int
    unit_cost: float

    def is_valid(self):
        return self.capacity >= 1 and math.isfinite(self.unit_cost) and self.unit_cost > 0

    def __str__(self):
        return f'{self.capacity}WT@{self.unit_cost}'


@dataclass(eq=True, frozen=True)
class CableCatalog:
    """
    Cables sorted by capacity with capacities and unit costs both strictly increasing.
    Build it through normalize_catalog, which enforces that.
    """
    cables: Tuple[CableType, ...]

    def __post_init__(self):
        if len(self.cables) == 0:
            raise EmptyCatalog()
        capacities = [cable.capacity for cable in self.cables]
        costs = [cable.unit_cost for cable in self.cables]
        assert all(a < b for a, b in zip(capacities, capacities[1:])), 'capacities must strictly increase'
        assert all(a < b for a, b in zip(costs, costs[1:])), 'unit costs must strictly increase'

    def __len__(self):
        return len(self.cables)

    def __iter__(self) -> Iterator[CableType]:
        return iter(self.cables)

    @property
    def capacities(self) -> np.ndarray:
        return np.array([cable.capacity for cable in self.cables], dtype=int)

    @property
    def unit_costs(self) -> np.ndarray:
        return np.array([cable.unit_cost for cable in self.cables], dtype=float)

    @property
    def max_capacity(self) -> int:
        return self.cables[-1].capacity

    def cheapest_cable_for(self, k: int) -> Optional[int]:
        if k <= 0 or k > self.max_capacity:
            return None
        return int(np.searchsorted(self.capacities, k, side='left'))

    def step_cost(self, length_km: float, k: int) -> float:
        if k == 0:
            return 0.0
        cable = self.cheapest_cable_for(k)
        if cable is None:
            return math.inf
        return self.cables[cable].unit_cost * length_km

    def step_costs(self, lengths_km, ks) -> np.ndarray:
        """
        Vectorised step_cost.
        :param lengths_km: array of arc lengths
        :param ks: array (same shape) of non-negative turbine counts
        :return: float array with 0 where k == 0 and inf where k > Q
        """
        lengths_km = np.asarray(lengths_km, dtype=float)
        ks = np.asarray(ks, dtype=int)
        capacities = self.capacities
        idx = np.minimum(np.searchsorted(capacities, ks, side='left'), len(capacities) - 1)
        costs = self.unit_costs[idx] * lengths_km
        costs = np.where(ks > self.max_capacity, math.inf, costs)
        return np.where(ks == 0, 0.0, costs)

    def to_records(self) -> List[Dict]:
        return [{'capacity': cable.capacity, 'cost_per_km': cable.unit_cost} for cable in self.cables]


def normalize_catalog(raw: Iterable[CableType]) -> CableCatalog:
    """
    Drops invalid entries and any cable dominated by another one (capacity <= and cost >=),
    keeping the cheaper one when two cables share a capacity.
    """
    raw = list(raw)
    valid = [cable for cable in raw if cable.is_valid()]
    if len(valid) < len(raw):
        logger.warning(f'Dropped {len(raw) - len(valid)} invalid cable(s) from the catalog.')
    if len(valid) == 0:
        raise EmptyCatalog()

    kept = []
    cheapest_larger = math.inf
    for cable in sorted(set(valid), key=lambda c: (-c.capacity, c.unit_cost)):
        if cable.unit_cost < cheapest_larger:
            kept.append(cable)
            cheapest_larger = cable.unit_cost
    if len(kept) < len(set(valid)):
        logger.info(f'Removed {len(set(valid)) - len(kept)} dominated cable(s) from the catalog.')
    return CableCatalog(tuple(reversed(kept)))


def cheapest_cable_for(catalog: CableCatalog, k: int) -> Optional[int]:
    return catalog.cheapest_cable_for(k)


def step_cost(catalog: CableCatalog, length_km: float, k: int) -> float:
    return catalog.step_cost(length_km, k)


def catalog_from_pairs(pairs: Sequence[Tuple[int, float]]) -> CableCatalog:
    return normalize_catalog([CableType(int(q), float(w)) for q, w in pairs])


@dataclass(eq=False, frozen=True)
class Instance:
    """
    Node ids are 1-based: 1..n_S are substations, n_S+1..n_S+n_T are turbines.
    Coordinates are in meters.
    """
    substations: np.ndarray
    turbines: np.ndarray
    catalog: CableCatalog
    neighbor_truncation: int = DEFAULT_NEIGHBOR_TRUNCATION
    name: str = 'instance'
    max_feeders: Optional[int] = None
    best_known_cost: Optional[float] = None
    coordinates: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        substations = np.asarray(self.substations, dtype=float).reshape(-1, 2)
        turbines = np.asarray(self.turbines, dtype=float).reshape(-1, 2)
        object.__setattr__(self, 'substations', substations)
        object.__setattr__(self, 'turbines', turbines)
        if len(substations) < 1:
            raise InstanceError('At least one substation is required.')
        if len(turbines) < 1:
            raise InstanceError('At least one turbine is required.')
        coordinates = np.vstack([substations, turbines])
        if not np.all(np.isfinite(coordinates)):
            raise InstanceError('All coordinates must be finite.')
        if len(np.unique(coordinates, axis=0)) < len(coordinates):
            raise InstanceError('Two nodes share the same coordinates.')
        if int(self.neighbor_truncation) < 1:
            raise InstanceError(f'neighbor_truncation must be positive, got {self.neighbor_truncation}.')
        if self.max_feeders is not None and int(self.max_feeders) < 1:
            raise InstanceError(f'max_feeders must be positive, got {self.max_feeders}.')
        coordinates.setflags(write=False)
        object.__setattr__(self, 'coordinates', coordinates)

    @property
    def n_substations(self) -> int:
        return len(self.substations)

    @property
    def n_turbines(self) -> int:
        return len(self.turbines)

    @property
    def n_nodes(self) -> int:
        return self.n_substations + self.n_turbines

    @property
    def substation_ids(self) -> List[int]:
        return list(range(1, self.n_substations + 1))

    @property
    def turbine_ids(self) -> List[int]:
        return list(range(self.n_substations + 1, self.n_nodes + 1))

    @property
    def node_ids(self) -> List[int]:
        return list(range(1, self.n_nodes + 1))

    def is_substation(self, node: int) -> bool:
        return 1 <= node <= self.n_substations

    def coord(self, node: int) -> Tuple[float, float]:
        x, y = self.coordinates[node - 1]
        return float(x), float(y)

    def length_km(self, i: int, j: int) -> float:
        return float(np.linalg.norm(self.coordinates[i - 1] - self.coordinates[j - 1])) / METERS_PER_KM

    def with_truncation(self, neighbor_truncation: int) -> 'Instance':
        return Instance(self.substations, self.turbines, self.catalog, neighbor_truncation, self.name,
                        self.max_feeders, self.best_known_cost)

    def to_dict(self) -> Dict:
        data = {
            'name': self.name,
            'substations': self.substations.tolist(),
            'turbines': self.turbines.tolist(),
            'cables': self.catalog.to_records(),
            'neighbor_truncation': int(self.neighbor_truncation),
        }
        if self.max_feeders is not None:
            data['max_feeders'] = int(self.max_feeders)
        if self.best_known_cost is not None:
            data['best_known_cost'] = float(self.best_known_cost)
        return data


def instance_from_dict(data: Dict, name: str = 'instance') -> Instance:
    try:
        catalog = normalize_catalog(
            [CableType(int(cable['capacity']), float(cable['cost_per_km'])) for cable in data['cables']])
        return Instance(
            substations=data['substations'],
            turbines=data['turbines'],
            catalog=catalog,
            neighbor_truncation=int(data.get('neighbor_truncation', DEFAULT_NEIGHBOR_TRUNCATION)),
            name=str(data.get('name', name)),
            max_feeders=data.get('max_feeders'),
            best_known_cost=data.get('best_known_cost'),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise InstanceError(f'Malformed instance document: {e}')


def load_instance(path: str) -> Instance:
    try:
        with open(path) as fd:
            data = json.load(fd)
    except (OSError, json.JSONDecodeError) as e:
        raise InstanceError(f'Could not read instance file {path}: {e}')
    default_name = path.rsplit('/', 1)[-1].rsplit('.', 1)[0]
    return instance_from_dict(data, name=default_name)


def save_instance(instance: Instance, path: str):
    with open(path, 'w') as fd:
        json.dump(instance.to_dict(), fd, indent=2)
        fd.write('\n')


def generate_random_instance(seed: int, n_turbines: int = DEFAULT_RANDOM_TURBINES,
                             n_substations: int = DEFAULT_RANDOM_SUBSTATIONS,
                             area: Tuple[float, float] = DEFAULT_AREA,
                             catalog: Optional[CableCatalog] = None,
                             min_separation: float = DEFAULT_MIN_SEPARATION,
                             neighbor_truncation: int = DEFAULT_NEIGHBOR_TRUNCATION) -> Instance:
    """
    :param seed: random seed; the same seed always yields the same instance
    :param n_turbines: number of turbines
    :param n_substations: number of substations (placed first, same rule)
    :param area: (width, height) of the rectangle in meters
    :param catalog: cable catalog, defaults to benchmark cable set 10
    :param min_separation: minimum distance between any two nodes in meters
    :return: Instance with uniformly sampled coordinates
    """
    if n_turbines < 1 or n_substations < 1:
        raise InstanceError('Need at least one turbine and one substation.')
    rng = np.random.default_rng(seed)
    catalog = catalog_from_pairs(BENCHMARK_CATALOGS[10]) if catalog is None else catalog
    width, height = area
    n_nodes = n_substations + n_turbines
    placed = np.empty((0, 2))
    attempts = 0
    max_attempts = PLACEMENT_ATTEMPTS_PER_NODE * n_nodes
    while len(placed) < n_nodes:
        if attempts >= max_attempts:
            raise PlacementFailure(
                f'Placed {len(placed)}/{n_nodes} nodes in {width}x{height} m with separation {min_separation} m.')
        attempts += 1
        point = np.round(rng.uniform((0.0, 0.0), (width, height)), 1)
        if len(placed) == 0 or np.min(np.linalg.norm(placed - point, axis=1)) >= max(min_separation, 0.1):
            placed = np.vstack([placed, point])
    return Instance(
        substations=placed[:n_substations],
        turbines=placed[n_substations:],
        catalog=catalog,
        neighbor_truncation=neighbor_truncation,
        name=f'random_{seed}_{n_turbines}_{n_substations}',
    )


@dataclass(eq=True, frozen=True)
class EdgeRow:
    node_a: int
    node_b: int
    length_km: float
    downstream: Optional[int] = None
    cable: Optional[int] = None

    @property
    def key(self) -> Tuple[int, int]:
        return min(self.node_a, self.node_b), max(self.node_a, self.node_b)

    def __str__(self):
        return f'{self.node_a}-{self.node_b}'


class EdgeMatrix:
    """
    Working forest: one row per cable. Once cables are assigned, node_a is the
    upstream (substation side) endpoint of every row.
    """
    def __init__(self, rows: Iterable[EdgeRow] = ()):
        self.rows = tuple(rows)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[int, int]], instance: Instance) -> 'EdgeMatrix':
        return cls(EdgeRow(a, b, instance.length_km(a, b)) for a, b in pairs)

    def __len__(self):
        return len(self.rows)

    def __iter__(self) -> Iterator[EdgeRow]:
        return iter(self.rows)

    def __getitem__(self, index) -> EdgeRow:
        return self.rows[index]

    def __repr__(self):
        return f'EdgeMatrix({", ".join(str(row) for row in self.rows)})'

    def pairs(self) -> List[Tuple[int, int]]:
        return [(row.node_a, row.node_b) for row in self.rows]

    def keys(self) -> List[Tuple[int, int]]:
        return [row.key for row in self.rows]

    def without(self, index: int) -> 'EdgeMatrix':
        return EdgeMatrix(self.rows[:index] + self.rows[index + 1:])

    @property
    def is_assigned(self) -> bool:
        return all(row.downstream is not None and row.cable is not None for row in self.rows)

    def total_length(self) -> float:
        return float(sum(row.length_km for row in self.rows))

    def total_cost(self, catalog: CableCatalog) -> float:
        if not self.is_assigned:
            raise ValueError('Cable types have not been assigned to every row.')
        unit_costs = catalog.unit_costs
        return float(sum(row.length_km * unit_costs[row.cable] for row in self.rows))

    def length_by_cable(self) -> Dict[int, float]:
        lengths = {}
        for row in self.rows:
            if row.cable is not None:
                lengths[row.cable] = lengths.get(row.cable, 0.0) + row.length_km
        return dict(sorted(lengths.items()))

    def to_records(self) -> List[Dict]:
        return [{
            'upstream': row.node_a,
            'downstream_node': row.node_b,
            'length_km': row.length_km,
            'downstream_count': row.downstream,
            'cable': row.cable,
        } for row in self.rows]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.to_records(),
                            columns=['upstream', 'downstream_node', 'length_km', 'downstream_count', 'cable'])
