DEFAULT_NEIGHBOR_TRUNCATION = 15

# Orientation determinants below ORIENTATION_EPS * scale**2 count as collinear.
ORIENTATION_EPS = 1e-9
# A cycle only counts as negative below -NEGATIVE_COST_TOL.
NEGATIVE_COST_TOL = 1e-9
COST_RTOL = 1e-6

METERS_PER_KM = 1000.0

ORACLE_MAX_TURBINES = 9

# Default random instance: 74 turbines around one substation.
DEFAULT_RANDOM_TURBINES = 74
DEFAULT_RANDOM_SUBSTATIONS = 1
DEFAULT_AREA = (10000.0, 8000.0)
DEFAULT_MIN_SEPARATION = 500.0
PLACEMENT_ATTEMPTS_PER_NODE = 1000

EXIT_SUCCESS = 0
EXIT_FAILURE = 1
EXIT_REPAIR_INFEASIBLE = 2

# Benchmark cable sets (capacity in turbines, cost in M€/km), keyed by instance number.
BENCHMARK_CATALOGS = {
    1: [(7, 0.37), (11, 0.39), (13, 0.43)],
    2: [(7, 0.44), (12, 0.45)],
    3: [(10, 0.44), (14, 0.62)],
    4: [(5, 0.41), (10, 0.61)],
    5: [(4, 0.38), (9, 0.63)],
    6: [(4, 0.37), (6, 0.39), (8, 0.43)],
    7: [(6, 0.44), (8, 0.62)],
    8: [(7, 0.38), (15, 0.63)],
    9: [(7, 0.44), (10, 0.62)],
    10: [(7, 0.37), (11, 0.39), (13, 0.43)],
    11: [(4, 0.38), (9, 0.63)],
}
