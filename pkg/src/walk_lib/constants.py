import math

TOOL_VERSION = "0.1.0"
CONFIG_SCHEMA_VERSION = 1

INV_SQRT2 = 1.0 / math.sqrt(2.0)

UNITARITY_TOL = 1e-12
NORMALIZATION_TOL = 1e-12
DISTRIBUTION_SUM_TOL = 1e-10
NORM_DRIFT_PER_STEP = 1e-15
SPEED_LIMIT_SLACK = 1e-9
CHEBYSHEV_PROBE_VELOCITY = 0.5

# window bookkeeping of the evolution kernel
TRIM_EVERY_STEPS = 64

# finite-horizon estimators
MIN_BLOCKS_PER_SIDE = 8
Q_DIVERGENCE_THRESHOLD = 1e6
DEFAULT_N_RANGE = tuple(range(13))
DEFAULT_BOUND_HORIZON = 400

# dense oracle
SVD_MAX_DIM = 2048
POWER_ITERATION_TOL = 1e-13
POWER_ITERATION_MAX_STEPS = 5000
VELOCITY_SYMMETRY_TOL = 0.05
Q_BOUND_EPSILON = 0.05

# default initial-state family
PACKET_WIDTH = 16
PACKET_THETAS = (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4, math.pi)

# random suite
RANDOM_BLOCK_SIZE = 4096
COIN_STREAMS = {"c1": 1, "c2": 2}
MIN_GOOD_INDICES = 8
RATIO_TAIL_NO_CONCLUSION = 0.5
ECDF_GRID = (0.01, 0.05, 0.1)

# artifacts
VELOCITY_CSV = "velocity.csv"
DISTRIBUTION_CSV_PREFIX = "distribution"
EVOLVE_SUMMARY_JSON = "evolve_summary.json"
BOUNDS_JSON = "bounds.json"
BOUNDS_SWEEP_CSV = "bounds_sweep.csv"
RANDOM_SCAN_CSV = "random_scan.csv"
RANDOM_SUMMARY_JSON = "random_summary.json"
DENSE_LAB_JSON = "dense_lab.json"
VALIDATION_JSON = "validation.json"
MATRIX_CSV_PREFIX = "matrix"
