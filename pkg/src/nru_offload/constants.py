"""Default parameters and numerical tolerances for the NR-U offloading engine."""

from pathlib import Path

# Deployment (heights in m, densities per m²)
DEFAULT_BS_DENSITY = 1e-4
DEFAULT_NRU_UE_DENSITY = 0.01
DEFAULT_WIGIG_UE_DENSITY = 0.1  # dense WiGig hotspot
DEFAULT_BLOCKER_DENSITY = 0.3
DEFAULT_BS_HEIGHT = 10.0
DEFAULT_AP_HEIGHT = 10.0
DEFAULT_UE_HEIGHT = 1.5
DEFAULT_BLOCKER_HEIGHT = 1.7
DEFAULT_BLOCKER_RADIUS = 0.2

# UMi street canyon propagation
LOS_PATHLOSS_EXPONENT = 2.1
BLOCKED_PATHLOSS_EXPONENT = 3.19
LOS_SHADOW_SIGMA_DB = 4.0
BLOCKED_SHADOW_SIGMA_DB = 8.2
PATHLOSS_INTERCEPT_DB = 32.4
MIN_PATHLOSS_DISTANCE = 1.0

# Antenna arrays
HPBW_NUMERATOR_DEG = 102.0

# Licensed NR band
NR_CARRIER_GHZ = 28.0
NR_BANDWIDTH_HZ = 400e6
NR_TX_POWER_DBM = 33.0
NR_TX_ELEMENTS = (64, 4)
NR_RX_ELEMENTS = (8, 4)
NR_OUTAGE_SINR_DB = -8.97

# Unlicensed WiGig band
WIGIG_CARRIER_GHZ = 60.0
WIGIG_BANDWIDTH_HZ = 2160e6
WIGIG_TX_POWER_DBM = 23.0
WIGIG_TX_ELEMENTS = (16, 4)
WIGIG_RX_ELEMENTS = (8, 4)
WIGIG_OUTAGE_SINR_DB = 1.0

# Shared radio defaults
NOISE_PSD_DBM_HZ = -174.0
INTERFERENCE_MARGIN_DB = 3.0
EDGE_OUTAGE_PROB = 0.05

# Traffic
DEFAULT_SESSION_RATE = 0.1  # sessions/s per active NR-U UE
DEFAULT_WIGIG_SESSION_RATE = 0.2  # sessions/s per active WiGig UE
DEFAULT_NRU_ACTIVE_PROB = 0.1
DEFAULT_WIGIG_ACTIVE_PROB = 0.1
DEFAULT_SERVICE_RATE = 0.1  # 1/s
DEFAULT_WIGIG_SERVICE_RATE = 0.1  # 1/s
DEFAULT_MIN_RATE = 100e6  # bit/s

# Listen-before-talk contention
DEFAULT_INITIAL_CW = 16
DEFAULT_MAX_RETRIES = 3
FIXED_POINT_TOLERANCE = 1e-10
FIXED_POINT_MAX_ITERATIONS = 10_000
FIXED_POINT_DAMPING = 0.5
FIXED_POINT_START = 0.1
FIXED_POINT_ATTEMPTS = 3
MIN_SUCCESS_PROBABILITY = 1e-12
POISSON_TRUNCATION_MASS = 1e-9
MAX_CW_SEARCH = 1024

# Licensed resource-loss queue
RESOURCE_UNIT_BW_HZ = 1.44e6  # one PRB at 120 kHz subcarrier spacing
STATIONARY_SIZE_GUARD = 10_000_000
CTMC_STATE_GUARD = 200_000

# Numerical tolerances
PMF_SUM_TOLERANCE = 1e-9
QUAD_REL_TOLERANCE = 1e-8
QUAD_ABS_TOLERANCE = 1e-8
ANTENNA_QUAD_ABS_TOLERANCE = 1e-10
FADING_SPAN_SIGMAS = 8.0
QUAD_SUBDIVISIONS = 200
CEIL_SLACK = 1e-9

# Sweeps
DEFAULT_SWEEP_DENSITIES = (6e-5, 8e-5, 1e-4, 1.2e-4, 1.4e-4, 1.6e-4, 1.8e-4, 2e-4)
DEFAULT_TARGET_LOSS = 0.05

# Simulation oracle
DEFAULT_SEED = 20_210_301
DEFAULT_EVENT_BUDGET = 200_000
DEFAULT_SLOT_BUDGET = 10_000_000
DEFAULT_BATCH_COUNT = 20
DEFAULT_CONFIDENCE = 0.95
LBT_MODEL_TOLERANCE = 0.02  # informational only

# Bundled data and output files
DATA_DIR = Path(__file__).parent / "data"
NR_MCS_TABLE = DATA_DIR / "nr_28ghz.mcs"
WIGIG_MCS_TABLE = DATA_DIR / "wigig_60ghz.mcs"
RESULTS_FILENAME = "results.csv"
VALIDATION_FILENAME = "validation.csv"
MANIFEST_FILENAME = "manifest.txt"
CSV_FLOAT_FORMAT = "%.12g"

# Environment overrides
ENV_PREFIX = "NRU_OFFLOAD_"
