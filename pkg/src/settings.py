"""
Environment-driven settings for ZFStats.
"""
import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Output
OUTPUT_DIR = os.environ.get("ZFSTATS_OUTPUT_DIR", "results")

# Parallelism: campaign cells (M, drop) are spread over this many threads
WORKERS = int(os.environ.get("ZFSTATS_WORKERS", str(os.cpu_count() or 1)))

# Absolute tolerance of the outage quadrature
QUAD_TOL = float(os.environ.get("ZFSTATS_QUAD_TOL", "1e-8"))

# Desk-scale Monte Carlo protocol; the full protocol is 200 drops x 1000 fadings
DEFAULT_DROPS = int(os.environ.get("ZFSTATS_DROPS", "50"))
DEFAULT_FADINGS = int(os.environ.get("ZFSTATS_FADINGS", "200"))
DEFAULT_ANTENNA_SWEEP = (12, 20, 40)
DEFAULT_SEED = 20180101

# Outage
RATE_GRID_POINTS = 40
OUTAGE_SPAN = (0.01, 0.99)
KS_SIGNIFICANCE = 0.05

FULL_PROTOCOL = {
    "drops": 200,
    "fadings": 1000,
}
