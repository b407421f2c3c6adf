"""Environment variables configuration."""
import os
from dotenv import load_dotenv

load_dotenv()

# Reproducibility
SEED = int(os.getenv("ASIANHEDGE_SEED", "20240101"))
STREAM_CHUNK = int(os.getenv("ASIANHEDGE_STREAM_CHUNK", "8192"))

# Parallelism
THREADS = int(os.getenv("ASIANHEDGE_THREADS", str(os.cpu_count() or 1)))

# Output
OUT_DIR = os.getenv("ASIANHEDGE_OUT_DIR", "results")
LOG_LEVEL = os.getenv("ASIANHEDGE_LOG_LEVEL", "INFO").upper()
PAPER_SCALE = os.getenv("ASIANHEDGE_PAPER_SCALE", "False").lower() == "true"

# Sample counts (desk scale and paper scale)
DESK_SAMPLES = 100_000
DESK_POOL_SIZE = 20_000
DESK_PATHS = 1000
PAPER_SAMPLES = 500_000
PAPER_POOL_SIZE = 100_000
PAPER_PATHS = 1000
