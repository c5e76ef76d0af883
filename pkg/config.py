import os
from dotenv import load_dotenv

load_dotenv()


class Config:
    # --- STORAGE ---
    CACHE_DIR = os.environ.get('KINKSTATS_CACHE_DIR', '.kinkstats-cache')
    OUTPUT_DIR = os.environ.get('KINKSTATS_OUTPUT_DIR', 'output')

    # --- RUNTIME ---
    LOG_LEVEL = os.environ.get('KINKSTATS_LOG_LEVEL', 'INFO')
    WORKERS = int(os.environ.get('KINKSTATS_WORKERS', 1))

    if WORKERS < 1:
        raise RuntimeError("CRITICAL: KINKSTATS_WORKERS must be >= 1")
