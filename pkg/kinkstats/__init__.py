import dataclasses
import datetime
import enum
import json
import logging

import numpy as np

# Preserve the changelog-driven version; fallback if the file layout is unusual
try:
    from kinkstats.utils.changelog import get_latest_version_info
except ImportError:
    def get_latest_version_info():
        return "0.0.0", datetime.date.today().isoformat()

LOG_FORMAT = '[%(asctime)s] %(levelname)s in %(module)s: %(message)s'


class CustomJSONEncoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, enum.Enum):
            return o.value
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, complex):
            return {"re": o.real, "im": o.imag}
        if dataclasses.is_dataclass(o) and not isinstance(o, type):
            return dataclasses.asdict(o)
        return super().default(o)


def dumps(obj, **kwargs):
    """Deterministic JSON: sorted keys, shortest round-trip floats."""
    kwargs.setdefault("sort_keys", True)
    kwargs.setdefault("indent", 2)
    return json.dumps(obj, cls=CustomJSONEncoder, **kwargs)


def configure_logging(level="INFO"):
    # --- LOGGING CONFIGURATION ---
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format=LOG_FORMAT,
        force=True
    )


def artifact_version():
    version, _ = get_latest_version_info()
    return version
