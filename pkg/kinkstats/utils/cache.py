# kinkstats/utils/cache.py
import hashlib
import json
import logging
import os
import tempfile
from pathlib import Path

from .. import dumps
from ..errors import CacheCorruptionError
from ..models import Method, Pairing, SweepRow

log = logging.getLogger(__name__)


def _canonical(obj):
    return dumps(obj, indent=None, separators=(",", ":"))


def content_hash(obj):
    return hashlib.sha256(_canonical(obj).encode("utf-8")).hexdigest()


class RowCache:
    """
    One JSON file per sweep row, named by the content hash of everything that
    determines the row. Each file also stores a digest of its own row, so a
    truncated or edited entry is detected and recomputed.
    """

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.hits = 0
        self.misses = 0

    @staticmethod
    def key_for(params, tau_Q, method, qmax, pairing=Pairing.INDEPENDENT, solver=None, start_factor=1.0):
        method = Method(method)
        return {
            **params.as_dict(),
            "tau_Q": float(tau_Q),
            "method": method.value,
            "qmax": int(qmax),
            "pairing": Pairing(pairing).value,
            # The LZ closed form ignores solver settings and the start time
            "solver": solver.cache_token() if method is Method.ODE and solver else None,
            "start_factor": float(start_factor) if method is Method.ODE else None,
        }

    def path_for(self, key):
        return self.directory / f"{content_hash(key)}.json"

    def __contains__(self, key):
        return self.path_for(key).exists()

    def _read(self, path, key):
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
            row = payload["row"]
            stored_key = payload["key"]
            digest = payload["digest"]
        except (OSError, ValueError, KeyError, TypeError) as e:
            raise CacheCorruptionError(f"Unreadable cache entry {path.name}: {e}")

        if stored_key != key or digest != content_hash(row):
            raise CacheCorruptionError(f"Hash mismatch in cache entry {path.name}")
        try:
            return SweepRow.from_dict(row)
        except (KeyError, ValueError) as e:
            raise CacheCorruptionError(f"Invalid row in cache entry {path.name}: {e}")

    def get(self, key):
        """The cached row, or None when missing or corrupt (corrupt files are removed)."""
        path = self.path_for(key)
        if not path.exists():
            self.misses += 1
            return None
        try:
            row = self._read(path, key)
        except CacheCorruptionError as e:
            log.warning(f"♻️ {e}; recomputing")
            path.unlink(missing_ok=True)
            self.misses += 1
            return None
        self.hits += 1
        return row

    def put(self, key, row):
        """Write-temp-then-rename so readers never see a partial file."""
        data = row.as_dict()
        payload = {"key": key, "row": data, "digest": content_hash(data)}
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".row-", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
                f.write(dumps(payload))
            os.replace(tmp, self.path_for(key))
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
