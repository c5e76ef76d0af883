# kinkstats/utils/changelog.py
import logging
import re
from pathlib import Path

log = logging.getLogger(__name__)

UNKNOWN = ("0.0.0", "Unknown Date")
VERSION_HEADER = re.compile(r"^## \[(?P<version>[^\]]+)\] - (?P<date>\d{4}-\d{2}-\d{2})", re.MULTILINE)
_CANDIDATES = (
    Path(__file__).resolve().parents[2] / "CHANGELOG.md",
    Path("CHANGELOG.md"),
)


def _locate(changelog_path):
    if changelog_path is not None:
        return Path(changelog_path)
    return next((path for path in _CANDIDATES if path.exists()), _CANDIDATES[0])


def get_latest_version_info(changelog_path=None):
    """(version, date) of the topmost release header, or UNKNOWN."""
    path = _locate(changelog_path)
    if not path.is_file():
        return UNKNOWN
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        log.warning(f"⚠️ Could not read {path.name}: {e}")
        return UNKNOWN

    match = VERSION_HEADER.search(text)
    return (match["version"], match["date"]) if match else UNKNOWN
