"""
Config Parser Module

Reads and writes the flat ``key = value`` text format shared by run configs
and run manifests. Lines starting with ``#`` and blank lines are ignored.
"""

import logging
from typing import Dict, Mapping

from utils.exceptions import ConfigError

logger = logging.getLogger(__name__)


def parse_key_value_text(text: str) -> Dict[str, str]:
    """Parse ``key = value`` lines.

    Args:
        text: File contents

    Returns:
        Ordered mapping of keys to raw string values

    Raises:
        ConfigError: on malformed or duplicated lines
    """
    entries: Dict[str, str] = {}
    bad_keys = []
    details = []

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith('#'):
            continue
        if '=' not in line:
            bad_keys.append(f"line {lineno}")
            details.append(f"line {lineno}: expected 'key = value'")
            continue

        key, value = line.split('=', 1)
        key = key.strip()
        # Inline comments are allowed after the value
        value = value.split('#', 1)[0].strip()
        if not key:
            bad_keys.append(f"line {lineno}")
            details.append(f"line {lineno}: empty key")
            continue
        if key in entries:
            bad_keys.append(key)
            details.append(f"{key}: duplicated on line {lineno}")
            continue
        entries[key] = value

    if bad_keys:
        raise ConfigError(bad_keys, details)
    return entries


def parse_key_value_file(path: str) -> Dict[str, str]:
    """Read and parse a key-value file from disk."""
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            text = handle.read()
    except OSError as e:
        raise ConfigError(['<file>'], [f"cannot read {path}: {e}"]) from e

    entries = parse_key_value_text(text)
    logger.debug(f"Parsed {len(entries)} keys from {path}")
    return entries


def render_key_value_text(entries: Mapping[str, str]) -> str:
    """Render a mapping as ``key = value`` lines in insertion order."""
    return ''.join(f"{key} = {value}\n" for key, value in entries.items())
