"""Line-delimited JSON records for protocol runs and attack reports.

The first line is a header ``{"schema": ..., "version": ..., ...}``; every
following line is one event record with an ``"event"`` field.  Keys are
sorted so two runs with the same seed serialise to identical bytes.

Event names: ``prepare``, ``send``, ``detect-sample``, ``detect-report``,
``encode``, ``measure``, ``announce``, ``sum``, ``abort``.
"""

from __future__ import annotations

import json
from typing import Any, Iterable

import numpy as np

TRANSCRIPT_SCHEMA = "qsms-transcript"
ATTACK_SCHEMA = "qsms-attack-report"
SCHEMA_VERSION = 1


def _plain(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):  # enums
        return obj.value
    return obj


def dumps_record(record: dict) -> str:
    return json.dumps(_plain(record), sort_keys=True, separators=(",", ":"))


def dumps(header: dict, records: Iterable[dict]) -> str:
    lines = [dumps_record(header)]
    lines.extend(dumps_record(r) for r in records)
    return "\n".join(lines) + "\n"


def loads(text: str) -> tuple[dict, list[dict]]:
    rows = [json.loads(line) for line in text.splitlines() if line.strip()]
    if not rows or "schema" not in rows[0]:
        raise ValueError("missing schema header line")
    header = rows[0]
    if header.get("version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {header.get('version')!r}")
    return header, rows[1:]
