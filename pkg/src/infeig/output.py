"""Deterministic CSV/JSON emission.

Reruns with identical config must produce byte-identical data files, so
floats are formatted to 17 significant digits and timestamps never enter
data files (run metadata carries them separately).
"""

from __future__ import annotations

import json
import os
import time


def fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return "%.17g" % x
    return str(x)


def json_text(obj) -> str:
    """Canonical JSON with %.17g floats (insertion order preserved)."""
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, float):
        if obj != obj or obj in (float("inf"), float("-inf")):
            return "null"
        return "%.17g" % obj
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {json_text(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(json_text(v) for v in obj) + "]"
    try:
        return json_text(float(obj))
    except (TypeError, ValueError):
        return json.dumps(str(obj))


def write_json(path: str, obj) -> None:
    with open(path, "w") as f:
        f.write(json_text(obj))
        f.write("\n")


def write_csv(path: str, header, rows) -> None:
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(fmt(v) for v in row) + "\n")


def write_run_meta(out_dir: str, subcommand: str, raw_config: dict) -> None:
    """Timestamped sidecar; deliberately separate from the data files."""
    meta = {
        "subcommand": subcommand,
        "written_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "config": {k: v for k, v in sorted(raw_config.items())},
    }
    write_json(os.path.join(out_dir, "run_meta.json"), meta)


def field_rows(grid, values, column: str):
    """CSV rows (index, x, y, <column>) for a nodal field; y = 0 in 1D."""
    for i in range(grid.n_active):
        x = float(grid.nodes[i, 0])
        y = float(grid.nodes[i, 1]) if grid.dim == 2 else 0.0
        yield i, x, y, float(values[i])
