"""Summary statistics over per-trial rows."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np


def summarize(rows: Sequence[dict], columns: Sequence[str]) -> dict:
    """Mean, standard error, min and max of each numeric column.

    Missing and non-finite entries are skipped; a column with no usable
    values is left out.
    """
    out = {}
    for col in columns:
        vals = np.array([r[col] for r in rows if r.get(col) is not None], dtype=float)
        vals = vals[np.isfinite(vals)]
        if len(vals) == 0:
            continue
        out[col] = {
            "mean": float(vals.mean()),
            "se": float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else None,
            "min": float(vals.min()),
            "max": float(vals.max()),
            "count": int(len(vals)),
        }
    return out
