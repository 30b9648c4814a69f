"""Scheduling kernel selection.

Prefers the compiled Cython engine; falls back to the pure-Python one when
the extension is missing or PIMSYN_PURE_PYTHON=1 is set.  Both expose the
same ``schedule`` contract and produce identical results.
"""

import os

from . import engine_py

if os.environ.get("PIMSYN_PURE_PYTHON") == "1":
    engine = engine_py
    BACKEND = "python"
else:
    try:
        from . import engine_cy as engine  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:
        engine = engine_py
        BACKEND = "python"

schedule = engine.schedule

__all__ = ["schedule", "BACKEND", "engine_py"]
