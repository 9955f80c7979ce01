"""Backend selection: compiled stepping kernel when available, numpy otherwise.

Set ZERODEF_PURE_PYTHON=1 to force the numpy backend (used by the benchmark
and by tests that compare the two).
"""

import os

from . import purepy

if os.environ.get("ZERODEF_PURE_PYTHON"):
    backend = purepy
else:
    try:
        from . import speed as backend  # type: ignore[no-redef]
    except ImportError:
        backend = purepy

BACKEND_NAME = backend.NAME

__all__ = ["backend", "purepy", "BACKEND_NAME"]
