"""Kernel backend selection: compiled extension if built, NumPy otherwise.

Set RATECORR_PURE_PYTHON=1 to force the fallback (used by the benchmark and
by tests comparing the two routes).  Both backends implement the same trial
kernels; a given backend is deterministic, but trajectories are not bit
identical across backends because summation orders differ.
"""

import os

_force_py = os.environ.get("RATECORR_PURE_PYTHON", "") not in ("", "0")

if _force_py:
    from . import _kernels_py as kernels
    COMPILED = False
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]
        COMPILED = True
    except ImportError:
        from . import _kernels_py as kernels
        COMPILED = False

BACKEND = "compiled" if COMPILED else "python"
