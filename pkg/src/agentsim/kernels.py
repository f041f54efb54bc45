"""Select the compiled kernels when built, the pure-Python ones otherwise.

Set AGENTSIM_PURE_PYTHON=1 to force the interpreter implementation (used
by the equivalence tests and the kernel benchmark). Both implementations
are bit-identical; only speed differs.
"""

import os

from . import _kernels_py

if os.environ.get("AGENTSIM_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

IMPL = _impl.IMPL
earliest_feasible_start = _impl.earliest_feasible_start
best_pairs = _impl.best_pairs
best_decode_starts = _impl.best_decode_starts
