"""Hot-loop kernels, compiled when available.

The Cython extension ``_ckernels`` is used if it was built; otherwise the
numpy versions in ``_pykernels`` are used. Set ``DDIGRAPH_PURE_PYTHON=1``
to force the fallback.
"""

import os

import numpy as np

from ddigraph import _pykernels

BACKEND = "python"
_impl = _pykernels
if os.environ.get("DDIGRAPH_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from ddigraph import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels


def neighbor_sum(reps, neighbors):
    return _impl.neighbor_sum(
        np.ascontiguousarray(reps, dtype=np.float64),
        np.ascontiguousarray(neighbors, dtype=np.int64),
    )


def masked_rowmax(mat, row_mask, col_mask):
    return _impl.masked_rowmax(
        np.ascontiguousarray(mat, dtype=np.float64),
        np.ascontiguousarray(row_mask, dtype=np.float64),
        np.ascontiguousarray(col_mask, dtype=np.float64),
    )
