"""Backend selection for the batch kernels.

The compiled extension is used when it was built; otherwise the numpy
implementation is loaded.  Set ``SMONEY_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

if os.environ.get("SMONEY_PURE_PYTHON"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

bb84_outcomes = _impl.bb84_outcomes
projective_outcomes = _impl.projective_outcomes
group_errors = _impl.group_errors
