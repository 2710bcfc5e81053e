"""Kernel backend chosen at import time.

The compiled smoke kernel is used when the extension imports; otherwise, or
when ``OCBAS_PURE_PYTHON=1`` is set, the pure-Python one is used. The renewal
kernel always comes from ``_pykernels``: its inner loop is a convolution that
numpy already does at least as fast as the compiled loop (see
``benchmarks/bench_kernels.py``).
"""

from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("OCBAS_PURE_PYTHON") == "1":
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

renewal_counts = _pykernels.renewal_counts
smoke_response_times = _impl.smoke_response_times
