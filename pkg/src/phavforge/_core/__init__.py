"""Numeric kernels with a compiled backend and a pure-Python fallback.

The compiled extension is used when it was built and importable; setting
``PHAVFORGE_PURE=1`` forces the fallback. Both backends return identical
results.
"""

import os

from phavforge._core import _fallback

OK = 0
DIVERGED = 1

if os.environ.get("PHAVFORGE_PURE"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from phavforge._core import _kernels as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

triangular_icdf = _impl.triangular_icdf
integrate_kite = _impl.integrate_kite

__all__ = ["BACKEND", "OK", "DIVERGED", "triangular_icdf", "integrate_kite"]
