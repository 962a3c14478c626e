"""Backend selection for the layered value-iteration kernel.

The compiled Cython extension is preferred; the pure-Python module is the
fallback.  Set PRTSPACE_PURE_PYTHON=1 to force the fallback (used by the
benchmark and by tests that compare the two).
"""

import os

from . import _layered_py

if os.environ.get("PRTSPACE_PURE_PYTHON"):
    _impl = _layered_py
    BACKEND = "python"
else:
    try:
        from . import _layered_c as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = _layered_py
        BACKEND = "python"

layered_curve = _impl.layered_curve
pure_python_curve = _layered_py.layered_curve


def compiled_curve():
    """The compiled kernel's entry point, or None when unavailable."""
    if BACKEND == "compiled":
        return _impl.layered_curve
    try:
        from . import _layered_c  # type: ignore[attr-defined]

        return _layered_c.layered_curve
    except ImportError:
        return None
