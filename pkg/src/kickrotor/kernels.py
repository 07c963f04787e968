"""Backend selection for the hot kernels.

The compiled extension is used when it was built; otherwise the numpy
fallback is loaded. Set ``KICKROTOR_PURE=1`` to force the fallback.
"""
import os

from . import _kernels_py

if os.environ.get("KICKROTOR_PURE", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels_ext as _impl
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND = "compiled" if _impl is not _kernels_py else "python"

phase_multiply = _impl.phase_multiply
standard_map = _impl.standard_map
comb_power = _impl.comb_power
