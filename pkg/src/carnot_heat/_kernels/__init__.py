"""Hot lattice kernels.

The compiled Cython module is used when it was built; otherwise the NumPy
implementation is imported. Set ``CARNOT_HEAT_PURE_PYTHON=1`` to force the
fallback.
"""

import os

from . import _pykernels as python_backend

compiled_backend = None
if not os.environ.get("CARNOT_HEAT_PURE_PYTHON"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

_active = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if _active is compiled_backend else "python"

interp_periodic = _active.interp_periodic
convolve_group = _active.convolve_group
apply_field = _active.apply_field


def backends():
    """Available backend modules keyed by name."""
    out = {"python": python_backend}
    if compiled_backend is not None:
        out["cython"] = compiled_backend
    return out
