"""Kernel backend selection.

``HYPERHEAT_BACKEND=numpy`` forces the pure-numpy kernels;
``HYPERHEAT_BACKEND=numba`` forces the jitted ones (import error if numba
is missing).  Default: numba when importable, numpy otherwise.
"""

from __future__ import annotations

import os

_CHOICE = os.environ.get("HYPERHEAT_BACKEND", "").strip().lower()

if _CHOICE == "numpy":
    from . import _kernels_numpy as kernels
elif _CHOICE == "numba":
    from . import _kernels_numba as kernels
elif _CHOICE == "":
    try:
        from . import _kernels_numba as kernels
    except ImportError:  # pragma: no cover
        from . import _kernels_numpy as kernels
else:  # pragma: no cover
    raise ValueError(
        f"HYPERHEAT_BACKEND={_CHOICE!r}: expected 'numba' or 'numpy'"
    )


def backend_name() -> str:
    return kernels.BACKEND_NAME
