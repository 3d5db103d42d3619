"""Kernel backend selection.

The compiled extension is used when it imports cleanly; otherwise the numpy
implementation takes over. Set ``TDLAB_BACKEND=python`` to force the fallback.
"""

import os

from . import _kernels_py

NAME = "python"
kernels = _kernels_py

if os.environ.get("TDLAB_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        kernels = _compiled
        NAME = "compiled"


def forward(values, sizes, X):
    return kernels.forward(values, sizes, X)


def backward(values, sizes, X, G):
    return kernels.backward(values, sizes, X, G)
