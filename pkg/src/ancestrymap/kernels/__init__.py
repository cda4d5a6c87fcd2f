"""Hot inner loops with two interchangeable backends.

``numba`` (default when importable) compiles the loops with ``@njit``;
``numpy`` is a vectorised pure-numpy path.  Set ``ANCESTRYMAP_NO_NUMBA=1``
to force the numpy path.  Both backends follow the same operation order
and tie rules, so they return identical results.

Exposed kernels:

``ward_linkage(coords)``
    primitive Ward agglomeration, returns the ``(n-1, 4)`` merge table.
``nearest_index(points, base)``
    index of the Euclidean-nearest base row for every point.
``min_cost_flow(cap, cost, source, sink, need)``
    successive shortest paths on a dense network.
"""

import importlib
import os

from . import numpy_impl

_NUMBA_DISABLED = os.environ.get("ANCESTRYMAP_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")

numba_impl = None
if not _NUMBA_DISABLED:
    try:
        numba_impl = importlib.import_module(".numba_impl", __name__)
    except ImportError:  # numba missing or broken
        numba_impl = None

BACKEND = "numba" if numba_impl is not None else "numpy"
_impl = numba_impl if numba_impl is not None else numpy_impl

ward_linkage = _impl.ward_linkage
nearest_index = _impl.nearest_index
min_cost_flow = _impl.min_cost_flow


def backends():
    """Available backend modules keyed by name."""
    out = {"numpy": numpy_impl}
    if numba_impl is not None:
        out["numba"] = numba_impl
    return out
