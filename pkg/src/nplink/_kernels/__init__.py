"""Hot kernels, compiled when available.

The Cython extension ``_ext`` is preferred; the pure-Python module is used when
it is missing or when ``NPLINK_PURE=1`` is set in the environment.
"""

import os

from . import _pure

BACKEND = "pure"
_impl = _pure

if os.environ.get("NPLINK_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ext as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:
        _impl = _pure

FIELD_BITS = _pure.FIELD_BITS
SMOOTH_RADIUS = _pure.SMOOTH_RADIUS
pack = _pure.pack
unpack = _pure.unpack
cell_l1 = _pure.cell_l1
log_bin = _pure.log_bin

tv_normal_moments = _impl.tv_normal_moments
tv_posterior = _impl.tv_posterior
smoothed = _impl.smoothed
cube_distance = _impl.cube_distance
cube_distances = _impl.cube_distances
cell_values = _impl.cell_values
pair_cells = _impl.pair_cells


def backends():
    """Available kernel modules keyed by name, for tests and benchmarks."""
    found = {"pure": _pure}
    try:
        from . import _ext
        found["cython"] = _ext
    except ImportError:
        pass
    return found
