"""Backend selection for the hot kernels.

The compiled ``_core`` extension is used when importable; otherwise, or when
the environment variable ``POISSON_LAB_PURE`` is set to a non-empty value
other than ``0``, the numpy implementation in ``_purepy`` is used.
"""

import os

from . import _purepy

if os.environ.get("POISSON_LAB_PURE", "0") not in ("", "0"):
    _impl = _purepy
else:
    try:
        from . import _core as _impl
    except ImportError:  # extension not built
        _impl = _purepy

BACKEND = _impl.BACKEND

philox4x32 = _impl.philox4x32
uniforms = _impl.uniforms
uniform_pairs = _impl.uniform_pairs
sample_rows = _impl.sample_rows
segment_sums = _impl.segment_sums
window_max = _impl.window_max
window_max_rows = _impl.window_max_rows
poisson_binomial = _impl.poisson_binomial
geometric_convolve = _impl.geometric_convolve


def compiled_available():
    try:
        from . import _core  # noqa: F401
    except ImportError:
        return False
    return True
