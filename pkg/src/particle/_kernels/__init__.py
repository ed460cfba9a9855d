"""Kernel backend selection: compiled Cython core with pure-numpy fallback.

Set ``PARTICLE_PURE_KERNELS=1`` to force the fallback (used by the kernel
benchmark and by tests that compare the two backends).
"""

import os

from . import pure

if os.environ.get("PARTICLE_PURE_KERNELS") == "1":
    _impl = pure
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = pure

BACKEND = _impl.BACKEND
lloyd = _impl.lloyd
fh_segment_grid = _impl.fh_segment_grid

__all__ = ["BACKEND", "lloyd", "fh_segment_grid", "pure"]
