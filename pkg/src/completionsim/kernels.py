"""Backend selection for the hot loops.

The compiled extension is preferred; the numpy implementation is used when
the extension failed to build or ``COMPLETIONSIM_PURE`` is set.
"""
import os

from . import _pykernels as pure

BACKEND = "python"
_impl = pure

if not os.environ.get("COMPLETIONSIM_PURE"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = pure

lost_indices = _impl.lost_indices
count_losses = _impl.count_losses
intact_messages = _impl.intact_messages
ecmp_max_units = _impl.ecmp_max_units

__all__ = [
    "BACKEND",
    "count_losses",
    "ecmp_max_units",
    "intact_messages",
    "lost_indices",
    "pure",
]
