"""Hot-kernel backend selection.

The compiled Cython extension is preferred when it was built; otherwise the
NumPy fallback is used. `KERNEL_BACKEND` reports which one is active so tests
and the benchmark can tell them apart.
"""
from . import _pure

try:
    from . import _fast as _impl
except ImportError:
    _impl = _pure

KERNEL_BACKEND = _impl.BACKEND

bracket_values = _impl.bracket_values
time_average_intensity = _impl.time_average_intensity

__all__ = ["KERNEL_BACKEND", "bracket_values", "time_average_intensity", "_pure"]
