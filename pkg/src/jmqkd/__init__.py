"""Joint-measurability thresholds and key-rate upper bounds for lossy, noisy measurement devices."""
from ._kernels import HAVE_NUMBA

__version__ = "0.1.0"
