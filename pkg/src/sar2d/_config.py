"""Runtime switches read from the environment.

``SAR2D_DISABLE_NUMBA=1`` forces the pure numpy kernels.
``SAR2D_WORKERS`` sets the Monte Carlo thread pool size (default 1).
"""
import os

G_TABLE_MAX_ENTRIES = 64 * 1024 * 1024
MA_MAX_SITES = 10_000
CLOSED_FORM_MAX_ORDER = 60
BINOM_LOGSPACE_THRESHOLD = 500
RHO_MAX_K = 2000
DEFAULT_TOL = 1e-12
SINGULAR_RTOL = 1e-12


def _truthy(value):
    return value.strip().lower() not in ("", "0", "false", "no", "off")


def numba_disabled():
    """True when the numpy fallback kernels were requested."""
    return _truthy(os.environ.get("SAR2D_DISABLE_NUMBA", ""))


def worker_count(default=1):
    """Worker threads for replicate-level parallelism."""
    raw = os.environ.get("SAR2D_WORKERS", "")
    try:
        value = int(raw)
    except ValueError:
        return default
    return max(1, value)
