"""Hot loops in two interchangeable implementations.

Each kernel exists as a numba ``@njit`` function and as a vectorized numpy
function with the same signature. ``backend()`` returns whichever namespace
is active; setting ``SAR2D_DISABLE_NUMBA=1`` (or lacking numba) selects
numpy. The simulate and G-table kernels evaluate every lattice update with
the same arithmetic ordering in both backends, so their outputs agree bit
for bit. The statistics kernel uses Kahan summation under numba and numpy's
pairwise ``sum`` otherwise, so those agree to rounding only.
"""
from types import SimpleNamespace

import numpy as np
from scipy.signal import lfilter

from ._config import numba_disabled

try:
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

# column layout of the statistics array produced by ``accumulate_batch``
STAT_NAMES = (
    "b_uu", "b_uv", "b_uw", "b_vv", "b_vw", "b_ww",
    "y_u", "y_v", "y_w", "y_y",
    "s1", "s2", "s3", "s4", "s5",
    "a_u", "a_v", "a_w",
)
NSTAT = len(STAT_NAMES)
STAT = {name: i for i, name in enumerate(STAT_NAMES)}

# values below this are flushed to zero in the rho streams; keeps the
# recursion away from subnormal arithmetic, which is ~100x slower
_FLUSH = 1e-300


# ---------------------------------------------------------------- numpy ---

def _diag_indices(d, n, m):
    ks = np.arange(max(1, d - m), min(n, d - 1) + 1)
    return ks, d - ks


def simulate_batch_np(a, b, c, eps):
    """Run the AR recursion for a stack of noise arrays.

    Parameters
    ----------
    a, b, c : float
        Coefficients on the (1,0), (0,1) and (1,1) lags.
    eps : ndarray, shape (R, n, m)
        Innovations; ``eps[r, k-1, l-1]`` drives site (k, l).

    Returns
    -------
    ndarray, shape (R, n+1, m+1)
        Fields with zero first row and column.
    """
    eps = np.asarray(eps, dtype=np.float64)
    R, n, m = eps.shape
    X = np.zeros((R, n + 1, m + 1))
    # sites on one anti-diagonal depend only on earlier diagonals
    for d in range(2, n + m + 1):
        ks, ls = _diag_indices(d, n, m)
        X[:, ks, ls] = (a * X[:, ks - 1, ls] + b * X[:, ks, ls - 1]
                        + c * X[:, ks - 1, ls - 1] + eps[:, ks - 1, ls - 1])
    return X


def g_table_np(a, b, c, M, N):
    """Impulse response G(m, n) for 0 <= m <= M, 0 <= n <= N."""
    P = np.zeros((M + 2, N + 2))
    P[1, 1] = 1.0
    for d in range(1, M + N + 1):
        ms = np.arange(max(0, d - N), min(M, d) + 1)
        ns = d - ms
        P[ms + 1, ns + 1] = (a * P[ms, ns + 1] + b * P[ms + 1, ns]
                             + c * P[ms, ns])
    return P[1:, 1:].copy()


def accumulate_batch_np(X, n, m, eps=None):
    """Sufficient statistics over the rectangle 1..n x 1..m.

    Parameters
    ----------
    X : ndarray, shape (R, N+1, M+1)
        Fields with N >= n and M >= m.
    n, m : int
        Rectangle extent.
    eps : ndarray, shape (R, >=n, >=m), optional
        Innovations; when omitted the ``a_*`` columns are zero.

    Returns
    -------
    ndarray, shape (R, NSTAT)
    """
    X = np.asarray(X, dtype=np.float64)
    y = X[:, 1:n + 1, 1:m + 1]
    u = X[:, 0:n, 1:m + 1]
    v = X[:, 1:n + 1, 0:m]
    w = X[:, 0:n, 0:m]
    dv = v - w
    du = u - w
    out = np.zeros((X.shape[0], NSTAT))
    ax = (1, 2)
    out[:, 0] = (u * u).sum(axis=ax)
    out[:, 1] = (u * v).sum(axis=ax)
    out[:, 2] = (u * w).sum(axis=ax)
    out[:, 3] = (v * v).sum(axis=ax)
    out[:, 4] = (v * w).sum(axis=ax)
    out[:, 5] = (w * w).sum(axis=ax)
    out[:, 6] = (y * u).sum(axis=ax)
    out[:, 7] = (y * v).sum(axis=ax)
    out[:, 8] = (y * w).sum(axis=ax)
    out[:, 9] = (y * y).sum(axis=ax)
    out[:, 10] = (dv * dv).sum(axis=ax)
    out[:, 11] = (du * du).sum(axis=ax)
    out[:, 12] = (dv * w).sum(axis=ax)
    out[:, 13] = (du * w).sum(axis=ax)
    out[:, 14] = (dv * du).sum(axis=ax)
    if eps is not None:
        e = np.asarray(eps, dtype=np.float64)[:, :n, :m]
        out[:, 15] = (e * u).sum(axis=ax)
        out[:, 16] = (e * v).sum(axis=ax)
        out[:, 17] = (e * w).sum(axis=ax)
    return out


def rho_rows_np(a, b, K, L):
    """Row sums of squared and crossed G differences on a face.

    With ``c = 1 - a - b``, ``d1(k,l) = G(k+1,l) - G(k,l)`` and
    ``d2(k,l) = G(k,l+1) - G(k,l)``, row ``k`` collects the sites
    ``0 <= l <= L``.

    Returns
    -------
    r11, r22, r12 : ndarray, shape (K+1,)
        Row sums of d1**2, d2**2 and d1*d2.
    """
    c = 1.0 - a - b
    r11 = np.zeros(K + 1)
    r22 = np.zeros(K + 1)
    r12 = np.zeros(K + 1)
    prev = lfilter([1.0], [1.0, -b], np.r_[1.0, np.zeros(L + 1)])
    prev[np.abs(prev) < _FLUSH] = 0.0
    for k in range(K + 1):
        drive = a * prev
        drive[1:] += c * prev[:-1]
        cur = lfilter([1.0], [1.0, -b], drive)
        cur[np.abs(cur) < _FLUSH] = 0.0
        d1 = cur[:L + 1] - prev[:L + 1]
        d2 = prev[1:] - prev[:-1]
        r11[k] = np.dot(d1, d1)
        r22[k] = np.dot(d2, d2)
        r12[k] = np.dot(d1, d2)
        prev = cur
    return r11, r22, r12


numpy_impl = SimpleNamespace(
    name="numpy",
    simulate_batch=simulate_batch_np,
    g_table=g_table_np,
    accumulate_batch=accumulate_batch_np,
    rho_rows=rho_rows_np,
)


# ---------------------------------------------------------------- numba ---

if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _simulate_nb(a, b, c, eps):
        R, n, m = eps.shape
        X = np.zeros((R, n + 1, m + 1))
        for r in range(R):
            for k in range(1, n + 1):
                for l in range(1, m + 1):
                    X[r, k, l] = (a * X[r, k - 1, l] + b * X[r, k, l - 1]
                                  + c * X[r, k - 1, l - 1] + eps[r, k - 1, l - 1])
        return X

    def simulate_batch_nb(a, b, c, eps):
        return _simulate_nb(float(a), float(b), float(c),
                            np.ascontiguousarray(eps, dtype=np.float64))

    @njit(cache=True, nogil=True)
    def _g_table_nb(a, b, c, M, N):
        P = np.zeros((M + 2, N + 2))
        for i in range(M + 1):
            for j in range(N + 1):
                if i == 0 and j == 0:
                    P[1, 1] = 1.0
                else:
                    P[i + 1, j + 1] = a * P[i, j + 1] + b * P[i + 1, j] + c * P[i, j]
        return P[1:, 1:].copy()

    def g_table_nb(a, b, c, M, N):
        return _g_table_nb(float(a), float(b), float(c), int(M), int(N))

    @njit(cache=True, nogil=True)
    def _accumulate_nb(X, n, m, eps, have_eps):
        R = X.shape[0]
        out = np.zeros((R, 18))
        acc = np.zeros(18)
        comp = np.zeros(18)
        term = np.zeros(18)
        for r in range(R):
            acc[:] = 0.0
            comp[:] = 0.0
            for k in range(1, n + 1):
                for l in range(1, m + 1):
                    y = X[r, k, l]
                    u = X[r, k - 1, l]
                    v = X[r, k, l - 1]
                    w = X[r, k - 1, l - 1]
                    dv = v - w
                    du = u - w
                    term[0] = u * u
                    term[1] = u * v
                    term[2] = u * w
                    term[3] = v * v
                    term[4] = v * w
                    term[5] = w * w
                    term[6] = y * u
                    term[7] = y * v
                    term[8] = y * w
                    term[9] = y * y
                    term[10] = dv * dv
                    term[11] = du * du
                    term[12] = dv * w
                    term[13] = du * w
                    term[14] = dv * du
                    if have_eps:
                        e = eps[r, k - 1, l - 1]
                        term[15] = e * u
                        term[16] = e * v
                        term[17] = e * w
                    else:
                        term[15] = 0.0
                        term[16] = 0.0
                        term[17] = 0.0
                    for i in range(18):
                        yk = term[i] - comp[i]
                        t = acc[i] + yk
                        comp[i] = (t - acc[i]) - yk
                        acc[i] = t
            out[r, :] = acc
        return out

    def accumulate_batch_nb(X, n, m, eps=None):
        X = np.ascontiguousarray(X, dtype=np.float64)
        if eps is None:
            return _accumulate_nb(X, int(n), int(m), np.zeros((1, 1, 1)), False)
        eps = np.ascontiguousarray(eps, dtype=np.float64)
        return _accumulate_nb(X, int(n), int(m), eps, True)

    @njit(cache=True, nogil=True)
    def _rho_rows_nb(a, b, K, L):
        c = 1.0 - a - b
        r11 = np.zeros(K + 1)
        r22 = np.zeros(K + 1)
        r12 = np.zeros(K + 1)
        prev = np.zeros(L + 2)
        cur = np.zeros(L + 2)
        prev[0] = 1.0
        for j in range(1, L + 2):
            x = b * prev[j - 1]
            prev[j] = x if abs(x) >= 1e-300 else 0.0
        for k in range(K + 1):
            x = a * prev[0]
            cur[0] = x if abs(x) >= 1e-300 else 0.0
            for j in range(1, L + 2):
                x = a * prev[j] + b * cur[j - 1] + c * prev[j - 1]
                cur[j] = x if abs(x) >= 1e-300 else 0.0
            t11 = 0.0
            t22 = 0.0
            t12 = 0.0
            for l in range(L + 1):
                d1 = cur[l] - prev[l]
                d2 = prev[l + 1] - prev[l]
                t11 += d1 * d1
                t22 += d2 * d2
                t12 += d1 * d2
            r11[k] = t11
            r22[k] = t22
            r12[k] = t12
            for j in range(L + 2):
                prev[j] = cur[j]
        return r11, r22, r12

    def rho_rows_nb(a, b, K, L):
        return _rho_rows_nb(float(a), float(b), int(K), int(L))

    numba_impl = SimpleNamespace(
        name="numba",
        simulate_batch=simulate_batch_nb,
        g_table=g_table_nb,
        accumulate_batch=accumulate_batch_nb,
        rho_rows=rho_rows_nb,
    )
else:  # pragma: no cover
    numba_impl = None


def backend():
    """Kernel namespace selected by the environment."""
    if numba_impl is None or numba_disabled():
        return numpy_impl
    return numba_impl
