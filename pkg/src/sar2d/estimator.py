"""Least-squares estimation and its sufficient statistics.

With regressors ``z = (u, v, w) = (X[k-1,l], X[k,l-1], X[k-1,l-1])`` over the
rectangle ``1..n`` x ``1..m``:

* ``B = sum z z'`` and ``theta_hat = adj(B) sum X z / det(B)``;
* ``A = sum eps z`` (needs the innovations) and ``C = H A``;
* ``S1 = sum (v-w)^2``, ``S2 = sum (u-w)^2``, ``S3 = sum (v-w) w``,
  ``S4 = sum (u-w) w``, ``S5 = sum (v-w)(u-w)`` and ``T = sum w^2``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import _kernels
from ._config import SINGULAR_RTOL
from ._kernels import STAT
from .errors import DomainError, MissingNoise, SingularMatrix

H = np.array([[1.0, 0.0, -1.0], [0.0, 1.0, -1.0]])


@dataclass(frozen=True, eq=False)
class Accumulators:
    """Sufficient statistics of one field over one rectangle."""

    n: int
    m: int
    B: np.ndarray
    xy: np.ndarray
    yy: float
    s: np.ndarray
    A: Optional[np.ndarray] = None

    @property
    def T(self) -> float:
        return float(self.B[2, 2])

    @property
    def s1(self):
        return float(self.s[0])

    @property
    def s2(self):
        return float(self.s[1])

    @property
    def s3(self):
        return float(self.s[2])

    @property
    def s4(self):
        return float(self.s[3])

    @property
    def s5(self):
        return float(self.s[4])


def stats_to_accumulators(row, n, m, with_noise=False) -> Accumulators:
    """Unpack one row of the kernel statistics array."""
    r = np.asarray(row, dtype=np.float64)
    B = np.array([[r[STAT["b_uu"]], r[STAT["b_uv"]], r[STAT["b_uw"]]],
                  [r[STAT["b_uv"]], r[STAT["b_vv"]], r[STAT["b_vw"]]],
                  [r[STAT["b_uw"]], r[STAT["b_vw"]], r[STAT["b_ww"]]]])
    xy = r[[STAT["y_u"], STAT["y_v"], STAT["y_w"]]].copy()
    s = r[[STAT["s1"], STAT["s2"], STAT["s3"], STAT["s4"], STAT["s5"]]].copy()
    A = r[[STAT["a_u"], STAT["a_v"], STAT["a_w"]]].copy() if with_noise else None
    return Accumulators(int(n), int(m), B, xy, float(r[STAT["y_y"]]), s, A)


def _rect(field, rect):
    if rect is None:
        return field.n, field.m
    n, m = (int(v) for v in rect)
    if not (0 <= n <= field.n and 0 <= m <= field.m):
        raise DomainError(f"rectangle {rect} exceeds field {field.n}x{field.m}")
    return n, m


def accumulate(field, rect=None) -> Accumulators:
    """Statistics of ``field`` over ``1..n`` x ``1..m`` (default: whole field)."""
    n, m = _rect(field, rect)
    row = _kernels.backend().accumulate_batch(field.x[None], n, m)[0]
    return stats_to_accumulators(row, n, m)


def accumulate_with_noise(field, eps, rect=None) -> Accumulators:
    """As :func:`accumulate`, also forming ``A = sum eps z``."""
    n, m = _rect(field, rect)
    e = getattr(eps, "eps", eps)
    e = np.asarray(e, dtype=np.float64)
    if e.ndim != 2 or e.shape[0] < n or e.shape[1] < m:
        raise DomainError(f"noise of shape {e.shape} does not cover {n}x{m}")
    row = _kernels.backend().accumulate_batch(field.x[None], n, m, e[None])[0]
    return stats_to_accumulators(row, n, m, with_noise=True)


def c_stat(acc: Accumulators) -> np.ndarray:
    """``C = (A1 - A3, A2 - A3)``."""
    if acc.A is None:
        raise MissingNoise("C statistic needs accumulators built with the noise")
    return H @ acc.A


# ------------------------------------------------------------ 3x3 algebra ---

def adjugate3(M) -> np.ndarray:
    """Transpose of the cofactor matrix of a 3x3 array (batched over leading axes)."""
    M = np.asarray(M, dtype=np.float64)
    a, b, c = M[..., 0, 0], M[..., 0, 1], M[..., 0, 2]
    d, e, f = M[..., 1, 0], M[..., 1, 1], M[..., 1, 2]
    g, h, i = M[..., 2, 0], M[..., 2, 1], M[..., 2, 2]
    out = np.empty(M.shape)
    out[..., 0, 0] = e * i - f * h
    out[..., 0, 1] = c * h - b * i
    out[..., 0, 2] = b * f - c * e
    out[..., 1, 0] = f * g - d * i
    out[..., 1, 1] = a * i - c * g
    out[..., 1, 2] = c * d - a * f
    out[..., 2, 0] = d * h - e * g
    out[..., 2, 1] = b * g - a * h
    out[..., 2, 2] = a * e - b * d
    return out


def det3(M, adj=None):
    """Determinant by first-row cofactor expansion."""
    M = np.asarray(M, dtype=np.float64)
    if adj is None:
        adj = adjugate3(M)
    return (M[..., 0, 0] * adj[..., 0, 0] + M[..., 0, 1] * adj[..., 1, 0]
            + M[..., 0, 2] * adj[..., 2, 0])


def _singular(det, B):
    norm = np.sqrt(np.sum(B * B, axis=(-2, -1)))
    return ~(np.abs(det) > SINGULAR_RTOL * norm ** 3)


def det_identity(acc: Accumulators) -> Tuple[float, float]:
    """``det(B)`` computed directly and from the S/T combination."""
    lhs = float(det3(acc.B))
    s1, s2, s3, s4, s5 = (float(v) for v in acc.s)
    T = acc.T
    rhs = s1 * s2 * T + 2 * s5 * s3 * s4 - s5 * s5 * T - s1 * s4 * s4 - s2 * s3 * s3
    return lhs, rhs


@dataclass(frozen=True, eq=False)
class Estimate:
    theta_hat: np.ndarray
    det_b: float
    adj_b: np.ndarray
    residual_ss: float

    def to_json(self, n: int, m: int) -> str:
        return json.dumps({"theta_hat": [float(v) for v in self.theta_hat],
                           "det_b": float(self.det_b), "n": int(n), "m": int(m)})


def lse(acc: Accumulators, response=None) -> Estimate:
    """Least-squares estimate ``adj(B) sum X z / det(B)``.

    The response sums are already part of ``acc``; passing the field is
    optional and only checked for shape consistency.

    Raises
    ------
    SingularMatrix
        If ``|det B| <= 1e-12 ||B||_F^3``.
    """
    if response is not None and (response.n < acc.n or response.m < acc.m):
        raise DomainError("response field smaller than the accumulated rectangle")
    adj = adjugate3(acc.B)
    det = float(det3(acc.B, adj))
    if _singular(det, acc.B):
        raise SingularMatrix(f"det(B)={det:g} is numerically zero")
    theta = adj @ acc.xy / det
    rss = acc.yy - 2 * theta @ acc.xy + theta @ acc.B @ theta
    return Estimate(theta, det, adj, float(max(rss, 0.0)))


def lse_batch(stats: np.ndarray):
    """Vectorized estimator over rows of the kernel statistics array.

    Returns
    -------
    theta : ndarray, shape (R, 3)
        NaN rows where ``B`` is singular.
    det : ndarray, shape (R,)
    singular : ndarray of bool, shape (R,)
    """
    s = np.asarray(stats)
    B = np.empty((s.shape[0], 3, 3))
    idx = (("b_uu", "b_uv", "b_uw"), ("b_uv", "b_vv", "b_vw"), ("b_uw", "b_vw", "b_ww"))
    for i in range(3):
        for j in range(3):
            B[:, i, j] = s[:, STAT[idx[i][j]]]
    xy = s[:, [STAT["y_u"], STAT["y_v"], STAT["y_w"]]]
    adj = adjugate3(B)
    det = det3(B, adj)
    singular = _singular(det, B)
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = np.einsum("rij,rj->ri", adj, xy) / det[:, None]
    theta[singular] = np.nan
    return theta, det, singular
