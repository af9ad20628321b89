"""Limit objects for the least-squares estimator on the unit-root boundary.

Faces (F+): rate ``(nm)^(1/2)`` and covariance ``H' K^-1 H``.
Edges (E1, E2): rate ``(nm)^(1/2)`` and covariance ``adj(Sigma)``.
Vertices: rate ``(nm)^(3/4)`` and covariance ``Theta``.
The F-, E3, stable and outside regions are reported as unsupported.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate
from scipy.special import zeta

from . import _kernels
from ._config import RHO_MAX_K
from .covariance import face_canonical
from .errors import DomainError, NonConvergence
from .estimator import H, adjugate3
from .params import Params, RegionClass, RegionTag, canonicalize, classify


# ---------------------------------------------------------------- sigma ---

def _check_ab(alpha, beta):
    a, b = abs(alpha), abs(beta)
    if not (a < 1 and b < 1):
        raise DomainError("need |alpha|, |beta| < 1")
    if a + b == 0:
        raise DomainError("need |alpha| + |beta| > 0")
    return a, b


def sigma_sq(alpha: float, beta: float) -> float:
    """Scale of ``n^(-5/2) B_n`` on a face.

    Examples
    --------
    >>> round(sigma_sq(0.5, 0.5), 6)
    0.851077
    """
    a, b = _check_ab(alpha, beta)
    hi, lo = max(a, b), min(a, b)
    root = math.sqrt((1 - hi) / (math.pi * (a + b)))
    return 2.0 / 3.0 * root * (1 / ((1 - a) * (1 - b)) - 1 / (5 * (1 - lo) ** 2))


def sigma_sq_integral(alpha: float, beta: float) -> float:
    """``sigma_sq`` by 2-D quadrature of ``min(sqrt((1-a)s), sqrt((1-b)t))``."""
    a, b = _check_ab(alpha, beta)

    def inner(s):
        # the minimum switches branch at t = (1-a)s/(1-b)
        cut = min((1 - a) * s / (1 - b), 1.0)
        left = integrate.quad(lambda t: math.sqrt((1 - b) * t), 0.0, cut,
                              epsabs=1e-14, epsrel=1e-13)[0]
        right = integrate.quad(lambda t: math.sqrt((1 - a) * s), cut, 1.0,
                               epsabs=1e-14, epsrel=1e-13)[0]
        return left + right

    val = integrate.quad(inner, 0.0, 1.0, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    return val / (math.sqrt(math.pi * (a + b)) * (1 - a) * (1 - b))


def psi_matrix(alpha: float, beta: float) -> np.ndarray:
    """Sign pattern of the face limit of ``n^(-5/2) B_n``."""
    sa, sb = np.sign(alpha), np.sign(beta)
    return np.array([[1.0, sa * sb, sb], [sa * sb, 1.0, sa], [sb, sa, 1.0]])


def sigma_matrix(alpha: float, beta: float, which: Optional[str] = None) -> np.ndarray:
    """Edge matrix whose adjugate is the limit covariance.

    Parameters
    ----------
    which : {"AlphaUnit", "BetaUnit"}, optional
        Which coefficient has modulus one; inferred when omitted.
    """
    if which is None:
        which = "AlphaUnit" if abs(alpha) == 1 else "BetaUnit"
    if which == "AlphaUnit":
        if abs(alpha) != 1 or not abs(beta) < 1:
            raise DomainError("AlphaUnit branch needs |alpha| = 1 and |beta| < 1")
        s, r = math.copysign(1.0, alpha), abs(beta)
        return np.array([[1.0, r * s, r], [r * s, 1.0, s], [r, s, 1.0]])
    if which == "BetaUnit":
        if abs(beta) != 1 or not abs(alpha) < 1:
            raise DomainError("BetaUnit branch needs |beta| = 1 and |alpha| < 1")
        s, r = math.copysign(1.0, beta), abs(alpha)
        return np.array([[1.0, r * s, s], [r * s, 1.0, r], [s, r, 1.0]])
    raise DomainError(f"unknown branch {which!r}")


def theta_matrix(alpha: float, beta: float) -> np.ndarray:
    """Vertex limit covariance ``2 [[1,0,-b],[0,1,-a],[-b,-a,2]]``."""
    if abs(alpha) != 1 or abs(beta) != 1:
        raise DomainError("Theta is defined at the vertices only")
    return 2.0 * np.array([[1.0, 0.0, -beta], [0.0, 1.0, -alpha],
                           [-beta, -alpha, 2.0]])


# ------------------------------------------------------------------ rho ---

@dataclass(frozen=True)
class RhoPair:
    """The two rho series of a face point plus truncation diagnostics.

    ``partial_*`` are the sums over the first ``K + 1`` rows; the reported
    values add the fitted tail. ``tail_estimate`` is the largest tail over the three series
    and ``extrapolation_gap`` the change of the extrapolated totals between
    ``K/2`` and ``K``.
    """

    rho1_ab: float
    rho1_ba: float
    rho2: float
    truncation_k: int
    tail_estimate: float
    partial_ab: float = 0.0
    partial_ba: float = 0.0
    partial_2: float = 0.0
    extrapolation_gap: float = 0.0


def _row_extent(a, b, K):
    """Columns needed so every row ``k <= K`` holds its ridge with ample margin.

    Row ``k`` of ``G`` peaks near ``l = k (1-a)/(1-b)`` with spread of order
    ``sqrt(k)/(1-b)``; the first row decays like ``b^l``.
    """
    r = (1 - a) / (1 - b)
    spread = math.sqrt(K * (a * (1 - a) + b * (1 - b) * r)) / (1 - b)
    geo = math.log(1e-40) / math.log(b) if b > 0 else 0.0
    return int(math.ceil(max(r * K + 14 * spread + 30, geo)))


def rho_row_sums(alpha: float, beta: float, K: int):
    """Row sums of squared / crossed G differences, rows ``0..K``.

    With ``gamma = 1 - |alpha| - |beta|``, ``d1 = G(k+1,l) - G(k,l)`` and
    ``d2 = G(k,l+1) - G(k,l)``, returns the arrays of ``sum d1^2``,
    ``sum d2^2`` and ``sum d1 d2``, each summed over all ``l`` for fixed
    ``k`` or over all ``k`` for fixed ``l``, whichever direction keeps the
    ridge ``(1-alpha) k = (1-beta) l`` inside the shorter strip.
    """
    a, b = abs(alpha), abs(beta)
    if a >= b:
        return _kernels.backend().rho_rows(a, b, int(K), _row_extent(a, b, K))
    # G(k, l; a, b) = G(l, k; b, a) swaps the roles of d1 and d2
    r22, r11, r12 = _kernels.backend().rho_rows(b, a, int(K), _row_extent(b, a, K))
    return r11, r22, r12


def rho_partial_sums(alpha: float, beta: float, K: int):
    """Cumulative rho partial sums over the first ``k + 1`` rows, ``k = 0..K``."""
    a, b = abs(alpha), abs(beta)
    s11, s22, s12 = rho_row_sums(a, b, K)
    return (np.cumsum(s11) / (1 - a) ** 2, np.cumsum(s22) / (1 - b) ** 2,
            np.cumsum(s12) / ((1 - a) * (1 - b)))


def _tail_fit(rows, K):
    """Fit ``r_j ~ j^-1.5 (c0 + c1/j + c2/j^2 + c3/j^3)`` on ``[K/4, K]``; sum ``j > K``."""
    j = np.arange(max(K // 4, 1), K + 1, dtype=float)
    powers = np.arange(4)
    design = j[:, None] ** -powers[None, :]
    coef = np.linalg.lstsq(design, rows[j.astype(int)] * j ** 1.5, rcond=None)[0]
    return float(sum(c * zeta(1.5 + p, K + 1) for c, p in zip(coef, powers)))


def rho_pair(alpha: float, beta: float, tol: float = 1e-6,
             max_k: int = RHO_MAX_K) -> RhoPair:
    """Evaluate both rho series by row truncation plus a fitted tail.

    Partial sums take rows ``0..K`` in full for ``K = 250, 500, ...`` up to
    ``max_k``. Row contributions decay like ``K^(-3/2)`` with corrections in
    integer powers of ``1/K``; the tail beyond ``K`` comes from a four-term
    fit of that expansion. The series is accepted once the extrapolated
    totals at ``K/2`` and ``K`` agree to ``tol`` for all three sums.

    Raises
    ------
    DomainError
        Unless ``|alpha|, |beta| < 1``, ``|alpha| + |beta| > 0`` and ``tol > 0``.
    NonConvergence
        If the totals still move by more than ``tol`` at ``K = max_k``.
    """
    a, b = _check_ab(alpha, beta)
    if not tol > 0:
        raise DomainError("tol must be positive")
    scale = (1 / (1 - a) ** 2, 1 / (1 - b) ** 2, 1 / ((1 - a) * (1 - b)))
    checkpoints = []
    K = 250
    while K < max_k:
        checkpoints.append(K)
        K *= 2
    checkpoints.append(max_k)
    rows = rho_row_sums(a, b, max_k)

    def totals(K):
        part = [float(np.sum(s[:K + 1])) * c for s, c in zip(rows, scale)]
        tail = [_tail_fit(s, K) * c for s, c in zip(rows, scale)]
        return part, tail

    prev = None
    gap = math.inf
    for K in checkpoints:
        part, tail = totals(K)
        total = [p + t for p, t in zip(part, tail)]
        if prev is not None:
            gap = max(abs(x - y) for x, y in zip(total, prev))
            if gap < tol:
                break
        prev = total
    else:
        raise NonConvergence(
            f"rho series at ({a}, {b}) moved by {gap:.3g} > tol={tol:g} at K={max_k}")
    return RhoPair(total[0], total[1], total[2], K, max(abs(t) for t in tail),
                   part[0], part[1], part[2], gap)


def kappa_values(alpha: float, beta: float, rho: RhoPair):
    """``(kappa1_ab, kappa1_ba, kappa2)`` from a computed :class:`RhoPair`."""
    a, b = abs(alpha), abs(beta)
    k_ab = 1 / (1 - b * b) + (1 - a) ** 2 * rho.rho1_ab
    k_ba = 1 / (1 - a * a) + (1 - b) ** 2 * rho.rho1_ba
    k2 = (1 - a) * (1 - b) * rho.rho2
    return k_ab, k_ba, k2


def k_matrix(alpha: float, beta: float, tol: float = 1e-6, rho: RhoPair = None) -> np.ndarray:
    """``[[kappa1_ba, kappa2], [kappa2, kappa1_ab]]``, the face limit of ``C C'/n^2``."""
    if rho is None:
        rho = rho_pair(alpha, beta, tol)
    k_ab, k_ba, k2 = kappa_values(alpha, beta, rho)
    return np.array([[k_ba, k2], [k2, k_ab]])


# ------------------------------------------------------------ limit law ---

@dataclass(frozen=True, eq=False)
class AsymptoticLaw:
    region: RegionClass
    rate_exponent: float
    covariance: np.ndarray
    supported: bool
    k_matrix: Optional[np.ndarray] = None
    rho: Optional[RhoPair] = None
    note: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self, params: Params) -> dict:
        out = {
            "params": {"alpha": params.alpha, "beta": params.beta, "gamma": params.gamma},
            "region": self.region.tag.value,
            "supported": self.supported,
            "rate_exponent": self.rate_exponent if self.supported else None,
            "covariance": self.covariance.tolist() if self.supported else None,
        }
        if self.k_matrix is not None:
            out["k_matrix"] = self.k_matrix.tolist()
        if self.rho is not None:
            r = self.rho
            out["rho"] = {"rho1_ab": r.rho1_ab, "rho1_ba": r.rho1_ba, "rho2": r.rho2}
            out["truncation"] = {"k": r.truncation_k, "tail_estimate": r.tail_estimate,
                                 "extrapolation_gap": r.extrapolation_gap,
                                 "partial_sums": [r.partial_ab, r.partial_ba, r.partial_2]}
        if self.note:
            out["note"] = self.note
        return out


def limit_law(p: Params, tol: float = 1e-6) -> AsymptoticLaw:
    """Normalization and Gaussian limit covariance of the scaled LSE error.

    Parameters
    ----------
    p : Params
    tol : float
        Truncation tolerance for the rho series (faces only).
    """
    region = classify(p)
    tag = region.tag
    nan = np.full((3, 3), np.nan)
    if tag is RegionTag.VERTEX:
        return AsymptoticLaw(region, 0.75, theta_matrix(p.alpha, p.beta), True)
    if tag in (RegionTag.EDGE1, RegionTag.EDGE2):
        sig = sigma_matrix(p.alpha, p.beta)
        return AsymptoticLaw(region, 0.5, adjugate3(sig), True)
    if tag is RegionTag.FACE_PLUS:
        c, flip = face_canonical(p)
        rho = rho_pair(c.alpha, c.beta, tol)
        K = k_matrix(c.alpha, c.beta, rho=rho)
        cov = H.T @ np.linalg.solve(K, H)
        cov = 0.5 * (cov + cov.T)
        D = flip.diag
        return AsymptoticLaw(region, 0.5, D[:, None] * cov * D[None, :], True,
                             k_matrix=K, rho=rho)
    notes = {
        RegionTag.FACE_MINUS: "no limit law is available on the F- faces",
        RegionTag.EDGE3: "no limit law is available on the E3 edges",
        RegionTag.STABLE: "interior point: the classical root-n theory applies, not covered here",
        RegionTag.OUTSIDE: "explosive parameters: no limit law",
    }
    return AsymptoticLaw(region, math.nan, nan, False, note=notes[tag])
