"""Second-order structure of the field.

``Cov(X[k1,l1], X[k2,l2]) = sum_{i<=k1^k2, j<=l1^l2} G(k1-i, l1-j) G(k2-i, l2-j)``
for unit-variance innovations. Edges and vertices admit closed forms
because there ``gamma = -alpha*beta`` and ``G(m, n) = alpha^m beta^n``.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .coeffs import g_table
from .errors import DomainError
from .params import (COL_FLIP, ROW_FLIP, Params, RegionTag, SignFlip,
                     canonicalize, classify)


@dataclass(frozen=True)
class SitePair:
    k1: int
    l1: int
    k2: int
    l2: int

    def __post_init__(self):
        for name in ("k1", "l1", "k2", "l2"):
            v = int(getattr(self, name))
            if v < 0:
                raise DomainError(f"{name} must be non-negative")
            object.__setattr__(self, name, v)

    def swapped(self) -> "SitePair":
        return SitePair(self.k2, self.l2, self.k1, self.l1)


@dataclass(frozen=True)
class CovLimitQuery:
    """Macroscopic sites ``(s, t)`` with lag offsets ``q`` and ``r``."""

    s1: float
    t1: float
    s2: float
    t2: float
    q: Tuple[int, int] = (0, 0)
    r: Tuple[int, int] = (0, 0)

    def __post_init__(self):
        for name in ("s1", "t1", "s2", "t2"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        allowed = {(0, 0), (1, 0), (0, 1)}
        for name in ("q", "r"):
            off = tuple(int(v) for v in getattr(self, name))
            if off not in allowed:
                raise DomainError(f"offset {name}={off} not in {sorted(allowed)}")
            object.__setattr__(self, name, off)


class _TableCache:
    """Largest G table built so far per parameter triple."""

    def __init__(self, maxsize=8):
        self._lock = threading.Lock()
        self._tables = {}
        self._maxsize = maxsize

    def get(self, p: Params, M: int, N: int) -> np.ndarray:
        key = (p.alpha, p.beta, p.gamma)
        with self._lock:
            vals = self._tables.get(key)
            if vals is not None and vals.shape[0] > M and vals.shape[1] > N:
                return vals
            if vals is not None:
                M = max(M, vals.shape[0] - 1)
                N = max(N, vals.shape[1] - 1)
            vals = g_table(p, M, N).values
            if key not in self._tables and len(self._tables) >= self._maxsize:
                self._tables.pop(next(iter(self._tables)))
            self._tables[key] = vals
            return vals

    def clear(self):
        with self._lock:
            self._tables.clear()


_CACHE = _TableCache()


def exact_cov(p: Params, pair: SitePair) -> float:
    """Exact covariance of two sites under unit-variance innovations.

    Examples
    --------
    >>> exact_cov(Params(1, 1, -1), SitePair(2, 3, 4, 1))
    2.0
    """
    K = min(pair.k1, pair.k2)
    L = min(pair.l1, pair.l2)
    if K == 0 or L == 0:
        return 0.0
    G = _CACHE.get(p, max(pair.k1, pair.k2), max(pair.l1, pair.l2))
    a = G[pair.k1 - K:pair.k1, pair.l1 - L:pair.l1]
    b = G[pair.k2 - K:pair.k2, pair.l2 - L:pair.l2]
    return float(np.sum(a * b))


def cov_closed(p: Params, pair: SitePair) -> float:
    """Closed-form covariance on the edges E1, E2 and at the vertices."""
    tag = classify(p).tag
    a, b = p.alpha, p.beta
    K = min(pair.k1, pair.k2)
    L = min(pair.l1, pair.l2)
    dk = abs(pair.k1 - pair.k2)
    dl = abs(pair.l1 - pair.l2)
    if K == 0 or L == 0:
        return 0.0
    if tag is RegionTag.VERTEX:
        return float(K * L * a ** dk * b ** dl)
    if tag is RegionTag.EDGE1:
        return float(K * a ** dk * b ** dl * _geom(b * b, L))
    if tag is RegionTag.EDGE2:
        return float(L * b ** dl * a ** dk * _geom(a * a, K))
    raise DomainError(f"no closed form in region {tag}")


def _geom(r, L):
    # 1 + r + ... + r^(L-1)
    if r == 1.0:
        return float(L)
    return (1.0 - r ** L) / (1.0 - r)


def cov_bound(p: Params, pair: SitePair, C: float = None) -> float:
    """Envelope for ``|Cov|`` on faces (``C sqrt(k1+l1+k2+l2)``) and edges."""
    tag = classify(p).tag
    g = abs(p.gamma)
    if tag is RegionTag.FACE_PLUS:
        if C is None or not C > 0:
            raise DomainError("face bound needs a positive constant C")
        return C * math.sqrt(pair.k1 + pair.l1 + pair.k2 + pair.l2)
    if tag is RegionTag.EDGE1:
        return min(pair.k1, pair.k2) * g ** abs(pair.l1 - pair.l2) / (1 - g * g)
    if tag is RegionTag.EDGE2:
        return min(pair.l1, pair.l2) * g ** abs(pair.k1 - pair.k2) / (1 - g * g)
    raise DomainError(f"no covariance bound in region {tag}")


def face_canonical(p: Params) -> Tuple[Params, SignFlip]:
    """Canonical representative with ``alpha + beta + gamma = 1`` on a face.

    Differs from :func:`canonicalize` only when ``alpha`` or ``beta`` is
    exactly zero and ``gamma < 0``; flipping the zero coordinate then turns
    the sign of ``gamma``. The returned flip maps the representative back
    to ``p``.
    """
    c, flip = canonicalize(p)
    if c.gamma < 0 and (c.alpha == 0 or c.beta == 0):
        extra = ROW_FLIP if c.alpha == 0 else COL_FLIP
        c = extra.apply(c)
        flip = flip.compose(extra)
    return c, flip


def variance_growth_limit(p: Params, query: CovLimitQuery) -> Tuple[float, float]:
    """Normalized covariance limit of rescaled sites and its exponent.

    The covariance of ``X[[ns1]+q1, [nt1]+q2]`` and ``X[[ns2]+r1, [nt2]+r2]``
    divided by ``n**kappa`` converges to the returned limit, with ``kappa``
    equal to 1/2 on faces, 1 on edges and 2 at vertices. Parameters are
    first reduced to ``alpha, beta >= 0``.

    Returns
    -------
    limit : float
    kappa : float
    """
    tag = classify(p).tag
    s1, t1, s2, t2 = query.s1, query.t1, query.s2, query.t2
    if tag is RegionTag.FACE_PLUS:
        c, _ = face_canonical(p)
        a, b = c.alpha, c.beta
        if s1 == s2 and t1 == t2:
            num = min(math.sqrt((1 - a) * s1), math.sqrt((1 - b) * t1))
            return num / (math.sqrt(math.pi * (a + b)) * (1 - a) * (1 - b)), 0.5
        lhs = (1 - a) * (s1 - s2)
        rhs = (1 - b) * (t1 - t2)
        if math.isclose(lhs, rhs, rel_tol=1e-12, abs_tol=1e-15):
            raise DomainError("limit undetermined for distinct sites on the ridge "
                              "(1-alpha)(s1-s2) = (1-beta)(t1-t2)")
        return 0.0, 0.5
    c, _ = canonicalize(p)
    a, b, g = c.alpha, c.beta, c.gamma
    if tag is RegionTag.EDGE1:
        if t1 != t2:
            return 0.0, 1.0
        return min(s1, s2) * b ** abs(query.q[1] - query.r[1]) / (1 - g * g), 1.0
    if tag is RegionTag.EDGE2:
        if s1 != s2:
            return 0.0, 1.0
        return min(t1, t2) * a ** abs(query.q[0] - query.r[0]) / (1 - g * g), 1.0
    if tag is RegionTag.VERTEX:
        return min(s1, s2) * min(t1, t2), 2.0
    raise DomainError(f"no covariance limit available in region {tag}")
