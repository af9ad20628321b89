"""Parameter triples, region classification and sign-flip symmetries.

The field obeys ``X[k,l] = alpha X[k-1,l] + beta X[k,l-1] + gamma X[k-1,l-1]
+ eps[k,l]``. Stability holds on the open tetrahedron spanned by
(1,1,-1), (1,-1,1), (-1,1,1) and (-1,-1,-1); its boundary splits into two
kinds of faces, three families of edges and the four vertices.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ._config import DEFAULT_TOL
from .errors import DomainError


@dataclass(frozen=True)
class Params:
    """Coefficients on the (1,0), (0,1) and (1,1) lags."""

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            value = getattr(self, name)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise DomainError(f"{name} must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.gamma])

    def __iter__(self):
        return iter((self.alpha, self.beta, self.gamma))


class RegionTag(enum.Enum):
    STABLE = "Stable"
    FACE_PLUS = "FacePlus"
    FACE_MINUS = "FaceMinus"
    EDGE1 = "Edge1"
    EDGE2 = "Edge2"
    EDGE3 = "Edge3"
    VERTEX = "Vertex"
    OUTSIDE = "Outside"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class RegionClass:
    tag: RegionTag
    tolerance: float


VERTICES = ((1.0, 1.0, -1.0), (1.0, -1.0, 1.0), (-1.0, 1.0, 1.0), (-1.0, -1.0, -1.0))


def _close(x, y, tol):
    return abs(x - y) <= tol


def _is_vertex(a, b, c, tol):
    return any(_close(a, va, tol) and _close(b, vb, tol) and _close(c, vc, tol)
               for va, vb, vc in VERTICES)


def _edge(a, b, c, tol):
    # E1: alpha = +-1, gamma = -alpha*beta, |beta| < 1; E2/E3 analogous
    if abs(b) < 1 - tol:
        if _close(a, 1, tol) and _close(c, -b, tol):
            return RegionTag.EDGE1
        if _close(a, -1, tol) and _close(c, b, tol):
            return RegionTag.EDGE1
    if abs(a) < 1 - tol:
        if _close(b, 1, tol) and _close(c, -a, tol):
            return RegionTag.EDGE2
        if _close(b, -1, tol) and _close(c, a, tol):
            return RegionTag.EDGE2
    if abs(a) < 1 - tol:
        if _close(c, 1, tol) and _close(b, -a, tol):
            return RegionTag.EDGE3
        if _close(c, -1, tol) and _close(b, a, tol):
            return RegionTag.EDGE3
    return None


def _face(a, b, c, tol):
    if not (abs(a) < 1 - tol and abs(b) < 1 - tol and abs(c) < 1 - tol):
        return None
    aa, ab, ac = abs(a), abs(b), abs(c)
    prod = a * b * c
    if prod >= 0:
        if _close(aa + ab + ac, 1, tol):
            return RegionTag.FACE_PLUS
        return None
    if _close(aa + ab - ac, 1, tol):
        return RegionTag.FACE_PLUS
    if _close(aa - ab + ac, 1, tol) or _close(-aa + ab + ac, 1, tol):
        return RegionTag.FACE_MINUS
    return None


def _stable(a, b, c, tol):
    if not (abs(a) < 1 - tol and abs(b) < 1 - tol and abs(c) < 1 - tol):
        return False
    planes = (a - b - c, -a + b - c, -a - b + c, a + b + c)
    return all(1 - h > tol for h in planes)


def classify(p: Params, tol: float = DEFAULT_TOL) -> RegionClass:
    """Locate ``p`` relative to the stability tetrahedron.

    Boundary strata are tested first (vertices, edges, faces) with
    equalities relaxed to ``tol``; an interior point needs every constraint
    satisfied with slack larger than ``tol``. Everything else is Outside.

    Parameters
    ----------
    p : Params
    tol : float, default 1e-12
        Non-negative membership tolerance.

    Returns
    -------
    RegionClass
    """
    if not tol >= 0:
        raise DomainError("tol must be non-negative")
    a, b, c = p.alpha, p.beta, p.gamma
    if _is_vertex(a, b, c, tol):
        tag = RegionTag.VERTEX
    else:
        tag = _edge(a, b, c, tol) or _face(a, b, c, tol)
        if tag is None:
            tag = RegionTag.STABLE if _stable(a, b, c, tol) else RegionTag.OUTSIDE
    return RegionClass(tag, float(tol))


class SitePhase(enum.Enum):
    NONE = "None"
    CHECKERBOARD = "Checkerboard"
    ROW_FLIP = "RowFlip"
    COL_FLIP = "ColFlip"


@dataclass(frozen=True)
class SignFlip:
    """Sign changes on the three lags paired with a lattice phase.

    Multiplying site (k, l) by the phase turns a field with parameters
    ``(a, b, c)`` into one with parameters ``(d1 a, d2 b, d3 c)`` driven by
    phase-multiplied noise.
    """

    d1: int
    d2: int
    d3: int
    site_phase: SitePhase

    def apply(self, p: Params) -> Params:
        return Params(self.d1 * p.alpha, self.d2 * p.beta, self.d3 * p.gamma)

    @property
    def diag(self) -> np.ndarray:
        return np.array([self.d1, self.d2, self.d3], dtype=np.float64)

    @property
    def is_identity(self) -> bool:
        return self.site_phase is SitePhase.NONE

    def compose(self, other: "SignFlip") -> "SignFlip":
        key = (self.d1 * other.d1, self.d2 * other.d2, self.d3 * other.d3)
        return _FLIP_BY_DIAG[key]

    def phase(self, n: int, m: int) -> np.ndarray:
        """Phase factors for sites ``0..n`` x ``0..m``."""
        k = np.arange(n + 1)[:, None]
        l = np.arange(m + 1)[None, :]
        if self.site_phase is SitePhase.CHECKERBOARD:
            e = k + l
        elif self.site_phase is SitePhase.ROW_FLIP:
            e = k + 0 * l
        elif self.site_phase is SitePhase.COL_FLIP:
            e = l + 0 * k
        else:
            e = 0 * (k + l)
        return np.where(e % 2 == 0, 1.0, -1.0)


IDENTITY = SignFlip(1, 1, 1, SitePhase.NONE)
CHECKERBOARD = SignFlip(-1, -1, 1, SitePhase.CHECKERBOARD)
ROW_FLIP = SignFlip(-1, 1, -1, SitePhase.ROW_FLIP)
COL_FLIP = SignFlip(1, -1, -1, SitePhase.COL_FLIP)
ALL_FLIPS = (IDENTITY, CHECKERBOARD, ROW_FLIP, COL_FLIP)
_FLIP_BY_DIAG = {(f.d1, f.d2, f.d3): f for f in ALL_FLIPS}


def canonicalize(p: Params) -> Tuple[Params, SignFlip]:
    """Map ``p`` to the representative with ``alpha, beta >= 0``.

    Returns
    -------
    canon : Params
    flip : SignFlip
        Satisfies ``flip.apply(canon) == p``.
    """
    neg_a = p.alpha < 0
    neg_b = p.beta < 0
    if neg_a and neg_b:
        flip = CHECKERBOARD
    elif neg_a:
        flip = ROW_FLIP
    elif neg_b:
        flip = COL_FLIP
    else:
        flip = IDENTITY
    return flip.apply(p), flip


def apply_flip(field, flip: SignFlip):
    """Multiply every site of ``field`` by the flip's lattice phase."""
    from .simulate import Field

    x = field.x
    if not np.all(np.isfinite(x)):
        raise DomainError("apply_flip needs a finite field")
    return Field(x * flip.phase(field.n, field.m))
