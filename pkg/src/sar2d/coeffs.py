"""Moving-average coefficients and the binomial laws behind them.

``G(m, n)`` is the impulse response of the AR recursion: the field equals
``sum_{i,j} G(k-i, l-j) eps[i,j]``. Besides the recursion it has a factorial
closed form, a terminating hypergeometric form (for ``alpha*beta != 0``)
and, when ``alpha, beta >= 0`` and ``alpha + beta + gamma = 1``, the
probabilistic form ``G(m, n) = P(Bin(m, alpha) + Bin(n, 1-beta) = m)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import xlogy
from scipy.stats import binom

from . import _kernels
from ._config import (BINOM_LOGSPACE_THRESHOLD, CLOSED_FORM_MAX_ORDER,
                      G_TABLE_MAX_ENTRIES)
from .errors import CapacityError, DomainError
from .params import Params


def _frozen(a):
    a = np.asarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class GTable:
    """Dense table ``values[m, n] = G(m, n)`` for a fixed parameter triple."""

    params: Params
    values: np.ndarray

    @property
    def shape(self):
        return self.values.shape


def g_table(p: Params, M: int, N: int, max_entries: int = G_TABLE_MAX_ENTRIES) -> GTable:
    """Build G(m, n) for ``0 <= m <= M``, ``0 <= n <= N`` by the recursion.

    Raises
    ------
    DomainError
        If ``M`` or ``N`` is negative.
    CapacityError
        If the table would hold more than ``max_entries`` values.
    """
    M, N = int(M), int(N)
    if M < 0 or N < 0:
        raise DomainError("table extents must be non-negative")
    if (M + 1) * (N + 1) > max_entries:
        raise CapacityError(
            f"G table of {(M + 1) * (N + 1)} entries exceeds cap {max_entries}")
    vals = _kernels.backend().g_table(p.alpha, p.beta, p.gamma, M, N)
    return GTable(p, _frozen(vals))


class GMethod(enum.Enum):
    CLOSED_FORM = "ClosedForm"
    HYPERGEOMETRIC = "Hypergeometric"
    BINOMIAL = "Binomial"


class HypResult(NamedTuple):
    value: float
    reliable: bool


def hyp2f1_terminating(n: int, b: float, c: float, z: float) -> HypResult:
    """Evaluate ``F(-n, b; c; z) = sum_{r<=n} (-n)_r (b)_r / ((c)_r r!) z^r``.

    If the Pochhammer symbol ``(c)_r`` vanishes before ``r = n`` the sum is
    cut at the last well-defined term and flagged as unreliable.
    """
    if n < 0:
        raise DomainError("n must be non-negative")
    total = 0.0
    term = 1.0
    for r in range(n + 1):
        total += term
        if r == n:
            break
        denom = (c + r) * (r + 1)
        if denom == 0:
            return HypResult(total, False)
        term *= (-n + r) * (b + r) / denom * z
    return HypResult(total, True)


def _g_closed_form(m, n, a, b, c):
    if m + n > CLOSED_FORM_MAX_ORDER:
        raise DomainError(
            f"closed form limited to m+n <= {CLOSED_FORM_MAX_ORDER}, got {m + n}")
    coef = float(math.comb(m + n, m))
    total = 0.0
    top = min(m, n)
    for r in range(top + 1):
        total += coef * a ** (m - r) * b ** (n - r) * c ** r
        if r < top:
            # multinomial (m+n-r)!/((m-r)!(n-r)!r!) updated by its term ratio
            coef *= (m - r) * (n - r) / ((m + n - r) * (r + 1))
    return total


def _g_hypergeometric(m, n, a, b, c):
    if a * b == 0:
        raise DomainError("hypergeometric representation needs alpha*beta != 0")
    res = hyp2f1_terminating(m, -n, -(m + n), -c / (a * b))
    return math.comb(m + n, n) * a ** m * b ** n * res.value


def _g_binomial(m, n, a, b, c, tol):
    if not (0 <= a < 1 and 0 <= b < 1):
        raise DomainError("binomial representation needs 0 <= alpha, beta < 1")
    if abs(a + b + c - 1) > tol:
        raise DomainError("binomial representation needs alpha + beta + gamma = 1")
    return float(binom_conv_pmf(m, a, n, 1 - b).pmf[m])


def g_value(m: int, n: int, p: Params, method="ClosedForm", tol: float = 1e-10) -> float:
    """Single coefficient G(m, n) by one of the non-recursive routes.

    Parameters
    ----------
    m, n : int
        Non-negative lags.
    p : Params
    method : GMethod or str
        ``ClosedForm``, ``Hypergeometric`` or ``Binomial``.
    tol : float
        Face-membership tolerance for the binomial route.

    Raises
    ------
    DomainError
        When the chosen representation does not apply to ``p``.
    """
    method = GMethod(method) if not isinstance(method, GMethod) else method
    m, n = int(m), int(n)
    if m < 0 or n < 0:
        raise DomainError("lags must be non-negative")
    a, b, c = p.alpha, p.beta, p.gamma
    if method is GMethod.CLOSED_FORM:
        return _g_closed_form(m, n, a, b, c)
    if method is GMethod.HYPERGEOMETRIC:
        return _g_hypergeometric(m, n, a, b, c)
    return _g_binomial(m, n, a, b, c, tol)


# ------------------------------------------------------------ binomials ---

def binom_pmf(k: int, nu: float) -> np.ndarray:
    """Binomial(k, nu) probabilities by the multiplicative recurrence.

    Falls back to scipy's log-space evaluation for large ``k`` or when the
    starting mass ``(1-nu)**k`` would underflow.
    """
    if not 0.0 <= nu <= 1.0:
        raise DomainError(f"probability {nu} outside [0, 1]")
    out = np.zeros(k + 1)
    if nu == 0.0:
        out[0] = 1.0
        return out
    if nu == 1.0:
        out[k] = 1.0
        return out
    if k > BINOM_LOGSPACE_THRESHOLD or k * math.log1p(-nu) < -690.0:
        return binom.pmf(np.arange(k + 1), k, nu)
    ratio = nu / (1.0 - nu)
    p = (1.0 - nu) ** k
    for i in range(k + 1):
        out[i] = p
        p *= (k - i) / (i + 1) * ratio
    return out


@dataclass(frozen=True)
class LocalCltFrame:
    """Mean and variance of ``Bin(k, nu) + Bin(l, mu)``."""

    k: int
    nu: float
    l: int
    mu: float

    @property
    def m_kl(self) -> float:
        return self.nu * self.k + self.mu * self.l

    @property
    def b_kl(self) -> float:
        return self.nu * (1 - self.nu) * self.k + self.mu * (1 - self.mu) * self.l

    def x(self, j):
        """Standardized lattice point ``(j - m_kl) / sqrt(b_kl)``."""
        return (np.asarray(j, dtype=float) - self.m_kl) / math.sqrt(self.b_kl)


@dataclass(frozen=True)
class BinConvLaw:
    """Law of ``Bin(k, nu) + Bin(l, mu)`` with independent summands."""

    k: int
    nu: float
    l: int
    mu: float
    pmf: np.ndarray

    @property
    def frame(self) -> LocalCltFrame:
        return LocalCltFrame(self.k, self.nu, self.l, self.mu)

    def tail(self, threshold: float, side: str = "Upper") -> float:
        """``P(S >= threshold)`` (Upper) or ``P(S <= threshold)`` (Lower)."""
        j = np.arange(self.pmf.size)
        if _side(side) == "Upper":
            return float(self.pmf[j >= threshold].sum())
        return float(self.pmf[j <= threshold].sum())


def binom_conv_pmf(k: int, nu: float, l: int, mu: float) -> BinConvLaw:
    """Distribution of the sum of independent Bin(k, nu) and Bin(l, mu).

    Examples
    --------
    >>> binom_conv_pmf(1, 0.3, 1, 0.5).pmf
    array([0.35, 0.5 , 0.15])
    """
    k, l = int(k), int(l)
    if k < 0 or l < 0:
        raise DomainError("trial counts must be non-negative")
    for name, v in (("nu", nu), ("mu", mu)):
        if not 0.0 <= v <= 1.0:
            raise DomainError(f"{name}={v} outside [0, 1]")
    pmf = np.convolve(binom_pmf(k, nu), binom_pmf(l, mu))
    return BinConvLaw(k, float(nu), l, float(mu), _frozen(pmf))


def local_clt_approx(frame: LocalCltFrame, j) -> float:
    """Gaussian surrogate ``exp(-x_j**2 / 2) / sqrt(2 pi b)`` for ``P(S = j)``."""
    b = frame.b_kl
    if not b > 0:
        raise DomainError("local CLT needs positive variance b_kl")
    x = frame.x(j)
    return np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi * b)


# ---------------------------------------------------------- tail bounds ---

def rate_function(theta: float, x: float) -> float:
    """Bernoulli relative entropy ``I_theta(x)``; infinite off ``[0, 1]``."""
    if not 0.0 < theta < 1.0:
        raise DomainError(f"theta={theta} must lie in (0, 1)")
    if not 0.0 <= x <= 1.0:
        return math.inf
    return float(xlogy(x, x / theta) + xlogy(1 - x, (1 - x) / (1 - theta)))


def _side(side):
    s = getattr(side, "value", side)
    s = str(s).capitalize()
    if s not in ("Upper", "Lower"):
        raise DomainError(f"side must be Upper or Lower, got {side!r}")
    return s


def tail_bound(k: int, l: int, nu: float, mu: float, x: float, side="Upper") -> float:
    """Hoeffding bound on ``P(S >= (k+l) x)`` or ``P(S <= (k+l) x)``.

    Returns ``exp(-(k+l) I_theta(x))`` with ``theta = (nu k + mu l)/(k+l)``.
    """
    side = _side(side)
    if k + l < 1:
        raise DomainError("need at least one trial")
    theta = (nu * k + mu * l) / (k + l)
    if not 0.0 < theta < 1.0:
        raise DomainError(f"mean fraction {theta} must lie in (0, 1)")
    if side == "Upper" and not x > theta:
        raise DomainError("upper bound needs x above the mean fraction")
    if side == "Lower" and not x < theta:
        raise DomainError("lower bound needs x below the mean fraction")
    return math.exp(-(k + l) * rate_function(theta, x))
