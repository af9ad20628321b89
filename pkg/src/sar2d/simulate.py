"""Seeded innovations and field generation.

Innovations are counter based: entry ``(k, l)`` of a noise matrix is a pure
function of ``(seed, k, l)``, so a larger lattice extends a smaller one
instead of reshuffling it.
"""
from __future__ import annotations

import csv
import enum
import io
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve2d
from scipy.special import ndtri

from . import _kernels
from ._config import MA_MAX_SITES
from .coeffs import g_table
from .errors import CapacityError, DomainError, ParseError
from .params import Params


def _readonly(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Field:
    """Lattice values ``x[k, l]`` for ``0 <= k <= n``, ``0 <= l <= m``.

    Row 0 and column 0 hold the zero boundary. Entries may overflow to
    infinity when an explosive parameter set is simulated.
    """

    x: np.ndarray

    def __post_init__(self):
        x = _readonly(self.x)
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise DomainError("field must be a non-empty 2-D array")
        if np.any(x[0, :] != 0) or np.any(x[:, 0] != 0):
            raise DomainError("field boundary row and column must be zero")
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return self.x.shape[0] - 1

    @property
    def m(self) -> int:
        return self.x.shape[1] - 1

    def __eq__(self, other):
        return isinstance(other, Field) and np.array_equal(self.x, other.x)

    __hash__ = None

    def to_csv(self, path=None) -> str:
        """Write ``k,l,x`` rows for every site; return the text."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "l", "x"])
        for k in range(self.n + 1):
            for l in range(self.m + 1):
                w.writerow([k, l, repr(float(self.x[k, l]))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


def read_lattice_csv(path_or_text, header=("k", "l", "x"), origin=0):
    """Parse a ``k,l,value`` CSV into a dense array indexed from ``origin``."""
    if isinstance(path_or_text, os.PathLike) or (
            isinstance(path_or_text, str) and "\n" not in path_or_text):
        with open(path_or_text, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = path_or_text
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [h.strip() for h in rows[0]] != list(header):
        raise ParseError(f"expected header {','.join(header)}", line=1)
    entries = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ParseError("expected 3 columns", line=lineno)
        try:
            k, l, v = int(row[0]), int(row[1]), float(row[2])
        except ValueError:
            raise ParseError("malformed number", line=lineno)
        if k < origin or l < origin:
            raise ParseError("negative lattice index", line=lineno)
        if not math.isfinite(v):
            raise ParseError("non-finite value", line=lineno)
        entries.append((k - origin, l - origin, v))
    if not entries:
        raise ParseError("no data rows", line=2)
    n = max(e[0] for e in entries) + 1
    m = max(e[1] for e in entries) + 1
    out = np.zeros((n, m))
    seen = np.zeros((n, m), dtype=bool)
    for k, l, v in entries:
        out[k, l] = v
        seen[k, l] = True
    if not seen.all():
        raise ParseError("lattice has missing sites")
    return out


def read_field_csv(path_or_text) -> Field:
    """Inverse of :meth:`Field.to_csv`."""
    return Field(read_lattice_csv(path_or_text))


class NoiseKind(enum.Enum):
    GAUSSIAN = "Gaussian"
    RADEMACHER = "Rademacher"
    UNIFORM = "Uniform"


@dataclass(frozen=True)
class NoiseSpec:
    """Innovation law (unit variance) and 64-bit seed."""

    kind: NoiseKind = NoiseKind.GAUSSIAN
    seed: int = 0

    def __post_init__(self):
        kind = self.kind
        if not isinstance(kind, NoiseKind):
            try:
                kind = NoiseKind(str(kind).capitalize())
            except ValueError:
                raise DomainError(f"unknown noise kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        seed = int(self.seed)
        if not 0 <= seed < 2 ** 64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "seed", seed)


@dataclass(frozen=True, eq=False)
class NoiseMatrix:
    """Innovations ``eps[k-1, l-1]`` for sites ``1..n`` x ``1..m``."""

    eps: np.ndarray

    def __post_init__(self):
        e = _readonly(self.eps)
        if e.ndim != 2:
            raise DomainError("noise must be a 2-D array")
        if not np.all(np.isfinite(e)):
            raise DomainError("noise entries must be finite")
        object.__setattr__(self, "eps", e)

    @property
    def n(self) -> int:
        return self.eps.shape[0]

    @property
    def m(self) -> int:
        return self.eps.shape[1]

    def __eq__(self, other):
        return isinstance(other, NoiseMatrix) and np.array_equal(self.eps, other.eps)

    __hash__ = None

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "l", "eps"])
        for k in range(self.n):
            for l in range(self.m):
                w.writerow([k + 1, l + 1, repr(float(self.eps[k, l]))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


def read_noise_csv(path_or_text) -> NoiseMatrix:
    """Parse a ``k,l,eps`` CSV with 1-based site indices."""
    return NoiseMatrix(read_lattice_csv(path_or_text, ("k", "l", "eps"), origin=1))


_TWO_M53 = 2.0 ** -53
_SQRT3 = math.sqrt(3.0)


def _raw_rows(seeds, n, m):
    """Raw 64-bit words; row ``k`` of seed ``s`` comes from Philox counter (0,k,0,0)."""
    out = np.empty((len(seeds), n, m), dtype=np.uint64)
    for r, seed in enumerate(seeds):
        bg = np.random.Philox(key=int(seed))
        state = bg.state
        for k in range(n):
            state["state"]["counter"] = np.array([0, k + 1, 0, 0], dtype=np.uint64)
            state["buffer_pos"] = 4
            bg.state = state
            out[r, k] = bg.random_raw(m)
    return out


def _transform(raw, kind):
    if kind is NoiseKind.RADEMACHER:
        return np.where(raw >> np.uint64(63), 1.0, -1.0)
    # 53-bit uniform strictly inside (0, 1)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53
    if kind is NoiseKind.GAUSSIAN:
        return ndtri(u)
    return _SQRT3 * (2.0 * u - 1.0)


def draw_noise_batch(kind, seeds, n: int, m: int) -> np.ndarray:
    """Noise arrays of shape ``(len(seeds), n, m)``, one per seed."""
    if n < 1 or m < 1:
        raise DomainError("noise lattice needs n, m >= 1")
    kind = NoiseSpec(kind, 0).kind
    return _transform(_raw_rows(seeds, n, m), kind)


def draw_noise(spec: NoiseSpec, n: int, m: int) -> NoiseMatrix:
    """Realize ``spec`` on sites ``1..n`` x ``1..m``.

    The draw is deterministic in ``(kind, seed)`` and entry ``(k, l)`` does
    not depend on the lattice extent.
    """
    return NoiseMatrix(draw_noise_batch(spec.kind, [spec.seed], n, m)[0])


def simulate_batch(p: Params, eps) -> np.ndarray:
    """Fields for a stack of noise arrays ``(R, n, m)`` -> ``(R, n+1, m+1)``."""
    eps = np.asarray(eps, dtype=np.float64)
    if eps.ndim != 3:
        raise DomainError("expected a (replicates, n, m) noise stack")
    with np.errstate(over="ignore", invalid="ignore"):
        return _kernels.backend().simulate_batch(p.alpha, p.beta, p.gamma, eps)


def _eps_array(eps):
    return eps.eps if isinstance(eps, NoiseMatrix) else NoiseMatrix(eps).eps


def simulate_recursion(p: Params, eps) -> Field:
    """Run ``X[k,l] = a X[k-1,l] + b X[k,l-1] + c X[k-1,l-1] + eps[k,l]``.

    Sites are updated row by row (``k`` outer, ``l`` inner) from the zero
    boundary. Explosive parameters are not guarded against.
    """
    e = _eps_array(eps)
    return Field(simulate_batch(p, e[None])[0])


def simulate_ma(p: Params, eps, max_sites: int = MA_MAX_SITES) -> Field:
    """Build the field from the moving-average form ``sum G(k-i, l-j) eps[i,j]``.

    Cost is quadratic in the number of sites, hence the ``n*m`` guard.
    """
    e = _eps_array(eps)
    n, m = e.shape
    if n * m > max_sites:
        raise CapacityError(f"moving-average route limited to {max_sites} sites")
    G = g_table(p, n - 1, m - 1).values
    x = np.zeros((n + 1, m + 1))
    with np.errstate(over="ignore", invalid="ignore"):
        x[1:, 1:] = convolve2d(e, G)[:n, :m]
    return Field(x)
