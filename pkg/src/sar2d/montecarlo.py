"""Replicated simulate -> estimate pipelines and comparisons with the limits.

Replicate ``r`` at lattice size ``(n, m)`` draws its noise from a seed
derived from ``(base_seed, n, m, r)``, so results do not depend on how
replicates are chunked or spread over worker threads.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from . import _kernels
from ._config import worker_count
from .asymptotics import AsymptoticLaw, limit_law
from .errors import DomainError, SingularMatrix
from .estimator import lse_batch
from .params import Params
from .simulate import NoiseKind, NoiseSpec, draw_noise_batch, simulate_batch

# cap on doubles held by one chunk of simulated fields
_CHUNK_DOUBLES = 2_000_000


def derive_seed(base_seed: int, n: int, m: int, r: int) -> int:
    """64-bit seed for replicate ``r`` at size ``(n, m)``."""
    ss = np.random.SeedSequence(entropy=int(base_seed), spawn_key=(int(n), int(m), int(r)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _chunks(total, n, m):
    size = max(1, min(total, _CHUNK_DOUBLES // ((n + 1) * (m + 1))))
    return [(s, min(s + size, total)) for s in range(0, total, size)]


def _map(fn, items, workers):
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def replicate_fields(params: Params, n: int, m: int, replicates: int,
                     kind=NoiseKind.GAUSSIAN, base_seed: int = 0, start: int = 0):
    """Yield ``(first_index, fields, noise)`` chunks of simulated replicates."""
    for lo, hi in _chunks(replicates, n, m):
        seeds = [derive_seed(base_seed, n, m, r) for r in range(start + lo, start + hi)]
        eps = draw_noise_batch(kind, seeds, n, m)
        yield start + lo, simulate_batch(params, eps), eps


def replicate_stats(params: Params, n: int, m: int, replicates: int,
                    kind=NoiseKind.GAUSSIAN, base_seed: int = 0,
                    workers: Optional[int] = None) -> np.ndarray:
    """Kernel statistics (with the noise columns) for every replicate."""
    workers = worker_count() if workers is None else workers
    kb = _kernels.backend()

    def run(bounds):
        lo, hi = bounds
        seeds = [derive_seed(base_seed, n, m, r) for r in range(lo, hi)]
        eps = draw_noise_batch(kind, seeds, n, m)
        X = simulate_batch(params, eps)
        return kb.accumulate_batch(X, n, m, eps)

    parts = _map(run, _chunks(replicates, n, m), workers)
    return np.concatenate(parts, axis=0)


# ------------------------------------------------------------- config ---

@dataclass(frozen=True)
class Tolerances:
    """Pass/fail thresholds for a Monte Carlo comparison.

    Entries whose theoretical magnitude exceeds ``entry_floor`` must match
    to ``rel``; the others must satisfy ``|gap| <= zero_abs`` unless that is
    None. KS p-values must exceed ``ks_p``. ``slope`` optionally bounds the
    fitted log-log rate.
    """

    rel: float = 0.25
    entry_floor: float = 0.05
    zero_abs: Optional[float] = None
    ks_p: float = 0.01
    slope: Optional[Tuple[float, float]] = None


@dataclass(frozen=True)
class MCConfig:
    params: Params
    sizes: Tuple[Tuple[int, int], ...]
    replicates: int
    noise: NoiseSpec = NoiseSpec()
    rho_tol: float = 1e-6
    base_seed: int = 0
    tolerances: Tolerances = Tolerances()
    raw_only: bool = False
    max_excluded_fraction: float = 0.01

    def __post_init__(self):
        if self.replicates < 2:
            raise DomainError("replicates must be at least 2")
        sizes = tuple((int(n), int(m)) for n, m in self.sizes)
        if not sizes:
            raise DomainError("sizes must be non-empty")
        if any(n < 2 or m < 2 for n, m in sizes):
            raise DomainError("lattice sizes must be at least 2x2")
        ratios = {m / n for n, m in sizes}
        if max(ratios) - min(ratios) > 1e-12 * max(ratios):
            raise DomainError("all sizes must share one aspect ratio m/n")
        object.__setattr__(self, "sizes", sizes)


# ------------------------------------------------------------- report ---

@dataclass
class SizeReport:
    size: Tuple[int, int]
    empirical_mean: np.ndarray
    empirical_cov: np.ndarray
    ks_pvalues: np.ndarray
    n_eff: int
    excluded: int
    median_abs_error: float
    comparison: dict = field(default_factory=dict)


@dataclass
class MCReport:
    sizes: List[SizeReport]
    law: AsymptoticLaw
    rate_slope: float = math.nan
    rate_stderr: float = math.nan
    cov_comparison: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    raw: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self, params: Params) -> dict:
        def clean(x):
            if isinstance(x, np.ndarray):
                return [clean(v) for v in x.tolist()]
            if isinstance(x, (list, tuple)):
                return [clean(v) for v in x]
            if isinstance(x, dict):
                return {k: clean(v) for k, v in x.items()}
            if isinstance(x, float) and not math.isfinite(x):
                return None
            if isinstance(x, (np.floating, np.integer)):
                return clean(x.item())
            return x

        return clean({
            "law": self.law.to_dict(params),
            "sizes": [{
                "n": s.size[0], "m": s.size[1], "n_eff": s.n_eff, "excluded": s.excluded,
                "empirical_mean": s.empirical_mean, "empirical_cov": s.empirical_cov,
                "ks_pvalues": s.ks_pvalues, "median_abs_error": s.median_abs_error,
                "comparison": s.comparison,
            } for s in self.sizes],
            "rate_slope": self.rate_slope,
            "rate_stderr": self.rate_stderr,
            "cov_comparison": self.cov_comparison,
            "checks": self.checks,
            "passed": self.passed,
        })

    def to_json(self, params: Params) -> str:
        return json.dumps(self.to_dict(params), indent=2, sort_keys=True)

    def raw_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["size", "replicate", "alpha_hat", "beta_hat", "gamma_hat", "detB"])
        for row in self.raw:
            w.writerow([row[0], row[1]] + [repr(float(v)) for v in row[2:]])
        return buf.getvalue()


def compare_cov(empirical, theoretical, n_eff: int, entry_floor: float = 0.05) -> dict:
    """Entrywise and Frobenius discrepancies plus Gaussian-theory z-scores.

    The z-score of entry ``(i, j)`` divides the gap by
    ``sqrt((S_ij^2 + S_ii S_jj) / (n_eff - 1))``, the large-sample standard
    deviation of a sample covariance under normality. Entries whose
    standard deviation vanishes get NaN.
    """
    E = np.asarray(empirical, dtype=float)
    S = np.asarray(theoretical, dtype=float)
    gap = E - S
    var = (S * S + np.outer(np.diag(S), np.diag(S))) / max(n_eff - 1, 1)
    scale = max(float(np.max(np.abs(np.diag(S)))), 1e-300)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(var > 1e-24 * scale * scale, gap / np.sqrt(var), np.nan)
        rel = np.where(np.abs(S) > entry_floor, np.abs(gap) / np.abs(S), np.nan)
    fro = float(np.linalg.norm(S))
    return {
        "abs_gap": gap,
        "rel_gap": rel,
        "z": z,
        "max_abs_entry_gap": float(np.max(np.abs(gap))),
        "max_rel_entry_gap": float(np.nanmax(rel)) if np.any(np.isfinite(rel)) else math.nan,
        "frobenius_rel": float(np.linalg.norm(gap) / fro) if fro > 0 else math.nan,
        "max_abs_z": float(np.nanmax(np.abs(z))) if np.any(np.isfinite(z)) else math.nan,
    }


def rate_fit(sizes: Sequence, median_abs_errors: Sequence) -> Tuple[float, float]:
    """OLS slope of ``log(median error)`` on ``log n`` and its standard error."""
    if len(sizes) < 3:
        raise DomainError("rate fit needs at least three sizes")
    n = np.array([s[0] if isinstance(s, (tuple, list)) else s for s in sizes], dtype=float)
    e = np.asarray(median_abs_errors, dtype=float)
    res = stats.linregress(np.log(n), np.log(e))
    return float(res.slope), float(res.stderr)


def _size_report(theta_true, theta, singular, n, m, law, tol, max_excl):
    R = theta.shape[0]
    keep = ~singular
    excluded = int(R - keep.sum())
    if excluded > max_excl * R:
        raise SingularMatrix(
            f"{excluded} of {R} replicates at size {n}x{m} had singular B")
    err = theta[keep] - theta_true
    med = float(np.median(np.linalg.norm(err, axis=1)))
    rate = law.rate_exponent if law.supported else 0.5
    z = (n * m) ** rate * err
    mean = z.mean(axis=0)
    cov = np.cov(z, rowvar=False, ddof=1)
    pvals = np.full(3, np.nan)
    comp = {}
    if law.supported:
        S = law.covariance
        sd = np.sqrt(np.clip(np.diag(S), 0, None))
        for i in range(3):
            if sd[i] > 1e-6 * sd.max():
                pvals[i] = stats.kstest(z[:, i] / sd[i], "norm").pvalue
        comp = compare_cov(cov, S, int(keep.sum()), tol.entry_floor)
    return SizeReport((n, m), mean, cov, pvals, int(keep.sum()), excluded, med, comp)


def _checks(report: MCReport, tol: Tolerances) -> dict:
    out = {}
    if not report.law.supported:
        return out
    last = report.sizes[-1]
    S = report.law.covariance
    gap = np.abs(last.empirical_cov - S)
    big = np.abs(S) > tol.entry_floor
    out["cov_rel"] = bool(np.all(gap[big] <= tol.rel * np.abs(S[big])))
    if tol.zero_abs is not None:
        out["cov_small_abs"] = bool(np.all(gap[~big] <= tol.zero_abs))
    p = last.ks_pvalues[np.isfinite(last.ks_pvalues)]
    out["ks"] = bool(np.all(p > tol.ks_p))
    if tol.slope is not None and math.isfinite(report.rate_slope):
        lo, hi = tol.slope
        out["rate_slope"] = bool(lo <= report.rate_slope <= hi)
    return out


def run_experiment(cfg: MCConfig, workers: Optional[int] = None,
                   keep_raw: bool = True) -> MCReport:
    """Run every configured size and compare with the limit law.

    Raises
    ------
    DomainError
        If no limit law exists for the parameters and ``raw_only`` is off.
    SingularMatrix
        If more than ``max_excluded_fraction`` of a size's replicates are
        singular.
    """
    law = limit_law(cfg.params, cfg.rho_tol)
    if not law.supported and not cfg.raw_only:
        raise DomainError(f"no limit law in region {law.region.tag.value}: {law.note}")
    theta_true = cfg.params.as_array()
    sizes, raw = [], []
    for n, m in cfg.sizes:
        st = replicate_stats(cfg.params, n, m, cfg.replicates, cfg.noise.kind,
                             cfg.base_seed, workers)
        theta, det, singular = lse_batch(st)
        if keep_raw:
            label = f"{n}x{m}"
            raw.extend((label, r, *theta[r], det[r]) for r in range(cfg.replicates))
        sizes.append(_size_report(theta_true, theta, singular, n, m, law,
                                  cfg.tolerances, cfg.max_excluded_fraction))
    report = MCReport(sizes, law, raw=raw)
    if len(sizes) >= 3:
        report.rate_slope, report.rate_stderr = rate_fit(
            [s.size for s in sizes], [s.median_abs_error for s in sizes])
    report.cov_comparison = sizes[-1].comparison
    report.checks = _checks(report, cfg.tolerances)
    return report


# ------------------------------------------------------- Wiener sheet ---

def wiener_functionals(grid: int, samples: int, seed: int = 0, chunk: int = 64) -> dict:
    """Riemann sums of ``int int W^2`` and the discrete ``int int W dW``.

    A Wiener sheet on a ``grid x grid`` lattice is built from i.i.d.
    ``N(0, 1/grid^2)`` cell increments by a double cumulative sum. ``w2``
    averages ``W^2`` at the lower-left corner of every cell, matching the
    lag structure of ``T_n``; ``wdw`` sums ``W(lower-left) * increment``.
    """
    if grid < 10:
        raise DomainError("grid must be at least 10")
    if samples < 1:
        raise DomainError("samples must be positive")
    rng = np.random.Generator(np.random.Philox(int(seed)))
    w2 = np.empty(samples)
    wdw = np.empty(samples)
    h = 1.0 / grid
    for lo in range(0, samples, chunk):
        hi = min(samples, lo + chunk)
        inc = rng.standard_normal((hi - lo, grid, grid)) * h
        W = np.zeros((hi - lo, grid + 1, grid + 1))
        W[:, 1:, 1:] = inc.cumsum(axis=1).cumsum(axis=2)
        corner = W[:, :-1, :-1]
        w2[lo:hi] = (corner * corner).sum(axis=(1, 2)) * h * h
        wdw[lo:hi] = (corner * inc).sum(axis=(1, 2))
    return {"w2": w2.tolist(), "wdw": wdw.tolist()}
