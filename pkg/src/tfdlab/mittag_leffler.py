"""One-parameter Mittag-Leffler function on the real axis.

``E_alpha(z) = sum_k z**k / Gamma(alpha*k + 1)`` for ``0 < alpha <= 2`` and
real ``z <= 1``. Three evaluation branches are available:

* power series, summed with ``math.fsum``;
* the algebraic asymptotic expansion for large negative ``z`` (plus the
  two conjugate exponential terms when ``alpha >= 1``), truncated at the
  smallest term;
* for ``0 < alpha < 1`` and ``z < 0``, the Laplace-type integral

      E_alpha(-x) = (sin(pi a) / pi) * int_0^inf  r**(a-1) exp(-r x**(1/a))
                    / (r**(2a) + 2 r**a cos(pi a) + 1) dr,

  discretised by the trapezoid rule in ``s = log r``; the integrand is
  positive and analytic in a strip, so the rule converges geometrically.

The dispatcher uses the series for ``|z| <= 10`` and the expansion beyond,
and falls back to the integral whenever the estimated error of the chosen
branch exceeds the requested tolerance (series cancellation for small
``alpha``; early truncation of the expansion near the crossover).
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.special import gammaln

from .core import TimeGrid

__all__ = [
    "MLAccuracyWarning",
    "ml_eval",
    "mittag_leffler_report",
    "mittag_leffler",
    "ml_decay_table",
    "ml_series",
    "ml_asymptotic",
    "ml_integral",
]

CROSSOVER = 10.0
_EPS = np.finfo(float).eps
_LOG_TINY = math.log(1e-18)
_INTEGRAL_REL_ERR = 1e-12


class MLAccuracyWarning(UserWarning):
    """Requested tolerance could not be certified for some arguments."""


def _check(alpha, rel_tol):
    if not (0.0 < alpha <= 2.0):
        raise ValueError(f"alpha must lie in (0, 2], got {alpha}")
    if not (0.0 < rel_tol <= 1e-2):
        raise ValueError(f"rel_tol must lie in (0, 1e-2], got {rel_tol}")


def ml_series(alpha: float, z) -> tuple[np.ndarray, np.ndarray]:
    """Power series with compensated summation.

    Returns ``(values, error_estimates)``; the estimate is the roundoff
    bound ``eps * sum |terms|`` plus the first omitted term.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    vals = np.ones_like(z)
    errs = np.zeros_like(z)
    nz = z != 0.0
    if not nz.any():
        return vals, errs
    zmax = np.abs(z[nz]).max()
    # smallest K beyond the peak with negligible terms for the largest |z|
    K = 16
    while True:
        k = np.arange(K)
        logt = k * math.log(zmax) - gammaln(alpha * k + 1.0)
        if logt[-1] < _LOG_TINY and logt[-1] < logt[-2]:
            break
        K *= 2
        if K > 1 << 16:
            raise ValueError(f"series does not terminate for alpha={alpha}, |z|={zmax}")
    k = np.arange(K + 1)
    lgk = gammaln(alpha * k + 1.0)
    for i in np.flatnonzero(nz):
        zi = z[i]
        logmag = k * math.log(abs(zi)) - lgk
        if logmag.max() > 700.0:
            # terms overflow; the sum is meaningless in double precision
            vals[i], errs[i] = np.nan, np.inf
            continue
        mag = np.exp(logmag)
        terms = mag if zi > 0 else mag * np.where(k % 2 == 0, 1.0, -1.0)
        vals[i] = math.fsum(terms[:-1])
        errs[i] = _EPS * mag[:-1].sum() + mag[-1]
    return vals, errs


def _log_abs_rgamma(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``log|1/Gamma(s)|`` and the sign of ``1/Gamma(s)``; poles give ``-inf``."""
    s = np.asarray(s, dtype=float)
    logv = np.empty_like(s)
    sign = np.ones_like(s)
    pole = (s <= 0) & (np.abs(s - np.round(s)) < 1e-12)
    pos = s > 0
    logv[pos] = -gammaln(s[pos])
    neg = ~pos & ~pole
    sn = np.sin(np.pi * s[neg])
    logv[neg] = gammaln(1.0 - s[neg]) + np.log(np.abs(sn)) - math.log(math.pi)
    sign[neg] = np.sign(sn)
    logv[pole] = -np.inf
    sign[pole] = 0.0
    return logv, sign


def ml_asymptotic(alpha: float, z, max_terms: int = 200) -> tuple[np.ndarray, np.ndarray]:
    """Asymptotic expansion for ``z < 0``, truncated at its smallest term.

    Returns ``(values, error_estimates)`` with the estimate equal to the
    magnitude of the smallest (omitted) term.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z >= 0):
        raise ValueError("asymptotic branch is for z < 0 only")
    x = -z
    k = np.arange(1, max_terms + 1)
    logr, sgn = _log_abs_rgamma(1.0 - alpha * k)
    # term_k = -z**-k / Gamma(1 - alpha k) = (-1)**(k+1) x**-k / Gamma(1 - alpha k)
    logt = -np.outer(np.log(x), k) + logr
    sign = np.where(k % 2 == 1, 1.0, -1.0) * sgn
    live = np.isfinite(logt)
    vals = np.zeros_like(x)
    errs = np.zeros_like(x)
    for i in range(x.size):
        idx = np.flatnonzero(live[i])
        if idx.size == 0:
            continue
        kstar = idx[np.argmin(logt[i, idx])]
        used = idx[idx < kstar]
        vals[i] = math.fsum(sign[used] * np.exp(logt[i, used]))
        errs[i] = math.exp(logt[i, kstar])
    if alpha == 1.0:
        vals += np.exp(z)
    elif alpha > 1.0:
        r = x ** (1.0 / alpha)
        c, s = math.cos(math.pi / alpha), math.sin(math.pi / alpha)
        vals += (2.0 / alpha) * np.exp(r * c) * np.cos(r * s)
    return vals, errs


def ml_integral(alpha: float, z, chunk: int = 512) -> np.ndarray:
    """Laplace-type integral representation, ``0 < alpha < 1`` and ``z <= 0``."""
    if not (0.0 < alpha < 1.0):
        raise ValueError("integral branch requires 0 < alpha < 1")
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z > 0):
        raise ValueError("integral branch is for z <= 0 only")
    out = np.ones_like(z)
    live = np.flatnonzero(z < 0)
    if live.size == 0:
        return out
    y = (-z[live]) ** (1.0 / alpha)
    # strip half-width limited by the denominator's zeros and by exp(-y e^s)
    width = min(math.pi * (1.0 - alpha) / alpha, math.pi / 2)
    step = width / 6.0
    s_lo = _LOG_TINY / alpha
    s_hi = min(math.log(40.0 / y.min()), -s_lo)
    s = np.arange(s_lo, s_hi + step, step)
    ea = np.exp(alpha * s)
    weight = (math.sin(alpha * math.pi) / math.pi) * ea / (ea * ea + 2.0 * ea * math.cos(alpha * math.pi) + 1.0)
    er = np.exp(s)
    for start in range(0, live.size, chunk):
        sl = slice(start, start + chunk)
        out[live[sl]] = step * (np.exp(-np.outer(y[sl], er)) @ weight)
    return out


def _lower_bound(alpha, x):
    # 1/(1 + Gamma(1-alpha) x) <= E_alpha(-x) for 0 < alpha < 1
    return 1.0 / (1.0 + math.gamma(1.0 - alpha) * x)


def _evaluate(alpha: float, z: np.ndarray, rel_tol: float):
    z = np.asarray(z, dtype=float)
    flat = z.ravel()
    if np.any(flat > 1.0):
        raise ValueError("only real z <= 1 are supported")
    vals = np.ones_like(flat)
    errs = np.zeros_like(flat)
    method = np.full(flat.shape, "series", dtype=object)

    near = np.abs(flat) <= CROSSOVER
    far = ~near
    if alpha < 1.0:
        x = np.abs(flat)
        with np.errstate(over="ignore"):
            predicted = _EPS * np.exp(x ** (1.0 / alpha)) / alpha
        lb = np.where(flat < 0, _lower_bound(alpha, x), 1.0)
        series_ok = near & ((flat >= 0) | (predicted <= 0.1 * rel_tol * lb))
    else:
        series_ok = near
    idx = np.flatnonzero(series_ok)
    if idx.size:
        vals[idx], errs[idx] = ml_series(alpha, flat[idx])
        if alpha >= 1.0:
            # the expansion (with its exponential terms) may certify better
            retry = idx[(flat[idx] < 0) & (errs[idx] > rel_tol * np.maximum(np.abs(vals[idx]), 1e-300))]
            if retry.size:
                v, e = ml_asymptotic(alpha, flat[retry])
                better = e < errs[retry]
                vals[retry[better]], errs[retry[better]] = v[better], e[better]
                method[retry[better]] = "asymptotic"

    fallback = near & ~series_ok
    idx = np.flatnonzero(far)
    if idx.size:
        v, e = ml_asymptotic(alpha, flat[idx])
        vals[idx], errs[idx] = v, e
        method[idx] = "asymptotic"
        bad = e > rel_tol * np.maximum(np.abs(v), 1e-300)
        if alpha < 1.0:
            fallback[idx[bad]] = True
        elif bad.any():
            # large-|z| series is still usable while cancellation stays mild
            retry = idx[bad]
            with np.errstate(over="ignore"):
                cancel = _EPS * np.exp(np.abs(flat[retry]) ** (1.0 / alpha))
            retry = retry[cancel < rel_tol]
            if retry.size:
                v, e = ml_series(alpha, flat[retry])
                vals[retry], errs[retry] = v, e
                method[retry] = "series"

    idx = np.flatnonzero(fallback)
    if idx.size:
        vals[idx] = ml_integral(alpha, flat[idx])
        errs[idx] = _INTEGRAL_REL_ERR * np.abs(vals[idx])
        method[idx] = "integral"

    vals[flat == 0.0] = 1.0
    errs[flat == 0.0] = 0.0
    accurate = errs <= rel_tol * np.maximum(np.abs(vals), 1e-300)
    shape = z.shape
    return vals.reshape(shape), errs.reshape(shape), method.reshape(shape), accurate.reshape(shape)


def mittag_leffler(alpha: float, z, rel_tol: float = 1e-10) -> np.ndarray:
    """Vectorised ``E_alpha(z)``; warns with :class:`MLAccuracyWarning` if uncertified."""
    _check(alpha, rel_tol)
    vals, _, _, accurate = _evaluate(alpha, np.asarray(z, dtype=float), rel_tol)
    if not np.all(accurate):
        warnings.warn(
            f"E_{alpha}: tolerance {rel_tol:g} not certified for {np.size(accurate) - np.count_nonzero(accurate)} argument(s)",
            MLAccuracyWarning,
            stacklevel=2,
        )
    return vals


def mittag_leffler_report(alpha: float, z, rel_tol: float = 1e-10) -> dict:
    """Values with per-point error estimates, branch names and certification flags."""
    _check(alpha, rel_tol)
    vals, errs, method, accurate = _evaluate(alpha, np.asarray(z, dtype=float), rel_tol)
    return {"values": vals, "errors": errs, "methods": method, "accurate": accurate}


def ml_eval(alpha: float, z: float, rel_tol: float = 1e-10, full_output: bool = False):
    """Evaluate ``E_alpha(z)`` at one real point.

    With ``full_output=True`` also returns a dict holding the branch used,
    the error estimate and an ``accurate`` flag (False means the requested
    tolerance could not be certified; a warning is issued as well).

    >>> round(ml_eval(1.0, -1.0), 10)
    0.3678794412
    """
    _check(alpha, rel_tol)
    v, e, m, ok = _evaluate(alpha, np.array([float(z)]), rel_tol)
    if not ok[0]:
        warnings.warn(
            f"E_{alpha}({z}): estimated error {e[0]:.2e} exceeds rel_tol {rel_tol:g}",
            MLAccuracyWarning,
            stacklevel=2,
        )
    value = float(v[0])
    if full_output:
        return value, {"method": m[0], "error_estimate": float(e[0]), "accurate": bool(ok[0])}
    return value


def ml_decay_table(alpha: float, lambdas, times, rel_tol: float = 1e-10) -> np.ndarray:
    """Matrix ``E_alpha(-lambda_i * t_j**alpha)``.

    ``times`` is a :class:`TimeGrid` or an array of nonnegative times.
    """
    lam = np.asarray(lambdas, dtype=float)
    if np.any(lam < 0):
        raise ValueError("decay table needs lambda >= 0")
    t = times.nodes if isinstance(times, TimeGrid) else np.asarray(times, dtype=float)
    z = -np.outer(lam, t**alpha)
    table = mittag_leffler(alpha, z, rel_tol)
    table[lam == 0.0, :] = 1.0
    return table
