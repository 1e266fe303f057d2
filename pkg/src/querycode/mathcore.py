"""Numerically stable entropy, divergence and counting primitives.

Everything here is a pure function. Probabilities are accumulated in the
natural-log domain so that tails of binomials with thousands of trials do
not underflow.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .errors import DomainError

LN2 = math.log(2.0)
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

_UNITS = ("bits", "nats")


def _check_unit(unit):
    if unit not in _UNITS:
        raise DomainError(f"unit must be one of {_UNITS}, got {unit!r}")


def _check_prob(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError(f"{name} must lie in [0, 1], got {x!r}")
    return arr


def binary_entropy(x, unit="bits"):
    """Binary entropy H(x) with H(0) = H(1) = 0.

    Accepts a scalar or an array; returns the same shape.
    """
    _check_unit(unit)
    arr = _check_prob(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(arr * np.log(arr) + (1.0 - arr) * np.log1p(-arr))
    h = np.where((arr == 0.0) | (arr == 1.0), 0.0, h)
    if unit == "bits":
        h = h / LN2
    if np.ndim(h) == 0:
        return float(h)
    return h


def prior_entropy(probs, unit="bits"):
    """Shannon entropy of a probability vector."""
    _check_unit(unit)
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size < 1:
        raise DomainError("prior must be a non-empty 1-d vector")
    if np.any(np.isnan(p)) or np.any(p < 0) or np.any(p > 1) or abs(p.sum() - 1.0) > 1e-9:
        raise DomainError(f"invalid prior {probs!r}")
    nz = p[p > 0]
    h = float(-(nz * np.log(nz)).sum())
    return h / LN2 if unit == "bits" else h


def binary_entropy_inverse(y, tol=1e-13):
    """The unique x in [0, 1/2] with binary_entropy(x) = y (bits), by bisection."""
    y = float(y)
    if not 0.0 <= y <= 1.0 or math.isnan(y):
        raise DomainError(f"entropy value must lie in [0, 1], got {y}")
    if y == 0.0:
        return 0.0
    if y == 1.0:
        return 0.5
    lo, hi = 0.0, 0.5
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def kl_bernoulli(a, b, unit="bits"):
    """Divergence D(a || b) between Bernoulli(a) and Bernoulli(b).

    Returns ``math.inf`` when b is 0 or 1 and a differs from it.
    """
    _check_unit(unit)
    a = float(_check_prob(a, "a"))
    b = float(_check_prob(b, "b"))
    if b in (0.0, 1.0):
        return 0.0 if a == b else math.inf

    def term(u, v):
        return 0.0 if u == 0.0 else u * math.log(u / v)

    d = term(a, b) + term(1.0 - a, 1.0 - b)
    d = max(d, 0.0)
    return d / LN2 if unit == "bits" else d


def entropy_derivative(x, unit="bits"):
    """Slope of binary entropy, log((1 - x) / x)."""
    _check_unit(unit)
    x = float(x)
    if not 0.0 < x < 1.0:
        raise DomainError(f"entropy derivative needs 0 < x < 1, got {x}")
    s = math.log1p(-x) - math.log(x)
    return s / LN2 if unit == "bits" else s


@lru_cache(maxsize=None)
def surjection_count(k, d):
    """Number of surjections from a d-set onto a k-set (exact integer)."""
    if k < 0 or d < 0:
        raise DomainError("surjection_count needs k >= 0 and d >= 0")
    if k > d:
        return 0
    return sum((-1) ** i * math.comb(k, i) * (k - i) ** d for i in range(k + 1))


# Above this size the alternating sum is replaced by a positive recurrence.
LOG_SURJECTION_EXACT_MAX = 600


@lru_cache(maxsize=None)
def _log_stirling2_row(d):
    # row[k] = ln S(d, k) by S(d,k) = k S(d-1,k) + S(d-1,k-1), all terms positive
    row = np.array([0.0])
    for j in range(1, d + 1):
        new = np.full(j + 1, -np.inf)
        ks = np.arange(1, j + 1)
        stay = np.full(j, -np.inf)
        stay[: j - 1] = row[1:j] + np.log(ks[: j - 1])
        new[1:] = np.logaddexp(stay, row[:j])
        row = new
    return row


def log_surjection_count(k, d):
    """Natural log of ``surjection_count(k, d)``; ``-inf`` when it is zero.

    Exact integers are used up to ``LOG_SURJECTION_EXACT_MAX``; past that the
    value comes from a log-domain Stirling recurrence (relative error ~1e-12).
    """
    if k < 0 or d < 0:
        raise DomainError("log_surjection_count needs k >= 0 and d >= 0")
    if k > d or (k == 0 and d > 0):
        return -math.inf
    if d <= LOG_SURJECTION_EXACT_MAX:
        return math.log(surjection_count(k, d))
    return float(_log_stirling2_row(d)[k]) + math.lgamma(k + 1)


def log_binomial_pmf(n, p, j):
    """ln P(Bin(n, p) = j) for integer array or scalar j."""
    j = np.asarray(j, dtype=float)
    logc = (math.lgamma(n + 1) - gammaln(j + 1) - gammaln(n - j + 1))
    if p == 0.0:
        return np.where(j == 0, 0.0, -np.inf)
    if p == 1.0:
        return np.where(j == n, 0.0, -np.inf)
    return logc + j * math.log(p) + (n - j) * math.log1p(-p)


def logsumexp(values):
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return -math.inf
    top = np.max(v)
    if top == -np.inf:
        return -math.inf
    return float(top + math.log(np.exp(v - top).sum()))


def log_binomial_tail(n, p, lo, hi):
    """ln of sum_{j=lo}^{hi} C(n,j) p^j (1-p)^(n-j)."""
    if not (0 <= lo <= hi <= n):
        raise DomainError(f"binomial range must satisfy 0 <= lo <= hi <= n, got ({lo}, {hi}, {n})")
    p = float(_check_prob(p, "p"))
    return logsumexp(log_binomial_pmf(n, p, np.arange(lo, hi + 1)))


def binomial_tail(n, p, lo, hi):
    """P(lo <= Bin(n, p) <= hi), summed in log space."""
    return min(1.0, math.exp(log_binomial_tail(n, p, lo, hi)))


def poisson_pmf(lam, d):
    if lam < 0 or d < 0:
        raise DomainError("poisson_pmf needs lambda >= 0 and d >= 0")
    if lam == 0:
        return 1.0 if d == 0 else 0.0
    return math.exp(d * math.log(lam) - lam - math.lgamma(d + 1))


def golden_section_max(f, a, b, tol=1e-10, max_iter=200):
    """Maximiser and maximum of a unimodal f on [a, b]."""
    if b < a:
        a, b = b, a
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)
