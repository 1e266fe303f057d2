"""Closed-form and numerically optimised query-complexity and distortion bounds.

Rates are queries per element measured in bits. Functions that can be
infeasible return None rather than raising.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .decoders import alg1_thresholds, resolve_thresholds
from .errors import DomainError
from .mathcore import (
    binary_entropy,
    binary_entropy_inverse,
    binomial_tail,
    entropy_derivative,
    golden_section_max,
    kl_bernoulli,
    log_binomial_pmf,
    poisson_pmf,
    surjection_count,
)
from .model import NoiseModel, Prior

GRID_STEP = 1e-4
RHO_STEP = 1e-3
POISSON_TAIL = 1e-10


@dataclass(frozen=True)
class BoundCurve:
    """Tabulated (abscissa, value, feasible) rows for one bound."""

    name: str
    rows: tuple
    units: tuple = ("p", "bits per element")
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        rows = tuple(sorted(((float(x), float(v) if v is not None else math.nan, bool(ok))
                             for x, v, ok in self.rows), key=lambda r: r[0]))
        for x, v, ok in rows:
            if ok and not math.isfinite(v):
                raise DomainError(f"{self.name}: feasible row at {x} has non-finite value")
        object.__setattr__(self, "rows", rows)

    @property
    def abscissae(self):
        return [r[0] for r in self.rows]

    @property
    def values(self):
        return [r[1] for r in self.rows]


def tabulate(name, func, grid, units=("p", "bits per element"), **params):
    """Evaluate ``func`` on ``grid``; None results become infeasible rows."""
    rows = []
    for x in grid:
        v = func(x)
        if isinstance(v, tuple):
            v = v[0]
        rows.append((x, v, v is not None and math.isfinite(v)))
    return BoundCurve(name, tuple(rows), units, dict(params))


# ---------------------------------------------------------------- same cluster

def _check_group_p(p):
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p}")
    if p == 0.5:
        raise DomainError("p = 1/2: labels cannot be inferred from cluster sizes")


def same_cluster_sufficient(n, p):
    """Query count n - n D(1/2||p) / (2 log2 n) and its failure bound D / (2 n log2 n)."""
    _check_group_p(p)
    if n < 4:
        raise DomainError("need n >= 4")
    div = kl_bernoulli(0.5, p, unit="bits")
    logn = math.log2(n)
    return n - n * div / (2.0 * logn), div / (2.0 * n * logn)


def same_cluster_necessary(n, p, eps):
    """Below n - (2 + eps) n D(1/2||p) / log2 n same-cluster queries, exact recovery fails."""
    _check_group_p(p)
    if eps <= 0:
        raise DomainError("eps must be positive")
    div = kl_bernoulli(0.5, p, unit="bits")
    return n - (2.0 + eps) * n * div / math.log2(n)


def majority_flip_probability(size, p):
    """Exact P(label-1 elements outnumber label-0) in a Ber(p) block of ``size``."""
    return binomial_tail(size, p, size // 2 + 1, size)


def majority_flip_lower_bound(size, p):
    """2^(-size D(1/2||p)) / (size + 1)^2, D in bits."""
    return 2.0 ** (-size * kl_bernoulli(0.5, p, unit="bits")) / (size + 1) ** 2


# ---------------------------------------------------------------- XOR ensembles

def _xor_numerator(x, p):
    return p * binary_entropy(np.clip(x / (2 * p), 0, 1)) + (1 - p) * binary_entropy(
        np.clip(x / (2 * (1 - p)), 0, 1))


def _xor_denominator(x, delta):
    return 1.0 - np.log2(1.0 + (1.0 - 2.0 * x) ** delta)


def xor_ratio(x, p, delta):
    """Objective maximised in the ensemble achievability condition."""
    return _xor_numerator(x, p) / _xor_denominator(x, delta)


def xor_beta(p, delta, c):
    return (2.0 / delta) * (1.0 / (2.0 * delta ** 2 * p * (1 - p) * math.exp(1.5 * c))) ** (1.0 / (c - 2))


def _grid_max(f, lo, hi, step=GRID_STEP):
    """Max of f on [lo, hi]: dense grid, then golden-section around the best cell."""
    xs = np.arange(lo, hi, step)
    xs = np.append(xs, hi)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = f(xs)
    vals = np.where(np.isnan(vals), -np.inf, vals)
    i = int(np.argmax(vals))
    best_x, best = float(xs[i]), float(vals[i])
    a, b = float(xs[max(i - 1, 0)]), float(xs[min(i + 1, xs.size - 1)])
    if b > a:
        x, v = golden_section_max(lambda t: float(f(np.array(t))), a, b, tol=1e-12)
        if v > best:
            best_x, best = x, v
    return best_x, best


def xor_ensemble_condition(p, delta, c):
    """Max of the ratio over [beta(c), 2p], or None when beta(c) > 2p."""
    beta = xor_beta(p, delta, c)
    if beta > 2 * p:
        return None
    return _grid_max(lambda x: xor_ratio(x, p, delta), beta, 2 * p)[1]


def xor_achievable_rate(p, delta):
    """Smallest feasible c/delta (with its c) for the configuration-model ensemble, or None."""
    if not 0.0 < p < 0.5:
        raise DomainError(f"need 0 < p < 1/2, got {p}")
    if delta < 4:
        raise DomainError("need delta >= 4")
    for c in range(3, delta):
        worst = xor_ensemble_condition(p, delta, c)
        if worst is not None and c / delta > worst:
            return c / delta, c
    return None


def miller_beta(delta, c):
    return (2.0 / delta) * math.exp(-12.0 - 6.0 * math.log(delta) / c)


def miller_rate(p, delta, step=GRID_STEP):
    """Smallest c/delta meeting the two-part condition of the earlier ensemble analysis, or None.

    gamma is scanned on a grid over [beta, 1/2]; the running maximum of the
    ratio over [beta, gamma] is compared against c/delta.
    """
    if not 0.0 < p < 0.5:
        raise DomainError(f"need 0 < p < 1/2, got {p}")
    if delta < 4:
        raise DomainError("need delta >= 4")
    hp = binary_entropy(p)
    slope = math.log2(math.sqrt(2 * p * (1 - p)))
    for c in range(3, delta):
        beta = miller_beta(delta, c)
        xs = np.append(np.arange(beta, 0.5, step), 0.5)
        with np.errstate(divide="ignore", invalid="ignore"):
            den = _xor_denominator(xs, delta)
            ratio = (xs * slope + binary_entropy(xs)) / den
        running = np.maximum.accumulate(ratio)
        second = hp / den
        rate = c / delta
        if np.any((running < rate) & (second < rate)):
            return rate, c
    return None


# ---------------------------------------------------------------- lower bounds

def trivial_lower_rate(delta):
    """Every element must appear in some query: m >= n / delta."""
    return 1.0 / delta


def gallager_lower_rate(p, delta):
    """H(p) / H((1 + (1 - 2p)^delta) / 2)."""
    if not 0.0 < p <= 0.5:
        raise DomainError(f"need 0 < p <= 1/2, got {p}")
    if delta < 2:
        raise DomainError("need delta >= 2")
    return binary_entropy(p) / binary_entropy((1 + (1 - 2 * p) ** delta) / 2)


def counting_lower_rate(p, delta, step=RHO_STEP):
    """H(p) max{1, max_rho (1 - rho) / H((1 - rho) r delta / rho)}, r = 2p(1-p).

    Only rho with the entropy argument in (0, 1/2] are scanned.
    """
    if not 0.0 < p < 0.5:
        raise DomainError(f"need 0 < p < 1/2, got {p}")
    r = 2 * p * (1 - p)
    rho = np.arange(step, 1.0, step)
    arg = (1 - rho) * r * delta / rho
    ok = (arg > 0) & (arg <= 0.5)
    best = 1.0
    if np.any(ok):
        best = max(best, float(np.max((1 - rho[ok]) / binary_entropy(arg[ok]))))
    return binary_entropy(p) * best


# ---------------------------------------------------------------- approximate recovery

def distortion_rate_unconstrained(rate, p):
    """h^{-1}(H(p) - rate); rates at or above H(p) give 0."""
    hp = binary_entropy(p)
    if rate < 0:
        raise DomainError("rate must be non-negative")
    if rate >= hp:
        return 0.0
    return binary_entropy_inverse(hp - rate)


def distortion_lower_thm3(rate, p, delta):
    """Unconstrained distortion plus the bounded-query-size correction term.

    Evaluated in nats throughout: (H(p) - H(t)) / (h'(t) (1 + e^{delta h'(t)}))
    with t the unconstrained distortion.
    """
    if not 0.0 < p <= 0.5:
        raise DomainError(f"need 0 < p <= 1/2, got {p}")
    hp = binary_entropy(p)
    if not 0.0 < rate < hp:
        raise DomainError(f"need 0 < rate < H(p) = {hp}, got {rate}")
    t = distortion_rate_unconstrained(rate, p)
    if t <= 0.0:
        return 0.0
    slope = entropy_derivative(t, unit="nats")
    gap = binary_entropy(p, unit="nats") - binary_entropy(t, unit="nats")
    expo = delta * slope
    if expo > 700:
        return t
    return t + gap / (slope * (1.0 + math.exp(expo)))


def massey_bound(rate, p):
    """max(0, p (1 - rate / H(p)))."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"need 0 < p < 1, got {p}")
    return max(0.0, p * (1.0 - rate / binary_entropy(p)))


@lru_cache(maxsize=None)
def _distinct_weight(n, d, p):
    # sum_k C(n,k) f(k,d) / n^d (1-p)^k : E[(1-p)^{#distinct of d uniform draws from n}]
    total = 0.0
    nd = n ** d
    for k in range(1, min(d, n) + 1):
        count = math.comb(n, k) * surjection_count(k, d)
        if count:
            total += (count / nd) * (1 - p) ** k
    return total


def poisson_truncation(lam, tail=POISSON_TAIL):
    """Smallest D with P(Poisson(lam) > D) < tail."""
    mass, D = 0.0, 0
    while True:
        mass += poisson_pmf(lam, D)
        if 1.0 - mass < tail:
            return D
        D += 1


def and_distortion_formula(n, m, p, truncation=None):
    """Error of random pairwise AND queries with one-hop OR decoding (Poisson degree model)."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"need 0 < p < 1, got {p}")
    if m < 0 or n < 2:
        raise DomainError("need m >= 0 and n >= 2")
    lam = 2.0 * m / n
    D = poisson_truncation(lam) if truncation is None else int(truncation)
    D = min(D, n)
    delta = p * math.exp(-lam)
    for d in range(1, D + 1):
        w = poisson_pmf(lam, d)
        if w == 0.0:
            continue
        delta += w * _distinct_weight(n, d, p) * p
    return delta


# ---------------------------------------------------------------- noisy threshold decoding

def _answer_law(prior: Prior, q, label):
    """Distribution of one observed answer on an edge at an element with the given true label."""
    chan = NoiseModel(q, prior.k).channel_matrix()
    if label == 0:
        return chan[0]
    return prior[label] * chan[label] + (1 - prior[label]) * chan[0]


def _decision_probs(law, d, thresholds):
    """P(threshold decoder outputs j), j = 0..k-1, for d i.i.d. answers drawn from ``law``.

    Dynamic programme over edges on counts capped at each threshold.
    """
    k = len(law)
    caps = [min(max(int(t), 0), d + 1) for t in thresholds]
    state = np.zeros([c + 1 for c in caps])
    state[(0,) * (k - 1)] = 1.0
    for _ in range(d):
        new = law[0] * state
        for j in range(1, k):
            ax = j - 1
            moved = np.roll(state, 1, axis=ax)
            # saturate at the cap: mass already at the top stays there
            top = [slice(None)] * (k - 1)
            top[ax] = slice(-1, None)
            bottom = [slice(None)] * (k - 1)
            bottom[ax] = slice(0, 1)
            if state.shape[ax] > 1:
                moved[tuple(top)] += state[tuple(top)]
                moved[tuple(bottom)] = 0.0
            else:
                moved = state.copy()
            new = new + law[j] * moved
        state = new
    out = np.zeros(k)
    undecided = np.ones(state.shape, dtype=bool)
    for j in range(1, k):
        idx = np.indices(state.shape)[j - 1]
        crossed = idx == caps[j - 1]
        fire = undecided & crossed
        out[j] = state[fire].sum()
        undecided &= ~crossed
    out[0] = state[undecided].sum()
    return out


def alg1_exact_error(prior: Prior, q, d, thresholds=None):
    """Exact per-element error of threshold decoding on a d-regular graph.

    Neighbour labels are i.i.d. from the prior and answers pass through the
    symmetric k-ary channel, so the incident answer counts are multinomial.
    Returns (delta, per_label) with per_label[i] = P(error | label i).
    """
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"q must lie in [0, 1], got {q}")
    if d < 1:
        raise DomainError("d must be at least 1")
    th = resolve_thresholds(prior, q, d, thresholds)
    per_label = []
    for i in range(prior.k):
        probs = _decision_probs(_answer_law(prior, q, i), d, th)
        per_label.append(float(min(max(1.0 - probs[i], 0.0), 1.0)))
    delta = float(sum(prior[i] * e for i, e in enumerate(per_label)))
    return delta, tuple(per_label)


def alg1_printed_error(prior: Prior, q, d):
    """Union-bound error expression for threshold decoding, term by term.

    Z0 and Z_{i,1} sum single-label binomial tails; Z_{i,2} conditions on the
    number of label-i neighbours and uses q/(k-1) as the per-answer error on
    them. Equals ``alg1_exact_error`` for k = 2; an upper-bound style
    approximation for k > 2.
    """
    k = prior.k
    th = alg1_thresholds(prior, q, d)
    wrong = q / (k - 1)

    def tail(t):
        return binomial_tail(d, wrong, t, d) if t <= d else 0.0

    z0 = sum(tail(t) for t in th)
    total = prior[0] * z0
    per_label = [z0]
    for i in range(1, k):
        z1 = sum(tail(th[j - 1]) for j in range(1, k) if j != i)
        t = th[i - 1]
        z2 = 0.0
        if t > 0:
            pk = np.exp(log_binomial_pmf(d, prior[i], np.arange(d + 1)))
            for kh in range(d + 1):
                # P(A + B <= t - 1), A = correct i-answers among kh, B = false i-answers among d - kh
                a_pmf = np.exp(log_binomial_pmf(kh, 1 - wrong, np.arange(kh + 1)))
                inner = 0.0
                for a in range(min(kh, t - 1) + 1):
                    top = t - 1 - a
                    if top >= 0:
                        inner += a_pmf[a] * binomial_tail(d - kh, wrong, 0, min(top, d - kh))
                z2 += pk[kh] * inner
        per_label.append(z1 + z2)
        total += prior[i] * (z1 + z2)
    return total, tuple(per_label)


class DegreeChoice(NamedTuple):
    d: int
    rate: float
    vacuous: bool = False


def queries_for_target_delta(prior: Prior, q, target_delta, max_degree=1 << 14):
    """Smallest even degree (doubling, then bisection) with exact error <= target."""
    k = prior.k
    if not 0.0 < target_delta <= 1.0:
        raise DomainError(f"target must lie in (0, 1], got {target_delta}")
    if target_delta >= 1.0:
        return DegreeChoice(2, 1.0, vacuous=True)
    if q >= (k - 1) / k:
        return None

    def ok(d):
        return alg1_exact_error(prior, q, d)[0] <= target_delta

    if ok(2):
        return DegreeChoice(2, 1.0)
    lo, hi = 2, 4
    while not ok(hi):
        lo, hi = hi, hi * 2
        if hi > max_degree:
            return None
    # invariant: lo fails, hi succeeds, both even
    while hi - lo > 2:
        mid = (lo + hi) // 2
        mid -= mid % 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return DegreeChoice(hi, hi / 2.0)
