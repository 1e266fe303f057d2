"""Nonadaptive query designs, each returned as a validated QueryGraph."""

from __future__ import annotations

import math
import warnings

import numpy as np

from .errors import DomainError, ValidationError
from .mathcore import kl_bernoulli
from .model import QueryGraph, QueryKind

# Beyond this fraction of all pairs the Poisson degree model of the random
# AND scheme is a poor description of distinct-pair sampling.
AND_DENSITY_WARNING = 0.1


def default_group_count(n, p):
    """Group count n D(1/2 || p) / (2 log2 n), rounded and clamped to [1, n/2]."""
    if n < 2:
        raise DomainError("group scheme needs n >= 2")
    div = kl_bernoulli(0.5, p, unit="bits")
    d = round(n * div / (2.0 * math.log2(n))) if n > 1 else 1
    return int(min(max(d, 1), n // 2))


def group_sizes(n, d):
    base, extra = divmod(n, d)
    return [base + 1] * extra + [base] * (d - extra)


def build_group_scheme(n, p, d_override=None):
    """Split n elements into d contiguous groups; star-query each group from its first member.

    Rows are (leader, member). With d not dividing n, group sizes differ
    by at most one.
    """
    if n < 2:
        raise DomainError("group scheme needs n >= 2")
    if p == 0.5:
        raise DomainError("p = 1/2 leaves the labeling ambiguous given the clustering")
    d = default_group_count(n, p) if d_override is None else int(d_override)
    if d < 1 or d > n // 2:
        raise DomainError(f"group count must lie in [1, {n // 2}], got {d}")
    rows = []
    start = 0
    for size in group_sizes(n, d):
        rows.extend((start, start + j) for j in range(1, size))
        start += size
    return QueryGraph.from_array(n, rows, QueryKind.XOR)


def build_xor_ensemble(n, c, delta, seed):
    """Biregular configuration-model graph: n left nodes of degree c, nc/delta queries of arity delta.

    Left stub s is wired to right stub perm[s]. An element can land twice in
    one query; answers then collapse mod 2. Draws that produce two queries
    with the same index multiset are redrawn from the same stream.
    """
    # c = delta is constructible; the rate analysis alone needs c < delta
    if not 3 <= c <= delta:
        raise DomainError(f"need 3 <= c <= delta, got c={c}, delta={delta}")
    if n < 1 or (n * c) % delta:
        raise DomainError(f"delta={delta} must divide n*c={n * c}")
    m = n * c // delta
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n), c)
    for _ in range(1000):
        perm = rng.permutation(n * c)
        right = np.empty_like(stubs)
        right[perm] = stubs
        rows = right.reshape(m, delta)
        keys = np.sort(rows, axis=1)
        if np.unique(keys, axis=0).shape[0] == m:
            return QueryGraph.from_array(n, rows, QueryKind.XOR, delta_max=delta)
    raise ValidationError("could not draw an ensemble member without repeated queries")


def _unrank_pairs(n):
    i, j = np.triu_indices(n, k=1)
    return np.stack([i, j], axis=1)


def build_random_and_scheme(n, m, seed):
    """m distinct unordered pairs drawn uniformly; duplicate draws are resampled."""
    if n < 2:
        raise DomainError("AND scheme needs n >= 2")
    total = n * (n - 1) // 2
    if m < 0 or m > total:
        raise DomainError(f"m must lie in [0, {total}] for n={n}")
    if m > AND_DENSITY_WARNING * total:
        warnings.warn(
            f"m={m} exceeds {AND_DENSITY_WARNING:.0%} of all pairs; "
            "the Poisson degree approximation degrades", stacklevel=2)
    rng = np.random.default_rng(seed)
    if m == 0:
        return QueryGraph.from_array(n, np.zeros((0, 2), dtype=np.int64), QueryKind.AND)
    if 2 * m > total:
        pick = rng.choice(total, size=m, replace=False)
        rows = _unrank_pairs(n)[pick]
        return QueryGraph.from_array(n, rows, QueryKind.AND)
    chosen = {}
    while len(chosen) < m:
        draw = rng.integers(0, n, size=(2 * (m - len(chosen)) + 8, 2))
        for a, b in draw.tolist():
            if a == b:
                continue
            key = (a, b) if a < b else (b, a)
            if key not in chosen:
                chosen[key] = None
                if len(chosen) == m:
                    break
    return QueryGraph.from_array(n, list(chosen), QueryKind.AND)


def ring_layout(n, seed):
    """Random placement of the n elements around the circle; entry s sits at position s."""
    return np.random.default_rng(seed).permutation(n)


def build_ring_regular_scheme(n, d, seed):
    """d-regular circulant on a randomly permuted circle.

    Each element is joined to its d//2 nearest neighbours per side, plus the
    antipode when d is odd. Rows come grouped by circle offset (all offset-1
    pairs, then offset-2, ..., antipodes last) which makes nearest-neighbour
    subsampling a prefix.
    """
    if d < 1 or d >= n:
        raise DomainError(f"ring scheme needs 1 <= d < n, got d={d}, n={n}")
    if d % 2 and n % 2:
        raise DomainError("odd degree requires an even number of elements")
    perm = ring_layout(n, seed)
    pos = np.arange(n)
    blocks = [np.stack([perm, perm[(pos + off) % n]], axis=1) for off in range(1, d // 2 + 1)]
    if d % 2:
        half = np.arange(n // 2)
        blocks.append(np.stack([perm[half], perm[half + n // 2]], axis=1))
    rows = np.concatenate(blocks) if blocks else np.zeros((0, 2), dtype=np.int64)
    return QueryGraph.from_array(n, rows, QueryKind.KARY_AND)


def ring_offset_rows(n, d, offsets):
    """Row indices of a ring graph (built above) belonging to the given circle offsets."""
    half = d // 2
    idx = []
    for off in offsets:
        if not 1 <= off <= half:
            raise DomainError(f"offset {off} outside [1, {half}]")
        idx.append(np.arange((off - 1) * n, off * n))
    return np.concatenate(idx) if idx else np.zeros(0, dtype=np.int64)


def subsample_ring(graph, d, dtilde, mode="nearest", seed=None):
    """Keep a dtilde-regular subgraph of a ring graph built with degree d.

    ``nearest`` keeps offsets 1..dtilde/2 on each side; ``random`` keeps
    dtilde/2 offsets chosen uniformly from 1..d/2. Returns the subgraph and
    the kept row indices so answers can be subset to match.
    """
    n = graph.n
    if dtilde % 2:
        raise DomainError(f"dtilde must be even, got {dtilde}")
    if not 0 < dtilde <= d:
        raise DomainError(f"dtilde must lie in (0, {d}], got {dtilde}")
    if graph.m != n * d // 2:
        raise ValidationError("graph does not look like a ring graph of the stated degree")
    if mode == "nearest":
        offsets = range(1, dtilde // 2 + 1)
    elif mode == "random":
        rng = np.random.default_rng(seed)
        offsets = np.sort(rng.choice(np.arange(1, d // 2 + 1), size=dtilde // 2, replace=False))
    else:
        raise DomainError(f"unknown subsampling mode {mode!r}")
    keep = ring_offset_rows(n, d, offsets)
    rows = graph.array[keep]
    return QueryGraph.from_array(n, rows, graph.kind), keep
