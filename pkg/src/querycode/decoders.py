"""Label recovery from query answers.

Each decoder is a pure function of (graph, answers, side information) and
returns a DecodeReport carrying the labels plus per-element flags.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DecodeFailure, DomainError, ValidationError
from .model import AnswerVector, LabelVector, Prior, QueryGraph, QueryKind

UNQUERIED = "unqueried-default"
TIE_BROKEN = "tie-broken"

DEFAULT_N_CAP = 24


@dataclass(frozen=True)
class DecodeReport:
    labels: LabelVector
    flags: tuple
    ambiguity: int | None = None

    def __post_init__(self):
        if len(self.flags) != self.labels.n:
            raise ValidationError("one flag per element required")
        if self.ambiguity is not None and self.ambiguity < 1:
            raise ValidationError("ambiguity must be at least 1")

    def flagged(self, flag):
        return [i for i, f in enumerate(self.flags) if f == flag]


def _check_answers(graph, answers):
    if answers.m != graph.m:
        raise ValidationError(f"graph has {graph.m} queries but {answers.m} answers were given")


def decode_group_same_cluster(graph: QueryGraph, answers: AnswerVector, p: float) -> DecodeReport:
    """Split each star into agree/disagree-with-leader and name the clusters by size.

    For p < 1/2 the smaller side gets label 1, for p > 1/2 label 0. An even
    split gives the leader's side label 0 and flags the whole group.
    Elements in no query get the more likely label.
    """
    if graph.kind is not QueryKind.XOR:
        raise ValidationError("group decoding needs same-cluster (xor) queries")
    if p == 0.5:
        raise DomainError("p = 1/2 cannot name clusters")
    _check_answers(graph, answers)
    n = graph.n
    members = {}
    leader_of = {}
    for (a, b), y in zip(graph.queries, answers.answers.tolist()):
        if a in leader_of or b in members or b in leader_of:
            raise ValidationError(f"query ({a}, {b}) breaks the star-per-group structure")
        leader_of[b] = a
        members.setdefault(a, []).append((b, y))
    if set(members) & set(leader_of):
        raise ValidationError("an element is both a leader and a member")

    likely = 1 if p > 0.5 else 0
    labels = np.full(n, likely, dtype=np.int64)
    flags = [UNQUERIED] * n
    for leader, group in members.items():
        disagree = [b for b, y in group if y == 1]
        agree = [leader] + [b for b, y in group if y == 0]
        flag = ""
        if len(agree) == len(disagree):
            small, large = disagree, agree
            small_label, large_label = 1, 0
            flag = TIE_BROKEN
        else:
            small, large = (agree, disagree) if len(agree) < len(disagree) else (disagree, agree)
            small_label = 1 if p < 0.5 else 0
            large_label = 1 - small_label
        labels[small] = small_label
        labels[large] = large_label
        for e in agree + disagree:
            flags[e] = flag
    return DecodeReport(LabelVector(labels, 2), tuple(flags))


def _gf2_rows(graph):
    # bitmask per query: repeated indices cancel mod 2
    masks = []
    for q in graph.queries:
        mask = 0
        for i in q:
            mask ^= 1 << i
        masks.append(mask)
    return masks


def gf2_solution_space(masks, syndrome, n):
    """All x in {0,1}^n (as int bitmasks, bit i = element i) with <row, x> = syndrome mod 2.

    Returns (particular, kernel_basis) or None when the system is inconsistent.
    """
    pivots = {}  # pivot bit -> (row mask, rhs)
    for mask, rhs in zip(masks, syndrome):
        for bit, (pm, pr) in pivots.items():
            if mask >> bit & 1:
                mask ^= pm
                rhs ^= pr
        if mask == 0:
            if rhs:
                return None
            continue
        bit = mask.bit_length() - 1
        for b, (pm, pr) in list(pivots.items()):
            if pm >> bit & 1:
                pivots[b] = (pm ^ mask, pr ^ rhs)
        pivots[bit] = (mask, rhs)
    particular = 0
    for bit, (pm, pr) in pivots.items():
        if pr:
            particular |= 1 << bit
    free = [i for i in range(n) if i not in pivots]
    basis = []
    for f in free:
        vec = 1 << f
        for bit, (pm, pr) in pivots.items():
            if pm >> f & 1:
                vec |= 1 << bit
        basis.append(vec)
    return particular, basis


def _bits_to_array(values, n):
    vals = np.asarray(values, dtype=np.uint64)
    shifts = np.arange(n, dtype=np.uint64)
    return ((vals[:, None] >> shifts) & np.uint64(1)).astype(np.int64)


def typical_window(n, p):
    """Inclusive Hamming-weight range |w - np| <= n^(2/3)."""
    radius = n ** (2.0 / 3.0)
    lo = max(0, math.ceil(n * p - radius - 1e-12))
    hi = min(n, math.floor(n * p + radius + 1e-12))
    return lo, hi


def decode_xor_typical(graph: QueryGraph, answers: AnswerVector, p: float, n_cap: int = DEFAULT_N_CAP) -> DecodeReport:
    """Exhaustive typical-set decoding of XOR answers.

    Lists every typical x consistent with the answers (the affine solution
    space of Qx = y over GF(2), filtered by weight), returns the
    lexicographically smallest, and reports how many there were.
    """
    if graph.kind is not QueryKind.XOR:
        raise ValidationError("typical-set decoding needs xor queries")
    if answers.k != 2:
        raise ValidationError("xor answers are binary")
    n = graph.n
    if n > n_cap:
        raise DomainError(f"exhaustive decoding is capped at n={n_cap}, got n={n}")
    _check_answers(graph, answers)
    space = gf2_solution_space(_gf2_rows(graph), answers.answers.tolist(), n)
    if space is None:
        raise DecodeFailure("answers are inconsistent with every label vector")
    particular, basis = space
    sols = np.array([particular], dtype=np.uint64)
    for vec in basis:
        sols = np.concatenate([sols, sols ^ np.uint64(vec)])
    lo, hi = typical_window(n, p)
    weight = np.bitwise_count(sols)
    cand = sols[(weight >= lo) & (weight <= hi)]
    if cand.size == 0:
        raise DecodeFailure("no typical label vector is consistent with the answers")
    # lexicographic order on (x_0, x_1, ...) is numeric order of the bit-reversed mask
    key = np.zeros_like(cand)
    for i in range(n):
        key |= ((cand >> np.uint64(i)) & np.uint64(1)) << np.uint64(n - 1 - i)
    best = _bits_to_array(cand[np.argmin(key)][None], n)[0]
    return DecodeReport(LabelVector(best, 2), ("",) * n, ambiguity=int(cand.size))


def _pair_array(graph):
    if graph.m == 0:
        return np.zeros((0, 2), dtype=np.int64)
    arr = graph.array
    if arr.shape[1] != 2:
        raise ValidationError("decoder needs pairwise queries")
    return arr


def decode_and_onehop(graph: QueryGraph, answers: AnswerVector) -> DecodeReport:
    """Label 1 iff any incident AND answer is 1; unqueried elements default to 0."""
    if graph.kind is not QueryKind.AND:
        raise ValidationError("one-hop decoding needs and queries")
    _check_answers(graph, answers)
    n = graph.n
    pairs = _pair_array(graph)
    y = answers.answers
    ends = pairs.ravel()
    hits = np.bincount(ends, weights=np.repeat(y, 2), minlength=n)
    degree = np.bincount(ends, minlength=n)
    labels = (hits > 0).astype(np.int64)
    flags = tuple(UNQUERIED if deg == 0 else "" for deg in degree.tolist())
    return DecodeReport(LabelVector(labels, 2), flags)


def alg1_thresholds_real(prior: Prior, q: float, d: int):
    """Real-valued cutoffs C_i for labels 1..k-1."""
    k = prior.k
    lift = 1.0 - q * k / (k - 1)
    return tuple(d * q / (k - 1) + d * prior[i] / 2.0 * lift for i in range(1, k))


def alg1_thresholds(prior: Prior, q: float, d: int):
    """Integer count thresholds ceil(C_i) for labels 1..k-1."""
    # absorb float error: C = 2.0000000000000004 must still round up to 2
    return tuple(max(0, math.ceil(c - 1e-9)) for c in alg1_thresholds_real(prior, q, d))


def incident_counts(graph: QueryGraph, answers: AnswerVector, k: int):
    """N[u, i]: number of answers equal to i among the queries touching u."""
    pairs = _pair_array(graph)
    n = graph.n
    y = answers.answers
    flat = (pairs * k + y[:, None]).ravel()
    return np.bincount(flat, minlength=n * k).reshape(n, k)


def assign_by_thresholds(counts, thresholds):
    """First label i (ascending from 1) with counts[:, i] >= thresholds[i-1], else 0."""
    n = counts.shape[0]
    labels = np.zeros(n, dtype=np.int64)
    undecided = np.ones(n, dtype=bool)
    for i, t in enumerate(thresholds, start=1):
        fire = undecided & (counts[:, i] >= t)
        labels[fire] = i
        undecided &= ~fire
    return labels


def decode_threshold_alg1(graph: QueryGraph, answers: AnswerVector, prior: Prior, q: float,
                          threshold_override=None) -> DecodeReport:
    """Threshold decoding on a d-regular pairwise k-ary AND graph.

    ``threshold_override`` gives per-label integer cutoffs (fires at >=);
    a single int applies to every label.
    """
    if graph.kind is not QueryKind.KARY_AND:
        raise ValidationError("threshold decoding needs k-ary AND queries")
    k = prior.k
    if answers.k != k:
        raise ValidationError(f"answers use alphabet {answers.k}, prior has k={k}")
    _check_answers(graph, answers)
    deg = graph.degrees()
    if graph.m == 0 or not np.all(deg == deg[0]):
        raise ValidationError("threshold decoding needs a regular graph")
    d = int(deg[0])
    thresholds = resolve_thresholds(prior, q, d, threshold_override)
    counts = incident_counts(graph, answers, k)
    labels = assign_by_thresholds(counts, thresholds)
    return DecodeReport(LabelVector(labels, k), ("",) * graph.n)


def resolve_thresholds(prior, q, d, override=None):
    k = prior.k
    if override is None:
        return alg1_thresholds(prior, q, d)
    if isinstance(override, (int, np.integer)):
        return (int(override),) * (k - 1)
    override = tuple(int(t) for t in override)
    if len(override) != k - 1:
        raise ValidationError(f"need {k - 1} thresholds, got {len(override)}")
    return override
