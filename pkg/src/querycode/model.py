"""Core domain types: priors, label vectors, query graphs, noise, answers."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, ValidationError


def _frozen_array(values, dtype=np.int64):
    arr = np.array(values, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Prior:
    """Label distribution (p_0, ..., p_{k-1})."""

    probs: tuple

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        if len(probs) < 2:
            raise DomainError("a prior needs at least two labels")
        if any(not 0.0 <= p <= 1.0 for p in probs) or abs(sum(probs) - 1.0) > 1e-9:
            raise DomainError(f"invalid prior {self.probs!r}")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def binary(cls, p):
        """Two-label prior with P(label = 1) = p."""
        return cls((1.0 - p, p))

    @classmethod
    def from_sizes(cls, sizes):
        sizes = [int(s) for s in sizes]
        if any(s < 0 for s in sizes) or sum(sizes) == 0:
            raise DomainError(f"cluster sizes must be non-negative with a positive total, got {sizes}")
        n = sum(sizes)
        return cls(tuple(s / n for s in sizes))

    @property
    def k(self):
        return len(self.probs)

    def __getitem__(self, i):
        return self.probs[i]

    def as_array(self):
        return np.array(self.probs)


@dataclass(frozen=True, eq=False)
class LabelVector:
    """Labels in {0..k-1}^n, stored as a read-only int array."""

    labels: np.ndarray
    k: int = 2

    def __post_init__(self):
        arr = _frozen_array(self.labels)
        if arr.ndim != 1 or arr.size < 1:
            raise ValidationError("a label vector needs at least one element")
        if self.k < 2:
            raise ValidationError("alphabet size must be at least 2")
        if arr.min() < 0 or arr.max() >= self.k:
            raise ValidationError(f"labels must lie in [0, {self.k})")
        object.__setattr__(self, "labels", arr)

    @property
    def n(self):
        return int(self.labels.size)

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, LabelVector):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.labels, other.labels)

    def __repr__(self):
        return f"LabelVector(n={self.n}, k={self.k}, labels={self.labels.tolist()[:12]}...)"


class QueryKind(enum.Enum):
    """Query function Q applied to the labels a query lists."""

    XOR = "xor"
    AND = "and"
    KARY_AND = "kary_and"

    @property
    def binary_only(self):
        return self in (QueryKind.XOR, QueryKind.AND)

    def answer_alphabet(self, k):
        return 2 if self.binary_only else k


class QueryGraph:
    """m queries over n elements, each query listing between 2 and delta_max indices.

    Rows are index tuples; a row may repeat an index (XOR ensembles with
    parallel stubs). Two rows with the same index multiset are rejected.
    Equal-length rows are held as one read-only (m, w) array; ragged XOR
    rows are held as tuples.
    """

    def __init__(self, n, queries, kind, delta_max):
        self.n = int(n)
        self.kind = QueryKind(kind)
        self.delta_max = int(delta_max)
        if self.n < 1:
            raise ValidationError("a query graph needs n >= 1")
        if self.delta_max < 2:
            raise ValidationError("delta_max must be at least 2")
        if isinstance(queries, np.ndarray) and queries.ndim == 2:
            rows, tuples = np.array(queries, dtype=np.int64), None
        else:
            tuples = tuple(tuple(int(i) for i in q) for q in queries)
            widths = {len(q) for q in tuples}
            if len(widths) <= 1:
                width = widths.pop() if widths else 2
                rows = np.array(tuples, dtype=np.int64).reshape(len(tuples), width)
            else:
                rows = None
        if rows is not None:
            rows.flags.writeable = False
            self._check_uniform(rows)
        else:
            self._check_ragged(tuples)
        self._rows = rows
        self._tuples = tuples

    def _check_uniform(self, rows):
        m, w = rows.shape
        if m == 0:
            return
        if not 2 <= w <= self.delta_max:
            raise ValidationError(f"query 0 has {w} indices, allowed [2, {self.delta_max}]")
        bad = np.flatnonzero((rows.min(axis=1) < 0) | (rows.max(axis=1) >= self.n))
        if bad.size:
            raise ValidationError(f"query {bad[0]} has an index outside [0, {self.n})")
        if self.kind is not QueryKind.XOR and w != 2:
            raise ValidationError(f"{self.kind.value} queries must be pairwise")
        srt = np.sort(rows, axis=1)
        if w == 2:
            codes = srt[:, 0] * self.n + srt[:, 1]
            ordered = np.sort(codes)
            if np.all(ordered[1:] != ordered[:-1]):
                return
            _, first = np.unique(codes, return_index=True)
        else:
            _, first = np.unique(srt, axis=0, return_index=True)
        if first.size != m:
            dup = int(np.setdiff1d(np.arange(m), first)[0])
            raise ValidationError(f"query {dup} repeats an earlier query {tuple(srt[dup].tolist())}")

    def _check_ragged(self, rows):
        seen = set()
        for j, q in enumerate(rows):
            if not 2 <= len(q) <= self.delta_max:
                raise ValidationError(f"query {j} has {len(q)} indices, allowed [2, {self.delta_max}]")
            if min(q) < 0 or max(q) >= self.n:
                raise ValidationError(f"query {j} has an index outside [0, {self.n})")
            key = tuple(sorted(q))
            if key in seen:
                raise ValidationError(f"query {j} repeats an earlier query {key}")
            seen.add(key)
        if self.kind is not QueryKind.XOR:
            raise ValidationError(f"{self.kind.value} queries must be pairwise")

    @classmethod
    def from_array(cls, n, rows, kind, delta_max=None):
        rows = np.asarray(rows, dtype=np.int64)
        if rows.ndim != 2:
            rows = rows.reshape(0, 2)
        width = rows.shape[1] if delta_max is None else delta_max
        return cls(n, rows, kind, max(width, 2))

    @property
    def queries(self):
        """Rows as a tuple of index tuples."""
        if self._tuples is None:
            self._tuples = tuple(map(tuple, self._rows.tolist()))
        return self._tuples

    @property
    def m(self):
        return len(self._rows) if self._rows is not None else len(self._tuples)

    def __len__(self):
        return self.m

    @property
    def array(self):
        """Queries as an (m, w) int array; only for equal-length rows."""
        if self._rows is None:
            raise ValidationError("ragged query graph has no array view")
        return self._rows

    def degrees(self):
        """Number of query slots each element occupies."""
        if self._rows is not None:
            return np.bincount(self._rows.ravel(), minlength=self.n)
        flat = np.fromiter((i for q in self._tuples for i in q), dtype=np.int64)
        return np.bincount(flat, minlength=self.n)

    def is_regular(self):
        deg = self.degrees()
        return bool(np.all(deg == deg[0]))

    def __eq__(self, other):
        if not isinstance(other, QueryGraph):
            return NotImplemented
        if (self.n, self.kind, self.delta_max, self.m) != (other.n, other.kind, other.delta_max, other.m):
            return False
        if self._rows is not None and other._rows is not None:
            return self._rows.shape == other._rows.shape and bool(np.array_equal(self._rows, other._rows))
        return self.queries == other.queries

    __hash__ = None

    def __repr__(self):
        return f"QueryGraph(n={self.n}, m={self.m}, kind={self.kind.value}, delta_max={self.delta_max})"


@dataclass(frozen=True)
class NoiseModel:
    """Each answer kept with probability 1 - q, else a uniform wrong symbol."""

    q: float
    k: int = 2

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise DomainError(f"noise level q must lie in [0, 1], got {self.q}")
        if self.k < 2:
            raise DomainError("noise alphabet needs k >= 2")

    def channel_matrix(self):
        """Row t is the distribution of the observed symbol given true symbol t."""
        off = self.q / (self.k - 1)
        mat = np.full((self.k, self.k), off)
        np.fill_diagonal(mat, 1.0 - self.q)
        return mat


@dataclass(frozen=True, eq=False)
class AnswerVector:
    answers: np.ndarray
    k: int = 2

    def __post_init__(self):
        arr = _frozen_array(self.answers)
        if arr.ndim != 1:
            raise ValidationError("answers must be one-dimensional")
        if arr.size and (arr.min() < 0 or arr.max() >= self.k):
            raise ValidationError(f"answers must lie in [0, {self.k})")
        object.__setattr__(self, "answers", arr)

    @property
    def m(self):
        return int(self.answers.size)

    def __len__(self):
        return self.m

    def __eq__(self, other):
        if not isinstance(other, AnswerVector):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.answers, other.answers)


def sample_labels(prior: Prior, n: int, seed) -> LabelVector:
    """n i.i.d. draws from ``prior``."""
    if n < 1:
        raise DomainError("n must be at least 1")
    rng = np.random.default_rng(seed)
    probs = prior.as_array()
    labels = rng.choice(prior.k, size=n, p=probs / probs.sum())
    return LabelVector(labels, prior.k)


def labels_from_sizes(sizes: Sequence[int], seed) -> LabelVector:
    """A uniformly random arrangement of sizes[i] copies of label i."""
    sizes = [int(s) for s in sizes]
    if any(s < 0 for s in sizes):
        raise DomainError(f"cluster sizes must be non-negative, got {sizes}")
    if sum(sizes) < 1:
        raise DomainError("cluster sizes must sum to at least 1")
    base = np.repeat(np.arange(len(sizes)), sizes)
    rng = np.random.default_rng(seed)
    return LabelVector(rng.permutation(base), max(len(sizes), 2))


def hamming_distortion(x: LabelVector, y: LabelVector) -> float:
    """Fraction of positions where the two label vectors differ."""
    if x.n != y.n:
        raise ValidationError(f"length mismatch: {x.n} vs {y.n}")
    if x.k != y.k:
        raise ValidationError(f"alphabet mismatch: {x.k} vs {y.k}")
    return float(np.count_nonzero(x.labels != y.labels)) / x.n
