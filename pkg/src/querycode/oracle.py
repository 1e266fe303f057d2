"""Noiseless query answers and the independent symmetric noise channel."""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .model import AnswerVector, LabelVector, NoiseModel, QueryGraph, QueryKind


def answer_noiseless(graph: QueryGraph, labels: LabelVector) -> AnswerVector:
    """Apply the graph's query function to every query."""
    if labels.n != graph.n:
        raise ValidationError(f"graph has n={graph.n} but labels have n={labels.n}")
    kind = graph.kind
    if kind.binary_only and labels.k != 2:
        raise ValidationError(f"{kind.value} queries need binary labels, got k={labels.k}")
    k_out = kind.answer_alphabet(labels.k)
    if graph.m == 0:
        return AnswerVector(np.zeros(0, dtype=np.int64), k_out)
    x = labels.labels
    if kind is QueryKind.XOR:
        try:
            sums = x[graph.array].sum(axis=1)
        except ValidationError:
            sums = np.array([x[list(q)].sum() for q in graph.queries])
        return AnswerVector(sums % 2, 2)
    pairs = x[graph.array]
    a, b = pairs[:, 0], pairs[:, 1]
    if kind is QueryKind.AND:
        return AnswerVector((a & b).astype(np.int64), 2)
    return AnswerVector(np.where(a == b, a, 0), k_out)


def apply_noise(answers: AnswerVector, noise: NoiseModel, seed) -> AnswerVector:
    """Replace each answer, independently with probability q, by a uniform wrong symbol."""
    if noise.k != answers.k:
        raise ValidationError(f"noise alphabet {noise.k} does not match answer alphabet {answers.k}")
    rng = np.random.default_rng(seed)
    m, k = answers.m, answers.k
    flip = rng.random(m) < noise.q
    shift = rng.integers(1, k, size=m) if k > 2 else np.ones(m, dtype=np.int64)
    out = np.where(flip, (answers.answers + shift) % k, answers.answers)
    return AnswerVector(out, k)


def answer(graph: QueryGraph, labels: LabelVector, noise: NoiseModel | None = None, seed=None) -> AnswerVector:
    """Noiseless answers passed once through the noise channel (skipped when noise is None)."""
    clean = answer_noiseless(graph, labels)
    if noise is None:
        return clean
    return apply_noise(clean, noise, seed)
