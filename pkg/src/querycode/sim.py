"""Seeded Monte Carlo harness over schemes, oracle and decoders.

Trial t of an experiment uses seed ``base_seed + t``; the seed is split
into independent streams for labels, scheme and noise, so results do not
depend on the order or concurrency in which trials run.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import decoders, schemes
from .bounds import BoundCurve, alg1_exact_error
from .errors import DecodeFailure, DomainError, ValidationError
from .model import (
    AnswerVector,
    LabelVector,
    NoiseModel,
    Prior,
    hamming_distortion,
    labels_from_sizes,
    sample_labels,
)
from .oracle import answer

SCHEMES = ("group", "xor", "and", "ring")
DECODER_FOR = {
    "group": "group_same_cluster",
    "xor": "xor_typical",
    "and": "and_onehop",
    "ring": "threshold_alg1",
}
SWEEP_AXES = ("m", "d", "q", "p", "dtilde", "T")


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo experiment.

    Scheme parameters: ``m`` (and), ``d`` (ring degree, or group count for
    the group scheme via ``d_override``), ``c``/``delta`` (xor).
    ``more_than`` sets the survey-style rule "more than T answers equal to
    i"; ``threshold_override`` sets per-label ">= t" cutoffs directly.
    """

    scheme: str
    n: int
    prior: tuple = (0.5, 0.5)
    q: float = 0.0
    trials: int = 200
    base_seed: int = 0
    m: int | None = None
    d: int | None = None
    c: int | None = None
    delta: int | None = None
    d_override: int | None = None
    decoder: str | None = None
    threshold_override: tuple | None = None
    more_than: int | None = None
    dtilde: int | None = None
    subsample: str = "nearest"
    sizes: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "prior", tuple(float(x) for x in self.prior))
        if self.threshold_override is not None and not isinstance(self.threshold_override, int):
            object.__setattr__(self, "threshold_override", tuple(int(t) for t in self.threshold_override))
        if self.sizes is not None:
            object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))

    @property
    def prior_obj(self):
        if self.sizes is not None:
            return Prior.from_sizes(self.sizes)
        return Prior(self.prior)

    @property
    def p(self):
        """P(label = 1) for binary configurations."""
        return self.prior_obj[1]

    def validate(self):
        if self.scheme not in SCHEMES:
            raise ValidationError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.trials < 1:
            raise ValidationError("trials must be at least 1")
        if self.n < 2:
            raise ValidationError("n must be at least 2")
        if not 0.0 <= self.q <= 1.0:
            raise ValidationError("q must lie in [0, 1]")
        expected = DECODER_FOR[self.scheme]
        if self.decoder is not None and self.decoder != expected:
            raise ValidationError(
                f"decoder {self.decoder!r} is incompatible with scheme {self.scheme!r} (needs {expected!r})")
        prior = self.prior_obj
        if self.sizes is not None and sum(self.sizes) != self.n:
            raise ValidationError(f"cluster sizes sum to {sum(self.sizes)}, expected n={self.n}")
        if self.scheme != "ring" and prior.k != 2:
            raise ValidationError(f"scheme {self.scheme!r} needs binary labels")
        if self.scheme == "and" and self.m is None:
            raise ValidationError("and scheme needs m")
        if self.scheme == "ring":
            if self.d is None:
                raise ValidationError("ring scheme needs d")
            if self.dtilde is not None and (self.dtilde % 2 or not 0 < self.dtilde <= self.d):
                raise ValidationError("dtilde must be even and in (0, d]")
        if self.scheme == "xor" and (self.c is None or self.delta is None):
            raise ValidationError("xor scheme needs c and delta")
        if self.scheme in ("group", "xor") and self.q != 0.0:
            raise ValidationError(f"{self.scheme} decoding assumes noiseless answers")
        return self

    def thresholds(self):
        if self.more_than is not None:
            return int(self.more_than) + 1
        return self.threshold_override

    def semantic_dict(self):
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class SimResult:
    mean_distortion: float
    std_error: float
    exact_recovery_rate: float
    queries_used: int
    rows: tuple  # (trial_index, distortion, exact)


def _streams(seed):
    return np.random.SeedSequence(seed).spawn(4)


def build_instance(config: ExperimentConfig, trial_index: int):
    """Labels, graph and answers for one trial."""
    ss_labels, ss_scheme, ss_noise, ss_sub = _streams(config.base_seed + trial_index)
    prior = config.prior_obj
    if config.sizes is not None:
        labels = labels_from_sizes(config.sizes, ss_labels)
    else:
        labels = sample_labels(prior, config.n, ss_labels)
    if config.scheme == "group":
        graph = schemes.build_group_scheme(config.n, config.p, config.d_override)
    elif config.scheme == "xor":
        graph = schemes.build_xor_ensemble(config.n, config.c, config.delta, ss_scheme)
    elif config.scheme == "and":
        graph = schemes.build_random_and_scheme(config.n, config.m, ss_scheme)
    else:
        graph = schemes.build_ring_regular_scheme(config.n, config.d, ss_scheme)
    noise = NoiseModel(config.q, graph.kind.answer_alphabet(prior.k)) if config.q > 0 else None
    answers = answer(graph, labels, noise, ss_noise)
    if config.scheme == "ring" and config.dtilde is not None and config.dtilde != config.d:
        graph, keep = schemes.subsample_ring(graph, config.d, config.dtilde, config.subsample, ss_sub)
        answers = AnswerVector(answers.answers[keep], answers.k)
    return labels, graph, answers


def decode(config: ExperimentConfig, graph, answers):
    prior = config.prior_obj
    if config.scheme == "group":
        return decoders.decode_group_same_cluster(graph, answers, config.p)
    if config.scheme == "xor":
        return decoders.decode_xor_typical(graph, answers, config.p)
    if config.scheme == "and":
        return decoders.decode_and_onehop(graph, answers)
    return decoders.decode_threshold_alg1(graph, answers, prior, config.q, config.thresholds())


def run_trial(config: ExperimentConfig, trial_index: int):
    """(distortion, exact_flag, queries) for one seeded trial.

    A typical-set decoding failure counts as the all-zero estimate.
    """
    labels, graph, answers = build_instance(config, trial_index)
    try:
        est = decode(config, graph, answers).labels
    except DecodeFailure:
        est = LabelVector(np.zeros(labels.n, dtype=np.int64), labels.k)
    dist = hamming_distortion(labels, est)
    return dist, dist == 0.0, graph.m


def run_experiment(config: ExperimentConfig, workers: int = 1) -> SimResult:
    config.validate()
    idx = range(config.trials)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(lambda t: run_trial(config, t), idx))
    else:
        out = [run_trial(config, t) for t in idx]
    dist = np.array([o[0] for o in out])
    mean = float(math.fsum(dist) / dist.size)
    se = float(dist.std(ddof=1) / math.sqrt(dist.size)) if dist.size > 1 else 0.0
    exact = float(np.mean([o[1] for o in out]))
    rows = tuple((t, float(o[0]), bool(o[1])) for t, o in zip(idx, out))
    return SimResult(mean, se, exact, int(out[0][2]), rows)


def with_axis(config: ExperimentConfig, axis: str, value):
    if axis not in SWEEP_AXES:
        raise ValidationError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    if axis == "p":
        return dataclasses.replace(config, prior=(1.0 - float(value), float(value)), sizes=None)
    if axis == "T":
        return dataclasses.replace(config, more_than=int(value))
    if axis == "q":
        return dataclasses.replace(config, q=float(value))
    if axis == "d" and config.scheme == "group":
        return dataclasses.replace(config, d_override=int(value))
    return dataclasses.replace(config, **{axis: int(value)})


@dataclass(frozen=True)
class SweepRow:
    axis_value: float
    mean_distortion: float
    std_error: float
    exact_rate: float
    queries: int


def sweep(config: ExperimentConfig, axis: str, grid, workers: int = 1):
    """One SimResult row per grid value; every point reuses the same base seed."""
    if axis not in SWEEP_AXES:
        raise ValidationError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    rows = []
    for value in grid:
        res = run_experiment(with_axis(config, axis, value), workers=workers)
        rows.append(SweepRow(value, res.mean_distortion, res.std_error, res.exact_recovery_rate, res.queries_used))
    return rows


@dataclass(frozen=True)
class SurveyRow:
    dtilde: int
    threshold: str
    queries: int
    distortion: float
    exact_error: float


def survey_replication(n, d, q, thresholds, dtilde_grid, seed, sizes=None, subsample="nearest"):
    """Crowdsourcing-style replication on one ring graph and one noisy answer sheet.

    The graph is built and answered once. For each dtilde the nearest
    dtilde/2 queries per side are kept, and each threshold T labels an
    element i when more than T of its kept answers equal i (T = None uses
    the ceil(C_i) cutoffs). ``exact_error`` is the closed-form error of the
    same rule at that degree.
    """
    if d % 2:
        raise DomainError("survey replication needs an even degree")
    for dt in dtilde_grid:
        if dt % 2:
            raise DomainError(f"dtilde must be even, got {dt}")
        if not 0 < dt <= d:
            raise DomainError(f"dtilde must lie in (0, {d}], got {dt}")
    if sizes is None:
        sizes = (n - n // 2, n // 2)
    sizes = tuple(int(s) for s in sizes)
    if sum(sizes) != n:
        raise DomainError("cluster sizes must sum to n")
    prior = Prior.from_sizes(sizes)
    ss_labels, ss_scheme, ss_noise, ss_sub = _streams(seed)
    labels = labels_from_sizes(sizes, ss_labels)
    graph = schemes.build_ring_regular_scheme(n, d, ss_scheme)
    answers = answer(graph, labels, NoiseModel(q, prior.k) if q > 0 else None, ss_noise)
    rows = []
    for dt in dtilde_grid:
        if dt == d:
            sub, sub_answers = graph, answers
        else:
            sub, keep = schemes.subsample_ring(graph, d, dt, subsample, ss_sub)
            sub_answers = AnswerVector(answers.answers[keep], answers.k)
        for T in thresholds:
            override = None if T is None else int(T) + 1
            rep = decoders.decode_threshold_alg1(sub, sub_answers, prior, q, override)
            exact = alg1_exact_error(prior, q, dt, override)[0]
            label = "formula" if T is None else f"more-than-{int(T)}"
            rows.append(SurveyRow(dt, label, sub.m, hamming_distortion(labels, rep.labels), exact))
    return rows


def sweep_curve(rows, name="simulation"):
    """Sweep rows as a BoundCurve (abscissa = axis value, value = mean distortion)."""
    return BoundCurve(name, tuple((r.axis_value, r.mean_distortion, True) for r in rows),
                      ("axis", "distortion fraction"))
