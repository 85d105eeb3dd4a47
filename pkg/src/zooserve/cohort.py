"""Synthetic labeled cohort and the ensemble accuracy profiler.

Scores follow a binormal model: a negative sample's latent score for model
j is N(0, 1); a positive's is N(mu_j, 1) with mu_j = sqrt(2) * Phi^-1(auc_j),
so each column's standalone ROC-AUC matches the profile's target_auc.  A
shared per-sample factor with weight ``correlation`` correlates columns, so
ensembling helps with diminishing returns.  Ensembles average the latent
scores of the selected models; thresholded metrics see the logistic map of
that average, making 0.5 a meaningful operating point.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import EmptyEnsembleError
from .metrics import f1_accuracy, pr_auc, roc_auc
from .zoo import ModelZoo, Selector

_STD_NORMAL = NormalDist()


def positive_shift(target_auc: float) -> float:
    """Latent mean separating positives from negatives for a given AUC."""
    return float(np.sqrt(2.0) * _STD_NORMAL.inv_cdf(target_auc))


@dataclass(frozen=True)
class Cohort:
    """Labels plus one latent score column per zoo model."""

    labels: np.ndarray
    scores: np.ndarray
    seed: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int8)
        scores = np.asarray(self.scores, dtype=np.float64)
        if labels.ndim != 1 or scores.ndim != 2 or scores.shape[0] != labels.size:
            raise ValueError("labels must be 1-D and scores (n_samples, n_models)")
        if labels.min() == labels.max():
            raise ValueError("cohort needs both classes present")
        if not np.isfinite(scores).all():
            raise ValueError("scores must be finite")
        labels.setflags(write=False)
        scores.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "scores", scores)

    @property
    def n_models(self) -> int:
        return self.scores.shape[1]


@dataclass(frozen=True)
class AccuracyReport:
    roc_auc: float
    pr_auc: float
    f1: float
    accuracy: float


def synthesize_cohort(zoo: ModelZoo, n_pos: int, n_neg: int,
                      correlation: float = 0.5, seed: int = 0) -> Cohort:
    """Draw a labeled cohort whose columns realize the zoo's target AUCs."""
    if n_pos < 1 or n_neg < 1:
        raise ValueError("n_pos and n_neg must be >= 1")
    if not 0.0 <= correlation < 1.0:
        raise ValueError("correlation must lie in [0, 1)")
    mu = np.array([positive_shift(p.target_auc) for p in zoo.profiles])
    rng = np.random.default_rng(seed)
    n = n_pos + n_neg
    labels = np.concatenate([np.ones(n_pos, dtype=np.int8),
                             np.zeros(n_neg, dtype=np.int8)])
    shared = rng.standard_normal((n, 1))
    private = rng.standard_normal((n, zoo.n))
    # Unit-variance latent: correlation splits variance between the shared
    # factor and per-model noise, leaving each column's AUC unchanged.
    scores = (mu[None, :] * labels[:, None]
              + np.sqrt(correlation) * shared
              + np.sqrt(1.0 - correlation) * private)
    return Cohort(labels=labels, scores=scores, seed=seed)


def ensemble_scores(cohort: Cohort, b: Selector) -> np.ndarray:
    """Per-sample mean of the selected models' latent scores."""
    if b.n != cohort.n_models:
        raise ValueError(f"selector length {b.n} does not match cohort width "
                         f"{cohort.n_models}")
    idx = b.indices()
    if not idx:
        raise EmptyEnsembleError("cannot score an empty ensemble")
    return cohort.scores[:, idx].mean(axis=1)


def ensemble_roc_auc(cohort: Cohort, b: Selector) -> float:
    """ROC-AUC of the bagged ensemble; the accuracy profiler's headline value."""
    return roc_auc(cohort.labels, ensemble_scores(cohort, b))


def accuracy_profile(cohort: Cohort, b: Selector) -> AccuracyReport:
    """All four classification metrics for the bagged ensemble."""
    latent = ensemble_scores(cohort, b)
    prob = 1.0 / (1.0 + np.exp(-latent))
    f1, acc = f1_accuracy(cohort.labels, prob, threshold=0.5)
    return AccuracyReport(
        roc_auc=roc_auc(cohort.labels, prob),
        pr_auc=pr_auc(cohort.labels, prob),
        f1=f1,
        accuracy=acc,
    )


def save_cohort_csv(cohort: Cohort, path) -> None:
    """Dump as CSV with header label,score_0,...,score_{n-1}."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label"] + [f"score_{j}" for j in range(cohort.n_models)])
        for label, row in zip(cohort.labels, cohort.scores):
            writer.writerow([int(label)] + [repr(float(v)) for v in row])
