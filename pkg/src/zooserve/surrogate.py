"""Regression forests mapping selectors to predicted accuracy or latency.

Each tree is trained on a bootstrap resample with sqrt-feature subsampling
and variance-reduction splits; the forest prediction is the mean of tree
means, so it can never leave the range of the training targets.  Per-tree
seeds derive from the master seed, so tree construction could run in
parallel without changing results.  Individual trees are scikit-learn
regression trees; bootstrapping, seeding and aggregation live here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.tree import DecisionTreeRegressor

from .zoo import Selector

DEFAULT_N_TREES = 64
DEFAULT_MIN_LEAF = 2


def _features(selectors: Sequence[Selector], macs: np.ndarray | None) -> np.ndarray:
    x = np.array([s.bits for s in selectors], dtype=np.float32)
    if macs is not None:
        pop = x.sum(axis=1, keepdims=True)
        cost = x @ macs.astype(np.float32)[:, None]
        x = np.hstack([x, pop, cost])
    return np.ascontiguousarray(x)


@dataclass(frozen=True)
class RegressionForest:
    trees: tuple[DecisionTreeRegressor, ...]
    n_trees: int
    min_leaf: int
    seed: int
    n_inputs: int
    macs: np.ndarray | None   # set when (popcount, total macs) are appended

    def predict_matrix(self, x: np.ndarray) -> np.ndarray:
        total = np.zeros(x.shape[0])
        for tree in self.trees:
            total += tree.predict(x, check_input=False)
        return total / len(self.trees)


def fit_forest(data: Sequence[tuple[Selector, float]], n_trees: int = DEFAULT_N_TREES,
               min_leaf: int = DEFAULT_MIN_LEAF, seed: int = 0,
               bootstrap: bool = True, macs: np.ndarray | None = None) -> RegressionForest:
    """Fit a forest on (selector, target) pairs; deterministic per seed."""
    if not data:
        raise ValueError("need at least one training pair")
    if n_trees < 1 or min_leaf < 1:
        raise ValueError("n_trees and min_leaf must be >= 1")
    selectors = [b for b, _ in data]
    n_inputs = selectors[0].n
    if any(b.n != n_inputs for b in selectors):
        raise ValueError("all training selectors must have the same length")

    x = _features(selectors, macs)
    y = np.array([t for _, t in data], dtype=np.float64)
    n = len(y)

    # One state per bootstrap draw and one per tree: derived up front so the
    # trees are independent of construction order.
    states = np.random.SeedSequence(seed).generate_state(2 * n_trees, np.uint64)
    trees = []
    for k in range(n_trees):
        if bootstrap:
            idx = np.random.default_rng(states[2 * k]).integers(0, n, n)
            xs, ys = x[idx], y[idx]
        else:
            xs, ys = x, y
        tree = DecisionTreeRegressor(
            min_samples_leaf=min_leaf,
            max_features="sqrt",
            random_state=int(states[2 * k + 1] % np.uint64(2**31)),
        )
        tree.fit(xs, ys, check_input=False)
        trees.append(tree)
    return RegressionForest(trees=tuple(trees), n_trees=n_trees, min_leaf=min_leaf,
                            seed=seed, n_inputs=n_inputs, macs=macs)


def predict(forest: RegressionForest, b: Selector) -> float:
    return float(predict_batch(forest, [b])[0])


def predict_batch(forest: RegressionForest, selectors: Sequence[Selector]) -> np.ndarray:
    if any(b.n != forest.n_inputs for b in selectors):
        raise ValueError(f"selector length does not match training length "
                         f"{forest.n_inputs}")
    return forest.predict_matrix(_features(selectors, forest.macs))
