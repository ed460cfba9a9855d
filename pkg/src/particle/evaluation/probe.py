"""Linear probing of frozen features with multinomial logistic regression."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from sklearn.linear_model import LogisticRegression

from ..errors import DataError

C_GRID = (1.0, 0.1, 0.01)


@dataclass
class ProbeResult:
    accuracy: float
    per_class_accuracy: np.ndarray
    feature_dim: int
    n_train: int
    n_val: int
    n_test: int
    chosen_c: float = 1.0
    val_accuracy: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError(f"accuracy out of range: {self.accuracy}")


def _check_inputs(x, y, name: str):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    if x.ndim != 2:
        raise ValueError(f"{name} features must be 2-d, got {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError(f"{name} features contain non-finite values")
    if len(x) != len(y):
        raise ValueError(f"{name}: {len(x)} feature rows but {len(y)} labels")
    return x, y


def linear_probe(
    features_train, labels_train,
    features_val, labels_val,
    features_test, labels_test,
    c_grid: Tuple[float, ...] = C_GRID,
    seed: int = 0,
) -> ProbeResult:
    """Fit L-BFGS logistic regression (max 1000 iterations) at each
    regularization setting, keep the one with the best validation accuracy,
    and report its test accuracy. No data augmentation is involved."""
    x_tr, y_tr = _check_inputs(features_train, labels_train, "train")
    x_va, y_va = _check_inputs(features_val, labels_val, "val")
    x_te, y_te = _check_inputs(features_test, labels_test, "test")

    train_classes = set(int(c) for c in np.unique(y_tr))
    if len(train_classes) < 2:
        raise DataError(f"need at least 2 training classes, got {sorted(train_classes)}")
    for split_name, labels in (("val", y_va), ("test", y_te)):
        missing = sorted(set(int(c) for c in np.unique(labels)) - train_classes)
        if missing:
            raise DataError(
                f"class {missing[0]} appears in {split_name} but not in training")

    best = None
    for c in c_grid:
        clf = LogisticRegression(
            solver="lbfgs", max_iter=1000, C=c, random_state=seed)
        clf.fit(x_tr, y_tr)
        val_acc = float((clf.predict(x_va) == y_va).mean())
        if best is None or val_acc > best[0]:
            best = (val_acc, c, clf)
    val_acc, chosen_c, clf = best

    pred = clf.predict(x_te)
    accuracy = float((pred == y_te).mean())
    classes = np.array(sorted(train_classes))
    per_class = np.full(len(classes), np.nan)
    for i, cls in enumerate(classes):
        sel = y_te == cls
        if sel.any():
            per_class[i] = float((pred[sel] == cls).mean())
    return ProbeResult(
        accuracy=accuracy,
        per_class_accuracy=per_class,
        feature_dim=x_tr.shape[1],
        n_train=len(x_tr),
        n_val=len(x_va),
        n_test=len(x_te),
        chosen_c=chosen_c,
        val_accuracy=val_acc,
    )
