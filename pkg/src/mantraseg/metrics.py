"""Segmentation metrics over an accumulated confusion matrix."""

from __future__ import annotations

import json

import numpy as np

from .errors import EmptyMatrix, IdOutOfRange


class ConfusionMatrix:
    """C x C counts, rows = ground truth, columns = prediction.

    Points with ground truth -1 are ignored.  Mergeable by addition so
    evaluation can shard across scenes.
    """

    def __init__(self, labels):
        self.labels = tuple(labels)
        self.counts = np.zeros((len(self.labels), len(self.labels)), dtype=np.int64)

    @property
    def n_classes(self) -> int:
        return len(self.labels)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def accumulate(self, gt, pred) -> "ConfusionMatrix":
        gt = np.asarray(gt, dtype=np.int64)
        pred = np.asarray(pred, dtype=np.int64)
        if gt.shape != pred.shape:
            raise IdOutOfRange("gt and pred must have the same length")
        c = self.n_classes
        if (gt >= c).any() or (gt < -1).any():
            raise IdOutOfRange(f"gt ids must lie in [-1, {c})")
        keep = gt != -1
        if (pred[keep] >= c).any() or (pred[keep] < 0).any():
            raise IdOutOfRange(f"pred ids must lie in [0, {c})")
        np.add.at(self.counts, (gt[keep], pred[keep]), 1)
        return self

    def merge(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if other.labels != self.labels:
            raise IdOutOfRange("cannot merge matrices over different label sets")
        self.counts += other.counts
        return self

    def _check_nonempty(self):
        if self.total == 0:
            raise EmptyMatrix("no evaluated points")

    def oa(self) -> float:
        self._check_nonempty()
        return float(np.trace(self.counts) / self.total)

    def per_class_recall(self) -> dict[str, float]:
        support = self.counts.sum(axis=1)
        diag = np.diag(self.counts)
        return {
            self.labels[i]: float(diag[i] / support[i])
            for i in range(self.n_classes)
            if support[i] > 0
        }

    def macc(self) -> float:
        """Mean recall over classes that appear in the ground truth."""
        self._check_nonempty()
        recalls = self.per_class_recall()
        return float(np.mean(list(recalls.values())))

    def per_class_iou(self) -> dict[str, float]:
        tp = np.diag(self.counts)
        fp = self.counts.sum(axis=0) - tp
        fn = self.counts.sum(axis=1) - tp
        return {
            self.labels[i]: float(tp[i] / (tp[i] + fp[i] + fn[i]))
            for i in range(self.n_classes)
            if tp[i] + fp[i] + fn[i] > 0
        }

    def miou(self) -> float:
        """Mean IoU over classes with any ground-truth or predicted support."""
        self._check_nonempty()
        ious = self.per_class_iou()
        return float(np.mean(list(ious.values())))

    def report(self) -> dict:
        return {
            "oa": self.oa(),
            "macc": self.macc(),
            "miou": self.miou(),
            "total_points": self.total,
            "per_class_iou": self.per_class_iou(),
            "per_class_recall": self.per_class_recall(),
        }

    def report_json(self) -> str:
        return json.dumps(self.report(), indent=2)
