"""
Tensor datasets and preprocessing: normalization, delay embedding, temporal split.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from errors import StructureMismatchError
from tensors.network import as_dense

logger = logging.getLogger(__name__)

SPLITS = ("train", "test", "unsplit")


@dataclass
class TensorDataset:
    """L same-shape samples stacked along a leading axis."""

    samples: np.ndarray
    split: str = "unsplit"
    mode_names: Optional[list[str]] = None
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim < 2 or samples.shape[0] < 1:
            raise StructureMismatchError(
                f"A dataset needs at least one sample of order >= 1, got array of shape {samples.shape}"
            )
        as_dense(samples)
        if self.split not in SPLITS:
            raise ValueError(f"Unknown split tag {self.split!r}; expected one of {SPLITS}")
        if self.mode_names is not None and len(self.mode_names) != samples.ndim - 1:
            raise StructureMismatchError(
                f"{len(self.mode_names)} mode names for a tensor of order {samples.ndim - 1}"
            )
        self.samples = samples

    @classmethod
    def from_samples(cls, samples: Sequence[np.ndarray], **kwargs) -> "TensorDataset":
        if not samples:
            raise StructureMismatchError("A dataset needs at least one sample")
        shapes = {np.shape(s) for s in samples}
        if len(shapes) != 1:
            raise StructureMismatchError(f"Samples have differing shapes: {sorted(shapes)}")
        return cls(np.stack([np.asarray(s, dtype=np.float64) for s in samples]), **kwargs)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.samples.shape[1:])

    @property
    def order(self) -> int:
        return self.samples.ndim - 1

    @property
    def num_samples(self) -> int:
        return self.samples.shape[0]

    def __len__(self) -> int:
        return self.num_samples

    def __getitem__(self, index: int) -> np.ndarray:
        return self.samples[index]

    def __iter__(self):
        return iter(self.samples)

    def subset(self, indices, split: Optional[str] = None) -> "TensorDataset":
        return TensorDataset(
            self.samples[indices].copy(),
            split=split or self.split,
            mode_names=self.mode_names,
            metadata=dict(self.metadata),
        )


def delay_embed(series: np.ndarray, axis: int, window: int, stride: int = 1) -> TensorDataset:
    """
    Multi-way delay embedding along `axis`.

    Sample k covers indices [k*stride, k*stride + window) on `axis`, which becomes the
    last mode of each sample. Samples keep temporal order.
    """
    series = as_dense(series)
    if not -series.ndim <= axis < series.ndim:
        raise ValueError(f"Axis {axis} is invalid for a tensor of order {series.ndim}")
    axis %= series.ndim
    length = series.shape[axis]
    if not 1 <= window <= length:
        raise ValueError(f"Window {window} must be between 1 and the axis length {length}")
    if stride < 1:
        raise ValueError(f"Stride must be >= 1, got {stride}")

    count = (length - window) // stride + 1
    moved = np.moveaxis(series, axis, -1)
    samples = [moved[..., k * stride:k * stride + window] for k in range(count)]
    logger.debug(f"Delay embedding: {length} steps -> {count} windows of {window}")
    return TensorDataset(np.stack(samples), metadata={"window": window, "stride": stride})


def minmax_normalize(dataset: TensorDataset, preserve_zero: bool = False) -> TensorDataset:
    """
    Global affine map of every entry into [0, 1].

    The dataset-wide minimum goes to 0 and the maximum to 1; a constant dataset maps to
    all zeros. With `preserve_zero` the lower anchor is min(0, global min), so non-negative
    data is only rescaled.
    """
    lo = float(dataset.samples.min())
    hi = float(dataset.samples.max())
    if preserve_zero:
        lo = min(0.0, lo)
    span = hi - lo
    if span == 0.0:
        scaled = np.zeros_like(dataset.samples)
    else:
        scaled = (dataset.samples - lo) / span
    metadata = dict(dataset.metadata)
    metadata["normalization"] = {"min": lo, "max": hi}
    return TensorDataset(scaled, split=dataset.split, mode_names=dataset.mode_names, metadata=metadata)


def split_dataset(dataset: TensorDataset, train_fraction: float = 0.8) -> tuple[TensorDataset, TensorDataset]:
    """Order-preserving split: the first ceil(fraction * L) samples train, the rest test."""
    total = dataset.num_samples
    if total < 2:
        raise ValueError(f"Splitting needs at least 2 samples, got {total}")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"Train fraction must lie in (0, 1), got {train_fraction}")
    n_train = math.ceil(round(train_fraction * total, 9))
    n_train = min(max(n_train, 1), total - 1)
    train = dataset.subset(slice(0, n_train), split="train")
    test = dataset.subset(slice(n_train, total), split="test")
    logger.info(f"[DATA] Split {total} samples -> {train.num_samples} train / {test.num_samples} test")
    return train, test
