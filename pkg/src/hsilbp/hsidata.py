"""Cube and label data model, max normalization, stratified splits, one-hot targets.

A cube is a plain ``(height, width, bands)`` float array. Labels travel as a
:class:`LabelField`, where 0 marks background and classes run 1..M.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from hsilbp._seeding import rng_for
from hsilbp.errors import (
    DegenerateCubeError,
    InsufficientSamplesError,
    InvalidDimensionError,
    InvalidLabelError,
    MissingClassError,
)


def check_cube(cube):
    """Validate and return ``cube`` as a C-contiguous float64 (H, W, d) array."""
    arr = np.ascontiguousarray(cube, dtype=np.float64)
    if arr.ndim != 3 or min(arr.shape) < 1:
        raise InvalidDimensionError(f"cube must be (H, W, d) with every axis >= 1, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DegenerateCubeError("cube contains NaN or Inf")
    return arr


@dataclass(frozen=True)
class LabelField:
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if arr.ndim != 2 or min(arr.shape) < 1:
            raise InvalidDimensionError(f"labels must be a non-empty 2-D array, got {arr.shape}")
        if not np.issubdtype(arr.dtype, np.integer):
            if not np.all(arr == np.round(arr)):
                raise InvalidLabelError("labels must be integers")
        arr = arr.astype(np.int64)
        if self.num_classes < 1:
            raise InvalidLabelError("num_classes must be >= 1")
        if arr.min() < 0 or arr.max() > self.num_classes:
            raise InvalidLabelError(f"labels must lie in 0..{self.num_classes}")
        arr.setflags(write=False)
        object.__setattr__(self, "labels", arr)

    @property
    def shape(self):
        return self.labels.shape

    @property
    def height(self):
        return self.labels.shape[0]

    @property
    def width(self):
        return self.labels.shape[1]

    def foreground(self):
        """(row, col) coordinates of every non-background pixel, row-major."""
        rows, cols = np.nonzero(self.labels)
        return np.stack([rows, cols], axis=1)

    def at(self, indices):
        indices = np.asarray(indices, dtype=np.int64).reshape(-1, 2)
        return self.labels[indices[:, 0], indices[:, 1]]


@dataclass(frozen=True)
class SampleSplit:
    train_indices: np.ndarray
    test_indices: np.ndarray
    per_class_train_counts: tuple = field(default=())


def normalize(cube):
    """Divide every value by the global maximum of the whole cube.

    Background pixels take part in the maximum; callers apply the result to
    training and test samples alike.
    """
    arr = check_cube(cube)
    peak = arr.max()
    if peak <= 0:
        raise DegenerateCubeError(f"global maximum is {peak}; cannot normalize")
    return arr / peak


def _round_half_up(x):
    return int(math.floor(x + 0.5))


def stratified_split(labels, fraction=None, counts=None, seed=0):
    """Randomly draw training pixels per class; the remaining labeled pixels form the test set.

    Exactly one of ``fraction`` (in (0, 1)) or ``counts`` (a sequence of M
    integers, or a mapping class -> count) must be given. With a fraction,
    class c gets ``max(1, round(fraction * size_c))`` training pixels.
    Each class draws from its own generator, seeded from ``(seed, c)``.
    """
    if not isinstance(labels, LabelField):
        raise TypeError("labels must be a LabelField")
    if (fraction is None) == (counts is None):
        raise ValueError("give exactly one of fraction or counts")
    if fraction is not None and not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    M = labels.num_classes
    if counts is not None:
        if isinstance(counts, dict):
            counts = [counts.get(c, 0) for c in range(1, M + 1)]
        counts = [int(n) for n in counts]
        if len(counts) != M:
            raise ValueError(f"expected {M} per-class counts, got {len(counts)}")

    flat = labels.labels.ravel()
    width = labels.width
    train, test, per_class = [], [], []
    for c in range(1, M + 1):
        members = np.flatnonzero(flat == c)
        size = members.size
        if size == 0:
            raise MissingClassError(f"class {c} has no labeled pixels")
        if counts is not None:
            n_train = counts[c - 1]
            if n_train < 1:
                raise InsufficientSamplesError(f"class {c}: at least one training sample required")
            if n_train > size:
                raise InsufficientSamplesError(f"class {c}: requested {n_train} of {size} pixels")
        else:
            n_train = max(1, _round_half_up(fraction * size))
        order = rng_for(seed, c).permutation(size)
        train.append(members[np.sort(order[:n_train])])
        test.append(members[np.sort(order[n_train:])])
        per_class.append(n_train)

    def coords(chunks):
        flat_idx = np.sort(np.concatenate(chunks))
        return np.stack([flat_idx // width, flat_idx % width], axis=1)

    return SampleSplit(coords(train), coords(test), tuple(per_class))


def one_hot(labels_at, M):
    labels_at = np.asarray(labels_at, dtype=np.int64).ravel()
    if labels_at.size and (labels_at.min() < 1 or labels_at.max() > M):
        raise InvalidLabelError(f"one-hot labels must lie in 1..{M}")
    out = np.zeros((labels_at.size, M))
    out[np.arange(labels_at.size), labels_at - 1] = 1.0
    return out


def extract_samples(cube, indices):
    """Stack the spectra at ``indices`` (list of (row, col)) into an (n, d) matrix."""
    cube = np.asarray(cube)
    idx = np.asarray(indices, dtype=np.int64).reshape(-1, 2)
    h, w = cube.shape[:2]
    if idx.size and (idx.min() < 0 or idx[:, 0].max() >= h or idx[:, 1].max() >= w):
        raise IndexError("pixel coordinate out of bounds")
    return cube[idx[:, 0], idx[:, 1], :].astype(np.float64, copy=False).reshape(len(idx), cube.shape[2])
