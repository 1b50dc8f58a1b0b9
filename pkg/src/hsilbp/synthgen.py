"""Synthetic hyperspectral scenes with spatially coherent class maps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate

from hsilbp._seeding import rng_for
from hsilbp.errors import GenerationFailureError
from hsilbp.hsidata import LabelField

MAX_RETRIES = 100


@dataclass(frozen=True)
class SceneSpec:
    height: int = 64
    width: int = 64
    bands: int = 32
    classes: int = 4
    smoothing_passes: int = 5
    noise_sigma: float = 0.35
    background_fraction: float = 0.1
    seed: int = 0
    vote_radius: int = 2

    def __post_init__(self):
        if self.classes < 2:
            raise ValueError("need at least two classes")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        if not 0.0 <= self.background_fraction < 1.0:
            raise ValueError("background_fraction must lie in [0, 1)")
        if min(self.height, self.width, self.bands) < 1:
            raise ValueError("height, width and bands must be >= 1")
        if self.vote_radius < 0:
            raise ValueError("vote_radius must be nonnegative")


def _vote_footprint(radius):
    if radius == 0:
        return np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]])
    return np.ones((2 * radius + 1, 2 * radius + 1), dtype=np.int64)


def majority_pass(labels, M, radius=2):
    """One synchronous majority vote; ties keep the current label.

    ``radius=0`` votes over the four edge neighbours only (this freezes at
    roughly 0.72 same-label adjacency for M=4). ``radius>=1`` votes over the
    (2r+1) x (2r+1) square around the pixel, pixel included.
    Out-of-image positions cast no vote.
    """
    footprint = _vote_footprint(radius)
    votes = np.stack([
        correlate((labels == c).astype(np.int64), footprint, mode="constant", cval=0)
        for c in range(1, M + 1)
    ])
    best = votes.max(axis=0)
    winners = (votes == best).sum(axis=0)
    return np.where(winners == 1, votes.argmax(axis=0) + 1, labels)


def gen_label_map(spec):
    total = spec.height * spec.width
    n_bg = int(round(spec.background_fraction * total))
    for attempt in range(MAX_RETRIES):
        rng = rng_for(spec.seed, 0, attempt)
        labels = rng.integers(1, spec.classes + 1, size=(spec.height, spec.width))
        for _ in range(spec.smoothing_passes):
            labels = majority_pass(labels, spec.classes, spec.vote_radius)
        if n_bg:
            bg = rng.choice(total, size=n_bg, replace=False)
            labels.ravel()[bg] = 0
        if np.unique(labels[labels > 0]).size == spec.classes:
            return LabelField(labels, spec.classes)
    raise GenerationFailureError(f"could not realize all {spec.classes} classes in {MAX_RETRIES} attempts")


def class_signatures(spec):
    return rng_for(spec.seed, 1).uniform(0.2, 1.0, size=(spec.classes, spec.bands))


def gen_cube(labels, spec):
    """Class signature plus Gaussian noise per pixel, clamped at 0.

    Background pixels carry the mean signature plus noise.
    """
    sig = class_signatures(spec)
    lab = labels.labels if isinstance(labels, LabelField) else np.asarray(labels)
    table = np.vstack([sig.mean(axis=0), sig])
    noise = rng_for(spec.seed, 2).normal(0.0, 1.0, size=lab.shape + (spec.bands,))
    return np.maximum(table[lab] + spec.noise_sigma * noise, 0.0)


def gen_scene(spec):
    labels = gen_label_map(spec)
    return gen_cube(labels, spec), labels


def same_label_fraction(labels):
    """Fraction of 4-adjacent (non-background) pixel pairs sharing a label."""
    lab = labels.labels if isinstance(labels, LabelField) else np.asarray(labels)
    same = total = 0
    for a, b in ((lab[1:, :], lab[:-1, :]), (lab[:, 1:], lab[:, :-1])):
        ok = (a > 0) & (b > 0)
        same += int((a[ok] == b[ok]).sum())
        total += int(ok.sum())
    return same / total if total else float("nan")
