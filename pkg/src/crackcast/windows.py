"""Sliding-window samples for multi-horizon training.

Each sample pairs a fully observed past (lengths + features) with a
fixed-size future horizon. Series too short to fill the horizon yield a
single window whose missing future steps are zero-padded and masked out;
masked steps are ignored by every loss and metric downstream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .series import RegularSeries

DEFAULT_PAST = 5
DEFAULT_HORIZON = 4

_JSONL_FIELDS = ("defect_id", "past_lengths", "past_features", "future_features", "targets", "mask")


@dataclass
class WindowSample:
    """One training sample; `mask[j]` is False on zero-padded future steps."""

    defect_id: str
    past_lengths: np.ndarray     # (t,)
    past_features: np.ndarray    # (t, M)
    future_features: np.ndarray  # (k, M)
    targets: np.ndarray          # (k,), exactly 0 where masked out
    mask: np.ndarray             # (k,) bool

    def __post_init__(self):
        self.past_lengths = np.asarray(self.past_lengths, dtype=np.float64)
        self.past_features = np.asarray(self.past_features, dtype=np.float64)
        self.future_features = np.asarray(self.future_features, dtype=np.float64)
        self.targets = np.asarray(self.targets, dtype=np.float64)
        self.mask = np.asarray(self.mask, dtype=bool)
        if not self.mask.any():
            raise ValueError("window must contain at least one observed future step")
        if np.any(self.targets[~self.mask] != 0.0):
            raise ValueError("padded targets must be exactly 0")


@dataclass
class WindowBatch:
    """Column-wise view of many windows; the form the model consumes."""

    defect_ids: np.ndarray       # (n,) str
    past_lengths: np.ndarray     # (n, t)
    past_features: np.ndarray    # (n, t, M)
    future_features: np.ndarray  # (n, k, M)
    targets: np.ndarray          # (n, k)
    mask: np.ndarray             # (n, k) bool

    def __len__(self) -> int:
        return self.past_lengths.shape[0]

    @property
    def past_steps(self) -> int:
        return self.past_lengths.shape[1]

    @property
    def horizon(self) -> int:
        return self.targets.shape[1]

    @property
    def feature_dim(self) -> int:
        return self.past_features.shape[2]

    def subset(self, indices) -> "WindowBatch":
        idx = np.asarray(indices)
        return WindowBatch(
            defect_ids=self.defect_ids[idx],
            past_lengths=self.past_lengths[idx],
            past_features=self.past_features[idx],
            future_features=self.future_features[idx],
            targets=self.targets[idx],
            mask=self.mask[idx],
        )

    @classmethod
    def from_samples(cls, samples: list[WindowSample]) -> "WindowBatch":
        if not samples:
            raise ValueError("cannot build a batch from zero windows")
        return cls(
            defect_ids=np.array([s.defect_id for s in samples], dtype=object),
            past_lengths=np.stack([s.past_lengths for s in samples]),
            past_features=np.stack([s.past_features for s in samples]),
            future_features=np.stack([s.future_features for s in samples]),
            targets=np.stack([s.targets for s in samples]),
            mask=np.stack([s.mask for s in samples]),
        )

    def to_samples(self) -> list[WindowSample]:
        return [
            WindowSample(
                defect_id=str(self.defect_ids[i]),
                past_lengths=self.past_lengths[i],
                past_features=self.past_features[i],
                future_features=self.future_features[i],
                targets=self.targets[i],
                mask=self.mask[i],
            )
            for i in range(len(self))
        ]


def make_windows(
    series: RegularSeries,
    past: int = DEFAULT_PAST,
    horizon: int = DEFAULT_HORIZON,
    stride: int = 1,
) -> list[WindowSample]:
    """Slide a (past + horizon) window over the series.

    A series of length T yields max(1, T - past - horizon + 1) offsets at
    stride 1; only the final window of a short series is padded. Series
    with no observable future (T <= past) yield nothing.
    """
    if past < 1 or horizon < 1 or stride < 1:
        raise ValueError("past, horizon and stride must be >= 1")
    T = len(series)
    if T <= past:
        return []
    n_offsets = max(1, T - past - horizon + 1)
    samples = []
    for offset in range(0, n_offsets, stride):
        future_lo = offset + past
        future_hi = min(future_lo + horizon, T)
        n_real = future_hi - future_lo
        targets = np.zeros(horizon, dtype=np.float64)
        targets[:n_real] = series.lengths_mm[future_lo:future_hi]
        mask = np.zeros(horizon, dtype=bool)
        mask[:n_real] = True
        future_features = np.zeros((horizon, series.features.shape[1]), dtype=np.float64)
        future_features[:n_real] = series.features[future_lo:future_hi]
        samples.append(
            WindowSample(
                defect_id=series.defect_id,
                past_lengths=series.lengths_mm[offset:future_lo].copy(),
                past_features=series.features[offset:future_lo].copy(),
                future_features=future_features,
                targets=targets,
                mask=mask,
            )
        )
    return samples


def split_by_defect(
    samples: list[WindowSample],
    fractions: tuple[float, float, float] = (0.6, 0.2, 0.2),
    seed: int = 0,
) -> tuple[list[WindowSample], list[WindowSample], list[WindowSample]]:
    """Partition windows so each defect lands in exactly one split.

    Splitting whole defects (not windows) keeps overlapping subsequences
    of one series from leaking across train/val/test.
    """
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("split fractions must sum to 1")
    if any(f < 0 for f in fractions):
        raise ValueError("split fractions must be non-negative")
    defect_ids = sorted({s.defect_id for s in samples})
    if len(defect_ids) < 3:
        raise ValueError(f"need at least 3 distinct defects, got {len(defect_ids)}")

    rng = np.random.default_rng(seed)
    shuffled = [defect_ids[i] for i in rng.permutation(len(defect_ids))]
    counts = _allocate_counts(len(defect_ids), fractions)
    train_ids = set(shuffled[: counts[0]])
    val_ids = set(shuffled[counts[0] : counts[0] + counts[1]])
    test_ids = set(shuffled[counts[0] + counts[1] :])

    train = [s for s in samples if s.defect_id in train_ids]
    val = [s for s in samples if s.defect_id in val_ids]
    test = [s for s in samples if s.defect_id in test_ids]
    return train, val, test


def _allocate_counts(n: int, fractions) -> list[int]:
    """Largest-remainder rounding; nonzero fractions get at least one defect."""
    ideal = [f * n for f in fractions]
    counts = [int(np.floor(x)) for x in ideal]
    remainders = [x - c for x, c in zip(ideal, counts)]
    for _ in range(n - sum(counts)):
        i = int(np.argmax(remainders))
        counts[i] += 1
        remainders[i] = -1.0
    for i, f in enumerate(fractions):
        if f > 0 and counts[i] == 0:
            donor = int(np.argmax(counts))
            counts[donor] -= 1
            counts[i] += 1
    return counts


def write_windows_jsonl(path, samples: list[WindowSample]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            record = {
                "defect_id": s.defect_id,
                "past_lengths": s.past_lengths.tolist(),
                "past_features": s.past_features.tolist(),
                "future_features": s.future_features.tolist(),
                "targets": s.targets.tolist(),
                "mask": s.mask.tolist(),
            }
            fh.write(json.dumps(record) + "\n")


def read_windows_jsonl(path) -> list[WindowSample]:
    samples = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            missing = set(_JSONL_FIELDS) - set(record)
            if missing:
                raise ValueError(f"{path}:{line_no}: missing fields {sorted(missing)}")
            samples.append(
                WindowSample(
                    defect_id=record["defect_id"],
                    past_lengths=record["past_lengths"],
                    past_features=record["past_features"],
                    future_features=record["future_features"],
                    targets=record["targets"],
                    mask=record["mask"],
                )
            )
    return samples
