"""Twelve time-domain condition indicators computed per signal frame.

Moments use the population (1/N) convention. Entropy is estimated from a
normalized equal-width histogram of the frame values with natural log, so it
is invariant to amplitude scaling for a fixed bin count. Peak-to-peak is
max(x) - min(x) over signed values: the absolute-value variant collapses to
zero for symmetric vibration signals, which would make the feature useless.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import AllFramesDegenerate, DegenerateFrame
from .signal import SignalFrame

FEATURE_NAMES = (
    "abs_mean",
    "std",
    "skewness",
    "kurtosis",
    "entropy",
    "rms",
    "max_abs",
    "peak_to_peak",
    "crest",
    "clearance",
    "shape",
    "impulse",
)

N_FEATURES = len(FEATURE_NAMES)


@dataclass
class FeatureVector:
    """The twelve indicators for one frame, in ``FEATURE_NAMES`` order."""

    abs_mean: float
    std: float
    skewness: float
    kurtosis: float
    entropy: float
    rms: float
    max_abs: float
    peak_to_peak: float
    crest: float
    clearance: float
    shape: float
    impulse: float
    frame_index: int = 0

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES])


def histogram_entropy(values: np.ndarray, bins: int) -> float:
    """Shannon entropy (nats) of an equal-width histogram of ``values``."""
    counts, _ = np.histogram(values, bins=bins)
    p = counts[counts > 0] / values.size
    return float(-(p * np.log(p)).sum())


def extract_features(frame, entropy_bins: int = 64) -> FeatureVector:
    """Evaluate the twelve indicators on one frame.

    Raises DegenerateFrame when the frame is constant (zero variance), since
    skewness and kurtosis are undefined there.
    """
    if entropy_bins < 2:
        raise ValueError("entropy_bins must be at least 2")
    if isinstance(frame, SignalFrame):
        x = frame.values
        frame_index = frame.frame_index
    else:
        x = np.asarray(frame, dtype=np.float64)
        frame_index = 0
    if x.size < 16:
        raise ValueError("frame must hold at least 16 samples")

    mean = x.mean()
    centered = x - mean
    var = float((centered**2).mean())
    if var == 0.0:
        raise DegenerateFrame(f"frame {frame_index} is constant (zero variance)")
    std = np.sqrt(var)

    abs_x = np.abs(x)
    abs_mean = float(abs_x.mean())
    rms = float(np.sqrt((x**2).mean()))
    max_abs = float(abs_x.max())

    return FeatureVector(
        abs_mean=abs_mean,
        std=float(std),
        skewness=float((centered**3).mean() / std**3),
        kurtosis=float((centered**4).mean() / var**2),
        entropy=histogram_entropy(x, entropy_bins),
        rms=rms,
        max_abs=max_abs,
        peak_to_peak=float(x.max() - x.min()),
        crest=max_abs / rms,
        clearance=max_abs / float(np.sqrt(abs_x).mean()) ** 2,
        shape=rms / abs_mean,
        impulse=max_abs / abs_mean,
        frame_index=frame_index,
    )


def feature_matrix(frames, entropy_bins: int = 64) -> list[FeatureVector | None]:
    """Extract features for every frame, keeping frame order.

    Degenerate frames yield a None entry (a reported missing row) rather
    than being dropped, so indices stay aligned with the input.
    """
    frames = list(frames)
    if not frames:
        raise ValueError("frame sequence must be non-empty")
    rows: list[FeatureVector | None] = []
    n_failed = 0
    for frame in frames:
        try:
            rows.append(extract_features(frame, entropy_bins=entropy_bins))
        except DegenerateFrame:
            rows.append(None)
            n_failed += 1
    if n_failed == len(rows):
        raise AllFramesDegenerate("no frame produced a feature vector")
    if n_failed:
        warnings.warn(
            f"{n_failed} of {len(rows)} frames were degenerate and left as missing rows",
            stacklevel=2,
        )
    return rows
