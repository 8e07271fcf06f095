"""Failure-event annotation from the progression of spectral PDFs.

Every window's five-bin PDF is compared against the first window's PDF with
two discrepancy measures: Kullback-Leibler divergence and the difference of
the standard deviations obtained by Gaussian moment matching of the bin-index
distribution. Each trace gets a threshold equal to its break-in maximum plus
a margin, and the event is placed at the later of the two first crossings.
Bearings whose traces never both cross are censored.

No debouncing is applied: a single window above threshold counts as a
crossing.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .exceptions import TooFewWindows
from .signal import validate_pdf_mass


@dataclass
class DivergenceTrace:
    """Per-window KL and SD discrepancies plus the two thresholds."""

    kl: np.ndarray
    sd: np.ndarray
    kl_threshold: float
    sd_threshold: float

    def __post_init__(self):
        self.kl = np.asarray(self.kl, dtype=np.float64)
        self.sd = np.asarray(self.sd, dtype=np.float64)
        if self.kl.shape != self.sd.shape:
            raise ValueError("kl and sd traces must have equal length")


@dataclass
class EventAnnotation:
    """Detected event position for one bearing, or censoring."""

    event_window: int | None
    event_time: float | None
    observed: bool

    def __post_init__(self):
        if self.observed != (self.event_window is not None):
            raise ValueError("observed must be set iff event_window is set")


def _mass_of(pdf) -> np.ndarray:
    mass = getattr(pdf, "bin_mass", pdf)
    return validate_pdf_mass(mass)


def kl_divergence(p, q, epsilon: float = 1e-9) -> float:
    """KL divergence of p from q after epsilon-smoothing both PDFs.

    Both mass vectors get epsilon added to every bin and are re-normalized,
    which keeps the divergence finite on disjoint supports. The result is
    clamped at zero to absorb rounding.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    pm = _mass_of(p) + epsilon
    qm = _mass_of(q) + epsilon
    pm = pm / pm.sum()
    qm = qm / qm.sum()
    return max(float((pm * np.log(pm / qm)).sum()), 0.0)


def sd_discrepancy(p, q) -> float:
    """Absolute difference of the bin-index standard deviations of two PDFs."""
    return abs(_index_std(_mass_of(q)) - _index_std(_mass_of(p)))


def _index_std(mass: np.ndarray) -> float:
    idx = np.arange(mass.size, dtype=np.float64)
    mean = float((idx * mass).sum())
    return float(np.sqrt(((idx - mean) ** 2 * mass).sum()))


def detect_event(
    pdfs,
    breakin_windows: int | None = None,
    margin: float = 0.10,
    epsilon: float = 1e-9,
    window_seconds: float | None = None,
) -> tuple[DivergenceTrace, EventAnnotation]:
    """Annotate one bearing from its window-by-window PDF sequence.

    The reference distribution is the first window. Each trace's threshold
    is (1 + margin) times its maximum over the break-in windows, and a trace
    crosses at the first window after the break-in period that exceeds its
    threshold. The event is the later of the two crossings; if either trace
    never crosses, the bearing is censored. ``breakin_windows`` defaults to
    10% of the sequence length (at least 1).
    """
    pdfs = list(pdfs)
    if breakin_windows is None:
        breakin_windows = max(1, len(pdfs) // 10)
    if breakin_windows < 1:
        raise ValueError("breakin_windows must be at least 1")
    if len(pdfs) <= breakin_windows:
        raise TooFewWindows(
            f"need more than {breakin_windows} windows, got {len(pdfs)}"
        )

    reference = pdfs[0]
    kl = np.array([kl_divergence(p, reference, epsilon=epsilon) for p in pdfs])
    sd = np.array([sd_discrepancy(p, reference) for p in pdfs])

    kl_threshold = (1.0 + margin) * float(kl[:breakin_windows].max())
    sd_threshold = (1.0 + margin) * float(sd[:breakin_windows].max())
    trace = DivergenceTrace(kl=kl, sd=sd, kl_threshold=kl_threshold, sd_threshold=sd_threshold)

    kl_cross = _first_crossing(kl, kl_threshold, breakin_windows)
    sd_cross = _first_crossing(sd, sd_threshold, breakin_windows)
    if kl_cross is None or sd_cross is None:
        return trace, EventAnnotation(event_window=None, event_time=None, observed=False)
    event_window = max(kl_cross, sd_cross)
    event_time = None if window_seconds is None else event_window * window_seconds
    return trace, EventAnnotation(event_window=event_window, event_time=event_time, observed=True)


def _first_crossing(trace: np.ndarray, threshold: float, start: int) -> int | None:
    above = np.nonzero(trace[start:] > threshold)[0]
    if above.size == 0:
        return None
    return int(start + above[0])


def write_trace_csv(trace: DivergenceTrace, path) -> None:
    """Export a divergence trace as window,kl,sd,kl_threshold,sd_threshold."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["window", "kl", "sd", "kl_threshold", "sd_threshold"])
        for w, (k, s) in enumerate(zip(trace.kl, trace.sd)):
            writer.writerow([w, repr(float(k)), repr(float(s)),
                             repr(trace.kl_threshold), repr(trace.sd_threshold)])
