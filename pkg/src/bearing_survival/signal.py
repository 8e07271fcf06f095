"""Raw vibration processing: framing, envelope extraction, characteristic bins.

The chain implemented here turns an accelerometer channel into a sequence of
five-bin spectral probability distributions, one per time window:

    raw samples -> non-overlapping frames -> analytic envelope -> one-sided
    magnitude spectrum -> energy in the five characteristic bands -> PDF

The five bands are centered on the shaft frequency (FS), fundamental train
frequency (FTF), ball spin frequency (BSF) and the ballpass frequencies of
outer and inner race (BPFO, BPFI), all computable from bearing geometry.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.signal import hilbert

from .exceptions import DegenerateSpectrum, EmptySignal, InvalidPdf

#: Order in which the characteristic bands appear in every SpectralPdf.
BIN_ORDER = ("fs", "ftf", "bsf", "bpfo", "bpfi")

AXIS_LABELS = ("horizontal", "vertical")


@dataclass
class RawChannel:
    """One accelerometer channel: samples in g at a fixed sampling rate."""

    samples: np.ndarray
    sample_rate: float
    axis_label: str = "horizontal"

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise EmptySignal("channel must hold a non-empty 1-d sample array")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if self.axis_label not in AXIS_LABELS:
            raise ValueError(f"axis_label must be one of {AXIS_LABELS}")


@dataclass
class SignalFrame:
    """A contiguous block of samples cut from one channel."""

    values: np.ndarray
    frame_index: int
    start_time: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)

    def __len__(self):
        return self.values.size


class DefectFrequencies(NamedTuple):
    fs: float
    ftf: float
    bsf: float
    bpfo: float
    bpfi: float


@dataclass(frozen=True)
class BearingGeometry:
    """Geometry and shaft speed needed for the defect-frequency formulas.

    Diameters are in millimetres, the contact angle in radians and the shaft
    rate in Hz.
    """

    n_balls: int
    ball_diameter: float
    pitch_diameter: float
    contact_angle: float
    shaft_rate: float

    def __post_init__(self):
        if self.n_balls < 3:
            raise ValueError("n_balls must be at least 3")
        if not 0 < self.ball_diameter < self.pitch_diameter:
            raise ValueError("need 0 < ball_diameter < pitch_diameter")
        if not 0 <= self.contact_angle < math.pi / 2:
            raise ValueError("contact_angle must lie in [0, pi/2)")
        if self.shaft_rate <= 0:
            raise ValueError("shaft_rate must be positive")

    def defect_frequencies(self) -> DefectFrequencies:
        """Characteristic frequencies in Hz, ordered as ``BIN_ORDER``."""
        ratio = (self.ball_diameter / self.pitch_diameter) * math.cos(self.contact_angle)
        fr = self.shaft_rate
        n = self.n_balls
        return DefectFrequencies(
            fs=fr,
            ftf=0.5 * fr * (1.0 - ratio),
            bsf=(self.pitch_diameter * fr / (2.0 * self.ball_diameter)) * (1.0 - ratio**2),
            bpfo=0.5 * n * fr * (1.0 - ratio),
            bpfi=0.5 * n * fr * (1.0 + ratio),
        )


@dataclass
class SpectralPdf:
    """Normalized energy distribution over the five characteristic bands."""

    bin_mass: np.ndarray
    bin_centers: np.ndarray
    window_index: int = 0

    def __post_init__(self):
        self.bin_mass = np.asarray(self.bin_mass, dtype=np.float64)
        self.bin_centers = np.asarray(self.bin_centers, dtype=np.float64)
        if self.bin_mass.shape != (5,) or self.bin_centers.shape != (5,):
            raise InvalidPdf("a spectral PDF has exactly five bins")
        validate_pdf_mass(self.bin_mass)


def validate_pdf_mass(mass: np.ndarray) -> np.ndarray:
    """Check the simplex invariant: non-negative masses summing to one."""
    mass = np.asarray(mass, dtype=np.float64)
    if np.any(mass < 0):
        raise InvalidPdf("bin masses must be non-negative")
    total = float(mass.sum())
    if abs(total - 1.0) > 1e-9:
        raise InvalidPdf(f"bin masses must sum to 1 (got {total!r})")
    return mass


class EnvelopeSpectrum(NamedTuple):
    """One-sided magnitude spectrum of an envelope signal."""

    frequencies: np.ndarray
    magnitude: np.ndarray


def frame_signal(channel: RawChannel, frame_len: int) -> list[SignalFrame]:
    """Cut a channel into contiguous, non-overlapping frames.

    Frame k covers samples [k * frame_len, (k + 1) * frame_len); a trailing
    partial frame is discarded so every frame has identical length.
    """
    if frame_len < 16:
        raise ValueError("frame_len must be at least 16")
    samples = channel.samples
    if samples.size < frame_len:
        raise EmptySignal(
            f"channel has {samples.size} samples, need at least {frame_len}"
        )
    n_frames = samples.size // frame_len
    dt = frame_len / channel.sample_rate
    return [
        SignalFrame(
            values=samples[k * frame_len:(k + 1) * frame_len],
            frame_index=k,
            start_time=k * dt,
        )
        for k in range(n_frames)
    ]


def analytic_envelope(frame) -> np.ndarray:
    """Magnitude of the analytic signal of a frame.

    The analytic signal is built in the frequency domain (positive
    frequencies doubled, negative zeroed) and the result has the same length
    as the input and is non-negative.
    """
    values = frame.values if isinstance(frame, SignalFrame) else np.asarray(frame, float)
    if values.size < 16:
        raise ValueError("frame must hold at least 16 samples")
    return np.abs(hilbert(values))


def envelope_spectrum(envelope, sample_rate: float) -> EnvelopeSpectrum:
    """One-sided magnitude spectrum of an envelope after mean removal.

    The frequency resolution is sample_rate / N. Magnitudes are scaled so a
    pure tone of amplitude A appears with magnitude close to A.
    """
    env = np.asarray(envelope, dtype=np.float64)
    if env.size < 16:
        raise ValueError("envelope must hold at least 16 samples")
    if sample_rate <= 0:
        raise ValueError("sample_rate must be positive")
    centered = env - env.mean()
    spectrum = np.fft.rfft(centered)
    freqs = np.fft.rfftfreq(env.size, d=1.0 / sample_rate)
    magnitude = 2.0 * np.abs(spectrum) / env.size
    magnitude[0] /= 2.0
    return EnvelopeSpectrum(frequencies=freqs, magnitude=magnitude)


def characteristic_bins(
    spectrum: EnvelopeSpectrum,
    geometry: BearingGeometry,
    band_halfwidth: float | None = None,
    window_index: int = 0,
) -> SpectralPdf:
    """Collapse a magnitude spectrum onto the five characteristic bands.

    Each band collects the spectral magnitude within +/- band_halfwidth of
    its center frequency; masses are then normalized to sum to one. When
    ``band_halfwidth`` is None each band uses 5% of its own center frequency.
    """
    centers = np.array(geometry.defect_frequencies(), dtype=np.float64)
    freqs = spectrum.frequencies
    mags = spectrum.magnitude
    mass = np.empty(5)
    for i, center in enumerate(centers):
        half = 0.05 * center if band_halfwidth is None else float(band_halfwidth)
        lo = np.searchsorted(freqs, center - half, side="left")
        hi = np.searchsorted(freqs, center + half, side="right")
        mass[i] = mags[lo:hi].sum()
    total = mass.sum()
    if total <= 0.0:
        raise DegenerateSpectrum(
            "no spectral energy inside any characteristic band"
        )
    return SpectralPdf(bin_mass=mass / total, bin_centers=centers, window_index=window_index)


def pdf_sequence(
    channel: RawChannel,
    window_len: int,
    geometry: BearingGeometry,
    band_halfwidth: float | None = None,
) -> list[SpectralPdf]:
    """Full per-window chain: frame, envelope, spectrum, characteristic bins."""
    pdfs = []
    for frame in frame_signal(channel, window_len):
        spectrum = envelope_spectrum(analytic_envelope(frame), channel.sample_rate)
        pdfs.append(characteristic_bins(spectrum, geometry, band_halfwidth,
                                        window_index=frame.frame_index))
    return pdfs
