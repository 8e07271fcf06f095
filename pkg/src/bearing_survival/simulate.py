"""Synthetic generators used to validate the detection and modeling stages.

``synth_bearing`` emits a carrier signal whose envelope carries one
amplitude-modulation tone per characteristic band. The band masses start
with a settling transient (an excess on the shaft band decaying over the
first windows, mimicking a break-in phase) and are near-uniform afterwards;
from the onset window the fault band's mass grows linearly. This gives the
break-in-maximum threshold rule something real to latch onto and makes the
post-onset rise unambiguous.

``simulate_cox_times`` draws survival times from a proportional-hazards
model with an exponential baseline by inverse-transform sampling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import EmptyGroup
from .models.base import SurvivalCurve
from .signal import BIN_ORDER, BearingGeometry, RawChannel

#: Geometry of a small deep-groove bearing with a sped-up shaft so every
#: characteristic band stays resolvable with short analysis windows.
DEFAULT_SYNTH_GEOMETRY = BearingGeometry(
    n_balls=8, ball_diameter=7.92, pitch_diameter=34.55,
    contact_angle=0.0, shaft_rate=100.0,
)


@dataclass
class SynthBearingConfig:
    """Recipe for one synthetic run-to-failure vibration channel."""

    duration_windows: int = 100
    onset_window: int | None = 70
    fault_bin: str = "bpfo"
    noise_sigma: float = 0.05
    growth_rate: float = 0.06
    geometry: BearingGeometry = field(default_factory=lambda: DEFAULT_SYNTH_GEOMETRY)
    seed: int = 0
    window_samples: int = 8192
    sample_rate: float = 25600.0
    carrier_freq: float = 6000.0
    modulation_total: float = 1.5
    breakin_excess: float = 0.5
    # multiplicative per-window wobble of the band amplitudes; real bearings
    # drift, and without it the pre-onset windows are statistically identical
    mass_jitter: float = 0.01
    # per-window gain wobble (load variation): invisible to the band masses,
    # which normalize gain away, but it keeps the time-domain features from
    # collapsing onto their linearized factor identities
    amplitude_jitter: float = 0.15
    # None: settle two windows before a 10%-of-record break-in period ends,
    # so the default detection threshold sees the full transient
    breakin_decay_windows: int | None = None

    def __post_init__(self):
        if self.breakin_decay_windows is None:
            self.breakin_decay_windows = max(2, self.duration_windows // 10 - 2)
        if self.duration_windows < 2:
            raise ValueError("duration_windows must be at least 2")
        if self.onset_window is not None and not 0 <= self.onset_window < self.duration_windows:
            raise ValueError("onset_window must lie inside the record")
        if self.growth_rate <= 0:
            raise ValueError("growth_rate must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if self.fault_bin not in BIN_ORDER:
            raise ValueError(f"fault_bin must be one of {BIN_ORDER}")


def band_mass_schedule(cfg: SynthBearingConfig) -> np.ndarray:
    """Target band masses per window, shape (duration_windows, 5)."""
    fault_idx = BIN_ORDER.index(cfg.fault_bin)
    fs_idx = BIN_ORDER.index("fs")
    masses = np.full((cfg.duration_windows, 5), 0.2)
    for w in range(cfg.duration_windows):
        m = masses[w]
        settle = max(0.0, 1.0 - w / cfg.breakin_decay_windows)
        m[fs_idx] += cfg.breakin_excess * settle
        if cfg.onset_window is not None and w >= cfg.onset_window:
            m[fault_idx] += cfg.growth_rate * (w - cfg.onset_window + 1)
        masses[w] = m / m.sum()
    return masses


def synth_bearing(cfg: SynthBearingConfig) -> RawChannel:
    """Generate one channel of synthetic degrading-bearing vibration."""
    freqs = np.array(cfg.geometry.defect_frequencies())
    masses = band_mass_schedule(cfg)
    rng = np.random.default_rng(cfg.seed)
    offset = 1.25 * cfg.modulation_total  # keeps the modulator positive
    t = np.arange(cfg.window_samples) / cfg.sample_rate
    tones = np.cos(2.0 * math.pi * freqs[:, None] * t[None, :])
    carrier = np.cos(2.0 * math.pi * cfg.carrier_freq * t)

    windows = []
    for w in range(cfg.duration_windows):
        amps = cfg.modulation_total * masses[w]
        if cfg.mass_jitter > 0:
            amps = amps * np.exp(cfg.mass_jitter * rng.normal(size=5))
        modulator = offset + amps @ tones
        gain = np.exp(cfg.amplitude_jitter * rng.normal()) if cfg.amplitude_jitter > 0 else 1.0
        window = gain * modulator * carrier
        if cfg.noise_sigma > 0:
            window = window + rng.normal(0.0, cfg.noise_sigma, cfg.window_samples)
        windows.append(window)
    return RawChannel(np.concatenate(windows), cfg.sample_rate, "horizontal")


def write_xjtu_archive(dir_path, bearings: dict) -> None:
    """Write per-bearing channel pairs as an XJTU-layout archive.

    ``bearings`` maps a bearing id to (horizontal, vertical, window_samples);
    each window becomes one two-column CSV file, so the standard loader and
    the full pipeline run on the result unmodified.
    """
    root = Path(dir_path)
    root.mkdir(parents=True, exist_ok=True)
    for bearing_id, (horizontal, vertical, window_samples) in bearings.items():
        bearing_dir = root / bearing_id
        bearing_dir.mkdir(exist_ok=True)
        n_windows = horizontal.samples.size // window_samples
        for w in range(n_windows):
            block = slice(w * window_samples, (w + 1) * window_samples)
            rows = np.column_stack([horizontal.samples[block], vertical.samples[block]])
            np.savetxt(bearing_dir / f"{w + 1}.csv", rows, delimiter=",", fmt="%.8f")


@dataclass
class SimulatedCohort:
    """Survival times sampled from a known proportional-hazards model."""

    durations: np.ndarray
    group_labels: np.ndarray
    true_beta: np.ndarray

    def __post_init__(self):
        self.durations = np.asarray(self.durations, dtype=np.float64)
        self.group_labels = np.asarray(self.group_labels)
        self.true_beta = np.asarray(self.true_beta, dtype=np.float64)
        if self.durations.size == 0:
            raise ValueError("cohort must be non-empty")
        if np.any(self.durations <= 0):
            raise ValueError("durations must be positive")


def simulate_cox_times(beta, covariates, baseline_lambda: float,
                       n_per_record: int = 1, seed: int = 0,
                       labels=None) -> SimulatedCohort:
    """Inverse-transform sampling of T = -ln(U) / (lambda * exp(beta.x)).

    The exponential baseline makes the inverse closed-form. ``labels``
    (default: the covariate row index) tag each simulated time with its
    originating record.
    """
    if baseline_lambda <= 0:
        raise ValueError("baseline_lambda must be positive")
    beta = np.atleast_1d(np.asarray(beta, dtype=np.float64))
    X = np.asarray(covariates, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, beta.size)
    rates = baseline_lambda * np.exp(X @ beta)
    if labels is None:
        labels = np.arange(X.shape[0])
    labels = np.asarray(labels)

    rng = np.random.default_rng(seed)
    u = rng.uniform(size=(X.shape[0], n_per_record))
    u = np.where(u > 0, u, np.nextafter(0.0, 1.0))
    times = -np.log(u) / rates[:, None]
    return SimulatedCohort(
        durations=times.ravel(),
        group_labels=np.repeat(labels, n_per_record),
        true_beta=beta,
    )


@dataclass
class GroupComparison:
    """Mean predicted survival per covariate group, with simulated cohorts."""

    low_curve: SurvivalCurve
    high_curve: SurvivalCurve
    n_low: int
    n_high: int
    feature_index: int
    threshold: float
    low_cohort: SimulatedCohort | None = None
    high_cohort: SimulatedCohort | None = None


def _group_curve(model, Xg, times, conf_level=0.95) -> SurvivalCurve:
    surv = model.predict_survival(Xg, times)
    alpha = (1.0 - conf_level) / 2.0
    mean = np.minimum.accumulate(surv.mean(axis=0))
    return SurvivalCurve(
        times=np.asarray(times, float),
        survival=mean,
        lower=np.quantile(surv, alpha, axis=0),
        upper=np.quantile(surv, 1.0 - alpha, axis=0),
    )


def group_survival_comparison(model, X, split_feature, threshold: float,
                              times=None, feature_names=None,
                              n_simulated: int = 500, seed: int = 0) -> GroupComparison:
    """Compare mean predicted survival between two covariate groups.

    Records are split at ``threshold`` on ``split_feature`` (an index, or a
    name resolved through ``feature_names``). For Cox models the comparison
    also simulates survival times per group from the fitted coefficients at
    the group-mean covariates, with the baseline approximated as exponential.
    """
    X = np.asarray(X, dtype=np.float64)
    if isinstance(split_feature, str):
        if feature_names is None:
            raise ValueError("feature_names needed to resolve a named split feature")
        split_feature = list(feature_names).index(split_feature)
    values = X[:, split_feature]
    low_mask = values <= threshold
    if not low_mask.any() or low_mask.all():
        raise EmptyGroup(
            f"threshold {threshold!r} leaves an empty group on feature {split_feature}"
        )
    if times is None:
        if not hasattr(model, "baseline_times_"):
            raise ValueError("pass an explicit time grid for this model type")
        times = model.baseline_times_

    X_low, X_high = X[low_mask], X[~low_mask]
    result = GroupComparison(
        low_curve=_group_curve(model, X_low, times),
        high_curve=_group_curve(model, X_high, times),
        n_low=int(low_mask.sum()),
        n_high=int((~low_mask).sum()),
        feature_index=int(split_feature),
        threshold=float(threshold),
    )
    if hasattr(model, "coef_") and hasattr(model, "baseline_cumhaz_"):
        lam = float(model.baseline_cumhaz_[-1] / model.baseline_times_[-1])
        mean_low = (X_low.mean(axis=0) - model.train_mean_).reshape(1, -1)
        mean_high = (X_high.mean(axis=0) - model.train_mean_).reshape(1, -1)
        result.low_cohort = simulate_cox_times(
            model.coef_, mean_low, lam, n_per_record=n_simulated, seed=seed)
        result.high_cohort = simulate_cox_times(
            model.coef_, mean_high, lam, n_per_record=n_simulated, seed=seed + 1)
    return result
