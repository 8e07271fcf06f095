"""Archive ingestion and survival-record construction.

Raw run-to-failure archives (XJTU and PRONOSTIA layouts) are read into
two-channel bearing records, split into single-axis pseudo-bearings, and
expanded into survival records: the annotated lifetime is partitioned into
equal slices, each contributing the slice-mean covariates together with the
remaining life from the slice end. A per-bearing constrained bootstrap
(extreme-duration records always retained) inflates the sample, and
simulated censoring brings the dataset to a target censoring rate.

All randomized steps run on a single seeded generator per call, so the
whole pipeline is reproducible bit for bit.
"""
from __future__ import annotations

import csv
import io
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .events import EventAnnotation
from .exceptions import (
    DegenerateFeatureWarning,
    EmptyBearing,
    MalformedCsv,
    NoEvent,
    NonMonotoneTimestamps,
    OverlappingSplit,
)
from .features import FEATURE_NAMES, FeatureVector
from .signal import RawChannel

XJTU_SAMPLE_RATE = 25600.0
PRONOSTIA_SAMPLE_RATE = 25600.0


@dataclass
class OperatingCondition:
    """Pass-through test-rig metadata."""

    load_kn: float | None = None
    speed_rpm: float | None = None


@dataclass
class BearingRecord:
    """One physical bearing: two accelerometer channels plus metadata."""

    bearing_id: str
    horizontal: RawChannel
    vertical: RawChannel
    condition: OperatingCondition = field(default_factory=OperatingCondition)
    file_lengths: list[int] = field(default_factory=list)

    def __post_init__(self):
        if self.horizontal.sample_rate != self.vertical.sample_rate:
            raise ValueError("both channels must share one sample rate")


@dataclass
class SingleChannelBearing:
    """A pseudo-bearing derived from one axis of a physical bearing."""

    bearing_id: str
    source_bearing: str
    channel: RawChannel
    condition: OperatingCondition = field(default_factory=OperatingCondition)
    file_lengths: list[int] = field(default_factory=list)


@dataclass
class SurvivalRecord:
    """One row of the learning problem."""

    covariates: np.ndarray
    duration: float
    event: int
    source_bearing: str

    def __post_init__(self):
        self.covariates = np.asarray(self.covariates, dtype=np.float64)
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.event not in (0, 1):
            raise ValueError("event must be 0 or 1")
        if not np.all(np.isfinite(self.covariates)):
            raise ValueError("covariates must be finite")


@dataclass
class SurvivalDataset:
    """A set of survival records plus the feature naming."""

    records: list[SurvivalRecord]
    censoring_rate: float = 0.0
    feature_names: tuple[str, ...] = FEATURE_NAMES

    @property
    def X(self) -> np.ndarray:
        return np.array([r.covariates for r in self.records])

    @property
    def duration(self) -> np.ndarray:
        return np.array([r.duration for r in self.records])

    @property
    def event(self) -> np.ndarray:
        return np.array([r.event for r in self.records], dtype=np.int64)

    @property
    def source(self) -> list[str]:
        return [r.source_bearing for r in self.records]

    def __len__(self):
        return len(self.records)


def _natural_key(name: str):
    return [int(p) if p.isdigit() else p for p in re.split(r"(\d+)", name)]


def _read_numeric_csv(path: Path, n_columns: int) -> np.ndarray:
    """Parse a comma-separated numeric file, auto-detecting one header line.

    On failure the offending file and line number are reported.
    """
    text = path.read_text()
    lines = text.splitlines()
    if not lines:
        return np.empty((0, n_columns))
    skip = 0
    try:
        [float(v) for v in lines[0].split(",")]
    except ValueError:
        skip = 1
    body = "\n".join(lines[skip:])
    if not body.strip():
        return np.empty((0, n_columns))
    try:
        data = np.loadtxt(io.StringIO(body), delimiter=",", ndmin=2)
    except ValueError:
        _raise_malformed(path, lines, skip, n_columns)
    if data.shape[1] != n_columns:
        _raise_malformed(path, lines, skip, n_columns)
    return data


def _raise_malformed(path: Path, lines: list[str], skip: int, n_columns: int):
    for lineno, line in enumerate(lines[skip:], start=skip + 1):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != n_columns:
            raise MalformedCsv(
                f"{path}, line {lineno}: expected {n_columns} fields, got {len(fields)}"
            )
        for value in fields:
            try:
                float(value)
            except ValueError:
                raise MalformedCsv(
                    f"{path}, line {lineno}: non-numeric field {value.strip()!r}"
                ) from None
    raise MalformedCsv(f"{path}: malformed comma-separated data")


def _bearing_dirs(dir_path) -> list[Path]:
    root = Path(dir_path)
    if not root.is_dir():
        raise FileNotFoundError(f"no such directory: {root}")
    return sorted((p for p in root.iterdir() if p.is_dir()),
                  key=lambda p: _natural_key(p.name))


def load_xjtu(dir_path, condition: OperatingCondition | None = None) -> list[BearingRecord]:
    """Read an XJTU-layout archive: per-bearing folders of 2-column CSVs.

    Files within a bearing folder are concatenated in natural (numeric-aware)
    name order; the sample rate is fixed at 25.6 kHz.
    """
    records = []
    for bearing_dir in _bearing_dirs(dir_path):
        files = sorted(bearing_dir.glob("*.csv"), key=lambda p: _natural_key(p.name))
        chunks = [_read_numeric_csv(f, 2) for f in files]
        chunks = [c for c in chunks if c.shape[0]]
        if not chunks:
            raise EmptyBearing(f"{bearing_dir} holds no samples")
        data = np.concatenate(chunks, axis=0)
        records.append(BearingRecord(
            bearing_id=bearing_dir.name,
            horizontal=RawChannel(data[:, 0], XJTU_SAMPLE_RATE, "horizontal"),
            vertical=RawChannel(data[:, 1], XJTU_SAMPLE_RATE, "vertical"),
            condition=condition or OperatingCondition(),
            file_lengths=[c.shape[0] for c in chunks],
        ))
    if not records:
        raise EmptyBearing(f"{dir_path} holds no bearing directories")
    return records


def load_pronostia(dir_path, condition: OperatingCondition | None = None) -> list[BearingRecord]:
    """Read a PRONOSTIA-layout archive: per-bearing folders of acc_*.csv.

    Columns are hour,minute,second,microsecond,horiz_accel,vert_accel;
    timestamps must be non-decreasing within each file.
    """
    records = []
    for bearing_dir in _bearing_dirs(dir_path):
        files = sorted(bearing_dir.glob("acc_*.csv"), key=lambda p: _natural_key(p.name))
        chunks = []
        for f in files:
            data = _read_numeric_csv(f, 6)
            if not data.shape[0]:
                continue
            stamps = ((data[:, 0] * 60 + data[:, 1]) * 60 + data[:, 2]) * 1e6 + data[:, 3]
            if np.any(np.diff(stamps) < 0):
                bad = int(np.argmax(np.diff(stamps) < 0)) + 2
                raise NonMonotoneTimestamps(f"{f}, line {bad}: timestamps decrease")
            chunks.append(data[:, 4:6])
        if not chunks:
            raise EmptyBearing(f"{bearing_dir} holds no samples")
        data = np.concatenate(chunks, axis=0)
        records.append(BearingRecord(
            bearing_id=bearing_dir.name,
            horizontal=RawChannel(data[:, 0], PRONOSTIA_SAMPLE_RATE, "horizontal"),
            vertical=RawChannel(data[:, 1], PRONOSTIA_SAMPLE_RATE, "vertical"),
            condition=condition or OperatingCondition(),
            file_lengths=[c.shape[0] for c in chunks],
        ))
    if not records:
        raise EmptyBearing(f"{dir_path} holds no bearing directories")
    return records


def axis_split(record: BearingRecord) -> list[SingleChannelBearing]:
    """Treat the two axes of a bearing as independent pseudo-bearings."""
    return [
        SingleChannelBearing(
            bearing_id=f"{record.bearing_id}_X",
            source_bearing=record.bearing_id,
            channel=record.horizontal,
            condition=record.condition,
            file_lengths=list(record.file_lengths),
        ),
        SingleChannelBearing(
            bearing_id=f"{record.bearing_id}_Y",
            source_bearing=record.bearing_id,
            channel=record.vertical,
            condition=record.condition,
            file_lengths=list(record.file_lengths),
        ),
    ]


def channel_windows(channel: RawChannel, file_lengths) -> list[np.ndarray]:
    """Split a concatenated channel back into its per-acquisition windows."""
    bounds = np.cumsum(file_lengths)
    if bounds.size == 0 or bounds[-1] != channel.samples.size:
        raise ValueError("file_lengths do not match the channel length")
    return np.split(channel.samples, bounds[:-1])


def root_bearing_id(bearing_id: str) -> str:
    """Strip the axis suffix of a pseudo-bearing id."""
    if bearing_id.endswith(("_X", "_Y")):
        return bearing_id[:-2]
    return bearing_id


def build_survival_records(
    window_features,
    annotation: EventAnnotation | None,
    n_slices: int = 20,
    source_bearing: str = "",
    censor_time: float | None = None,
) -> list[SurvivalRecord]:
    """Expand one bearing's lifetime into per-slice survival records.

    The lifetime [0, T] (T = event window when observed, otherwise the
    censoring time, defaulting to the record end) is split into ``n_slices``
    equal slices. Record i carries the mean feature vector over slice i and
    the remaining life measured from the slice end; slices with
    non-positive remaining life are dropped.
    """
    if n_slices < 2:
        raise ValueError("n_slices must be at least 2")
    window_features = list(window_features)
    if annotation is not None and annotation.observed:
        horizon = float(annotation.event_window)
        event = 1
    else:
        if censor_time is not None:
            horizon = float(censor_time)
        elif window_features:
            horizon = float(len(window_features))
        else:
            raise NoEvent(f"bearing {source_bearing!r}: no annotation and no censoring time")
        event = 0
    if horizon <= 0:
        raise NoEvent(f"bearing {source_bearing!r}: empty lifetime")

    records = []
    for i in range(1, n_slices + 1):
        slice_end = i * horizon / n_slices
        duration = horizon - slice_end
        if duration <= 0:
            continue
        lo = (i - 1) * horizon / n_slices
        rows = [
            fv.as_array()
            for w, fv in enumerate(window_features)
            if fv is not None and lo <= w < slice_end and w < horizon
        ]
        if not rows:
            warnings.warn(
                f"bearing {source_bearing!r}: slice {i} has no valid windows; skipped",
                stacklevel=2,
            )
            continue
        records.append(SurvivalRecord(
            covariates=np.mean(rows, axis=0),
            duration=duration,
            event=event,
            source_bearing=source_bearing,
        ))
    return records


def constrained_bootstrap(records, factor: int = 1, seed: int = 0) -> list[SurvivalRecord]:
    """Resample records with replacement per bearing, keeping the extremes.

    Every bearing's minimum- and maximum-duration records are always part
    of its resampled set, so the per-bearing duration support is preserved.
    Output size is ``factor`` times the input size.
    """
    if factor < 1:
        raise ValueError("factor must be at least 1")
    records = list(records)
    groups: dict[str, list[SurvivalRecord]] = {}
    for rec in records:
        groups.setdefault(rec.source_bearing, []).append(rec)
    rng = np.random.default_rng(seed)
    out = []
    for bearing, recs in groups.items():
        if len(recs) < 2:
            raise ValueError(f"bearing {bearing!r} has fewer than 2 records")
        durations = np.array([r.duration for r in recs])
        fixed = [recs[int(np.argmin(durations))], recs[int(np.argmax(durations))]]
        n_out = factor * len(recs)
        picks = rng.integers(0, len(recs), size=n_out - 2)
        resampled = fixed + [recs[p] for p in picks]
        order = rng.permutation(n_out)
        out.extend(resampled[i] for i in order)
    return out


def apply_censoring(records, rate: float = 0.2, seed: int = 0,
                    feature_names=FEATURE_NAMES) -> SurvivalDataset:
    """Censor a seeded uniform sample of observed records.

    Enough observed records are flipped so the total censored count reaches
    floor(rate * n); each flipped record's duration is redrawn uniformly
    from (0, original duration).
    """
    if not 0 <= rate < 1:
        raise ValueError("rate must lie in [0, 1)")
    records = list(records)
    n = len(records)
    target = int(rate * n)
    already = sum(1 for r in records if r.event == 0)
    to_flip = target - already
    if to_flip < 0:
        warnings.warn(
            f"{already} records are already censored, above the target {target}",
            stacklevel=2,
        )
        to_flip = 0
    observed = [i for i, r in enumerate(records) if r.event == 1]
    if to_flip > len(observed):
        raise ValueError("not enough observed records to reach the censoring rate")

    rng = np.random.default_rng(seed)
    chosen = set(rng.choice(len(observed), size=to_flip, replace=False).tolist()) if to_flip else set()
    out = list(records)
    for k, idx in enumerate(observed):
        if k in chosen:
            rec = records[idx]
            u = rng.uniform()
            while u <= 0.0:
                u = rng.uniform()
            out[idx] = SurvivalRecord(
                covariates=rec.covariates,
                duration=u * rec.duration,
                event=0,
                source_bearing=rec.source_bearing,
            )
    return SurvivalDataset(records=out, censoring_rate=rate, feature_names=tuple(feature_names))


class CovariateScaler(BaseEstimator, TransformerMixin):
    """Z-score normalization with population statistics, fitted on train only.

    Constant training columns cannot be scaled; they are dropped from every
    transformed set and reported with a DegenerateFeatureWarning.
    """

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=np.float64)
        self.mean_ = X.mean(axis=0)
        self.scale_ = X.std(axis=0)
        self.keep_ = self.scale_ > 0
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError("X has a different number of columns than at fit time")
        return (X[:, self.keep_] - self.mean_[self.keep_]) / self.scale_[self.keep_]


def zscore_fit_transform(train: SurvivalDataset, test: SurvivalDataset):
    """Normalize both splits with train-only statistics.

    Returns (train', test', scaler); degenerate columns are dropped from
    both splits.
    """
    scaler = CovariateScaler().fit(train.X)
    dropped = [name for name, keep in zip(train.feature_names, scaler.keep_) if not keep]
    if dropped:
        warnings.warn(
            f"dropping constant training features: {', '.join(dropped)}",
            DegenerateFeatureWarning, stacklevel=2,
        )
    kept_names = tuple(n for n, k in zip(train.feature_names, scaler.keep_) if k)

    def _apply(ds: SurvivalDataset) -> SurvivalDataset:
        Xt = scaler.transform(ds.X)
        recs = [
            SurvivalRecord(covariates=row, duration=r.duration, event=r.event,
                           source_bearing=r.source_bearing)
            for row, r in zip(Xt, ds.records)
        ]
        return SurvivalDataset(records=recs, censoring_rate=ds.censoring_rate,
                               feature_names=kept_names)

    return _apply(train), _apply(test), scaler


def split_by_bearing(dataset: SurvivalDataset, train_ids, test_ids):
    """Partition records by their root (pre-axis-split) bearing id."""
    train_ids = set(train_ids)
    test_ids = set(test_ids)
    if not train_ids or not test_ids:
        raise ValueError("both id sets must be non-empty")
    overlap = train_ids & test_ids
    if overlap:
        raise OverlappingSplit(f"bearings in both splits: {sorted(overlap)}")

    train_recs, test_recs = [], []
    for rec in dataset.records:
        root = root_bearing_id(rec.source_bearing)
        if root in train_ids:
            train_recs.append(rec)
        elif root in test_ids:
            test_recs.append(rec)
    if not train_recs or not test_recs:
        raise ValueError("a split selected no records; check the bearing ids")
    make = lambda recs: SurvivalDataset(records=recs, censoring_rate=dataset.censoring_rate,
                                        feature_names=dataset.feature_names)
    return make(train_recs), make(test_recs)


def write_survival_csv(dataset: SurvivalDataset, path) -> None:
    """Export as feature_1..feature_d,duration,event,source_bearing."""
    d = len(dataset.feature_names)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"feature_{i + 1}" for i in range(d)]
                        + ["duration", "event", "source_bearing"])
        for rec in dataset.records:
            writer.writerow([repr(float(v)) for v in rec.covariates]
                            + [repr(float(rec.duration)), rec.event, rec.source_bearing])


def read_survival_csv(path) -> SurvivalDataset:
    """Read a dataset written by :func:`write_survival_csv`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        d = len(header) - 3
        if d < 1 or header[d:] != ["duration", "event", "source_bearing"]:
            raise MalformedCsv(f"{path}: unexpected survival CSV header")
        records = []
        for row in reader:
            records.append(SurvivalRecord(
                covariates=np.array([float(v) for v in row[:d]]),
                duration=float(row[d]),
                event=int(row[d + 1]),
                source_bearing=row[d + 2],
            ))
    n_censored = sum(1 for r in records if r.event == 0)
    rate = n_censored / len(records) if records else 0.0
    return SurvivalDataset(records=records, censoring_rate=rate,
                           feature_names=tuple(header[:d]))
