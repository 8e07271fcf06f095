import csv

import numpy as np
import pytest

from bearing_survival.events import (
    DivergenceTrace,
    EventAnnotation,
    detect_event,
    kl_divergence,
    sd_discrepancy,
    write_trace_csv,
)
from bearing_survival.exceptions import InvalidPdf, TooFewWindows
from bearing_survival.signal import SpectralPdf

CENTERS = np.array([35.0, 13.5, 72.3, 107.9, 172.1])


def pdf(*mass, window=0):
    return SpectralPdf(bin_mass=np.array(mass, float), bin_centers=CENTERS, window_index=window)


class TestKlDivergence:
    def test_identity_is_zero(self):
        p = pdf(0.1, 0.2, 0.3, 0.25, 0.15)
        assert kl_divergence(p, p) == pytest.approx(0.0, abs=1e-12)

    def test_hand_value(self):
        p = pdf(0.5, 0.5, 0, 0, 0)
        q = pdf(0.25, 0.75, 0, 0, 0)
        expected = 0.5 * np.log(2) + 0.5 * np.log(2 / 3)
        assert kl_divergence(p, q) == pytest.approx(expected, abs=1e-3)
        assert expected == pytest.approx(0.1438, abs=1e-4)

    def test_disjoint_support_finite(self):
        p = pdf(1, 0, 0, 0, 0)
        q = pdf(0, 1, 0, 0, 0)
        value = kl_divergence(p, q, epsilon=1e-9)
        assert np.isfinite(value)
        assert value > 10

    def test_nonnegative_and_zero_iff_equal(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            a = rng.dirichlet(np.ones(5))
            b = rng.dirichlet(np.ones(5))
            d = kl_divergence(pdf(*a), pdf(*b))
            assert d >= 0.0
            if np.allclose(a, b):
                assert d < 1e-6
        a = rng.dirichlet(np.ones(5))
        assert kl_divergence(pdf(*a), pdf(*a)) < 1e-6

    def test_invalid_pdf_rejected(self):
        with pytest.raises(InvalidPdf):
            kl_divergence(np.array([0.5, 0.5, 0.5, 0, 0]), np.full(5, 0.2))

    def test_epsilon_must_be_positive(self):
        with pytest.raises(ValueError):
            kl_divergence(np.full(5, 0.2), np.full(5, 0.2), epsilon=0.0)


class TestSdDiscrepancy:
    def test_identity(self):
        p = pdf(0.1, 0.2, 0.4, 0.2, 0.1)
        assert sd_discrepancy(p, p) == 0.0

    def test_two_point_masses(self):
        assert sd_discrepancy(pdf(1, 0, 0, 0, 0), pdf(0, 0, 0, 0, 1)) == 0.0

    def test_uniform_vs_degenerate(self):
        uniform = pdf(*np.full(5, 0.2))
        point = pdf(0, 0, 1, 0, 0)
        assert sd_discrepancy(uniform, point) == pytest.approx(np.sqrt(2.0))

    def test_nonnegative(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            a, b = rng.dirichlet(np.ones(5)), rng.dirichlet(np.ones(5))
            assert sd_discrepancy(pdf(*a), pdf(*b)) >= 0.0


def drifting_pdfs(n=100, onset=70, step=0.03):
    """Uniform masses, then mass moving onto the BPFO bin after onset."""
    pdfs = []
    for w in range(n):
        mass = np.full(5, 0.2)
        if w >= onset:
            mass[3] += step * (w - onset + 1)
            mass /= mass.sum()
        pdfs.append(pdf(*mass, window=w))
    return pdfs


class TestDetectEvent:
    def test_constant_sequence_is_censored(self):
        pdfs = [pdf(*np.full(5, 0.2), window=w) for w in range(50)]
        trace, ann = detect_event(pdfs)
        assert not ann.observed
        assert ann.event_window is None
        assert len(trace.kl) == 50

    def test_too_few_windows(self):
        pdfs = [pdf(*np.full(5, 0.2))] * 5
        with pytest.raises(TooFewWindows):
            detect_event(pdfs, breakin_windows=5)

    def test_drift_detected_after_onset(self):
        trace, ann = detect_event(drifting_pdfs())
        assert ann.observed
        assert 70 <= ann.event_window <= 78

    def test_last_crossing_rule_on_constructed_traces(self):
        # KL would cross at window 50, SD at 60; the annotation takes 60.
        pdfs = []
        for w in range(100):
            mass = np.full(5, 0.2)
            if w >= 50:
                # same index mean and variance as uniform, different shape:
                # KL moves, the index standard deviation stays put
                mass = np.array([0.25, 0.0, 0.5, 0.0, 0.25])
            if w >= 60:
                mass = np.array([0.05, 0.05, 0.8, 0.05, 0.05])
            pdfs.append(pdf(*mass, window=w))
        trace, ann = detect_event(pdfs, breakin_windows=10)
        kl_cross = 10 + np.argmax(trace.kl[10:] > trace.kl_threshold)
        sd_cross = 10 + np.argmax(trace.sd[10:] > trace.sd_threshold)
        assert kl_cross == 50
        assert sd_cross == 60
        assert ann.event_window == 60

    def test_margin_monotonicity(self):
        pdfs = drifting_pdfs(step=0.01)
        windows = []
        for margin in (0.05, 0.1, 0.2, 0.5):
            _, ann = detect_event(pdfs, margin=margin)
            windows.append(ann.event_window if ann.observed else np.inf)
        assert all(b >= a for a, b in zip(windows, windows[1:]))

    def test_determinism(self):
        pdfs = drifting_pdfs()
        _, a = detect_event(pdfs)
        _, b = detect_event(pdfs)
        assert a == b

    def test_event_precedes_record_end(self):
        _, ann = detect_event(drifting_pdfs(step=0.2))
        assert ann.observed
        assert ann.event_window < 100

    def test_event_time_from_window_seconds(self):
        _, ann = detect_event(drifting_pdfs(), window_seconds=1.28)
        assert ann.event_time == pytest.approx(ann.event_window * 1.28)

    def test_default_breakin_is_tenth(self):
        # 40 windows -> break-in 4; drift right after it is caught
        pdfs = drifting_pdfs(n=40, onset=8, step=0.1)
        _, ann = detect_event(pdfs)
        assert ann.observed
        assert ann.event_window >= 4


class TestAnnotationInvariants:
    def test_observed_requires_window(self):
        with pytest.raises(ValueError):
            EventAnnotation(event_window=None, event_time=None, observed=True)
        with pytest.raises(ValueError):
            EventAnnotation(event_window=5, event_time=None, observed=False)


class TestTraceExport:
    def test_csv_schema(self, tmp_path):
        trace = DivergenceTrace(kl=np.array([0.0, 0.1]), sd=np.array([0.0, 0.2]),
                                kl_threshold=0.5, sd_threshold=0.6)
        path = tmp_path / "trace.csv"
        write_trace_csv(trace, path)
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["window", "kl", "sd", "kl_threshold", "sd_threshold"]
        assert len(rows) == 3
        assert float(rows[2][1]) == pytest.approx(0.1)
        assert float(rows[1][3]) == pytest.approx(0.5)
