"""
Folded Franson interferometer: timing peaks, post-selected fringe and
visibility fits.

A pair entering one unbalanced interferometer (imbalance dT) lands in three
coincidence peaks.  With ``rate`` the post-selected pair rate, the mean
rates are

    delays -dT, +dT (long-short, short-long):   rate / 4 each
    delay 0 (long-long + short-short):           rate / 2 * (1 + V cos(phi))

so the peaks follow 1:2:1 without interference, and the central peak is the
fringe ``rate / 2 * (1 + V cos(phi)) + accidental``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.constants import c

__all__ = [
    "FransonConfig",
    "FransonFit",
    "VALIDITY_MARGIN",
    "coherence_time_from_bandwidth",
    "expected_histogram",
    "timing_histogram",
    "fringe",
    "scan_and_fit",
    "fit_fringe",
    "visibility_from_background",
    "write_scan_csv",
]

# "much less than" is taken as a factor of 100
VALIDITY_MARGIN = 100.0


def coherence_time_from_bandwidth(bandwidth_nm, center_nm):
    """T_c = lambda0^2 / (c * dlambda), in ps."""
    if not bandwidth_nm > 0:
        raise ValueError("bandwidth must be positive")
    lam = center_nm * 1e-9
    return lam**2 / (c * bandwidth_nm * 1e-9) * 1e12


@dataclass(frozen=True)
class FransonConfig:
    imbalance_ns: float = 1.5
    window_ps: float = 256.0
    tc1_ps: float = coherence_time_from_bandwidth(0.8, 1471.52)
    tc2_us: float = 1.0
    visibility: float = 1.0
    base_rate_hz: float = 1000.0
    accidental_hz: float = 0.0
    split_factor: float = 0.5   # 50:50 splitter loss on degenerate pairs

    def __post_init__(self):
        if not self.imbalance_ns > 0:
            raise ValueError("arm imbalance must be positive")
        if not 0 < self.window_ps < self.imbalance_ns * 1e3:
            raise ValueError(
                f"coincidence window {self.window_ps} ps must be positive and shorter "
                f"than the arm imbalance {self.imbalance_ns} ns"
            )
        if not (self.tc1_ps > 0 and self.tc2_us > 0):
            raise ValueError("coherence times must be positive")
        if not 0 <= self.visibility <= 1:
            raise ValueError(f"visibility must lie in [0, 1], got {self.visibility}")
        if self.base_rate_hz < 0 or self.accidental_hz < 0:
            raise ValueError("rates must be non-negative")
        if not 0 < self.split_factor <= 1:
            raise ValueError("split factor must lie in (0, 1]")

    @property
    def single_photon_margin(self):
        """dT / T_c1."""
        return self.imbalance_ns * 1e3 / self.tc1_ps

    @property
    def pump_margin(self):
        """T_c2 / dT."""
        return self.tc2_us * 1e3 / self.imbalance_ns

    @property
    def valid(self):
        return self.single_photon_margin > VALIDITY_MARGIN and self.pump_margin > VALIDITY_MARGIN

    @property
    def pair_rate_hz(self):
        return self.base_rate_hz * self.split_factor


def _check_v(v):
    if not 0 <= v <= 1:
        raise ValueError(f"visibility must lie in [0, 1], got {v}")


def expected_histogram(cfg, phi, visibility=None, duration_s=1.0):
    """Mean counts at delays (-dT, 0, +dT)."""
    v = cfg.visibility if visibility is None else visibility
    _check_v(v)
    r = cfg.pair_rate_hz
    acc = cfg.accidental_hz
    side = (r / 4 + acc) * duration_s
    central = (r / 2 * (1 + v * np.cos(phi)) + acc) * duration_s
    return np.array([side, central, side])


def timing_histogram(cfg, phi, visibility=None, duration_s=1.0, seed=None):
    """Seeded Poisson counts in the three coincidence peaks (-dT, 0, +dT)."""
    mean = expected_histogram(cfg, phi, visibility, duration_s)
    return np.random.default_rng(seed).poisson(mean)


def fringe(cfg, phi):
    """Expected post-selected coincidence rate (Hz) in the central peak."""
    return cfg.pair_rate_hz / 2 * (1 + cfg.visibility * np.cos(phi)) + cfg.accidental_hz


def visibility_from_background(v_intrinsic, signal_hz, accidental_hz):
    """Observed visibility V * S / (S + 2B) for pair rate S and accidental rate B."""
    if signal_hz < 0 or accidental_hz < 0:
        raise ValueError("rates must be non-negative")
    if signal_hz == 0 and accidental_hz == 0:
        return 0.0
    return v_intrinsic * signal_hz / (signal_hz + 2 * accidental_hz)


@dataclass(frozen=True)
class FransonFit:
    visibility: float
    visibility_err: float
    phase_offset: float
    baseline: float
    amplitude: float
    covariance: np.ndarray
    phases: np.ndarray
    counts: np.ndarray
    counts_err: np.ndarray
    chi2: float

    def model(self, phi):
        return self.baseline + self.amplitude * np.cos(np.asarray(phi) - self.phase_offset)

    def summary(self):
        return (
            f"V = {self.visibility:.6f}\n"
            f"sigma_V = {self.visibility_err:.6f}\n"
            f"phi0 = {self.phase_offset:.6f}\n"
            f"baseline = {self.baseline:.6f}\n"
        )


def _check_schedule(phases):
    phases = np.asarray(phases, dtype=float)
    if phases.ndim != 1 or phases.size < 6:
        raise ValueError("need at least 6 phase points")
    span = np.ptp(phases)
    if span == 0:
        raise ValueError("degenerate phase schedule: all phases equal")
    if span < 2 * np.pi * (phases.size - 1) / phases.size - 1e-9:
        raise ValueError("phase schedule must span at least one period")
    return phases


def fit_fringe(phases, counts, iterations=4):
    """Weighted fit of a + b cos(phi - phi0) to counts with Poisson errors.

    Linear in (a, p, q) with p = b cos(phi0), q = b sin(phi0).  Weights use
    the model variance, refined for a few iterations starting from the
    observed counts.
    """
    phases = _check_schedule(phases)
    y = np.asarray(counts, dtype=float)
    if y.shape != phases.shape:
        raise ValueError("counts and phases differ in length")
    X = np.column_stack([np.ones_like(phases), np.cos(phases), np.sin(phases)])
    var = np.maximum(y, 1.0)
    for _ in range(iterations):
        w = 1.0 / var
        xtwx = X.T @ (X * w[:, None])
        if np.linalg.cond(xtwx) > 1e12:
            raise ValueError("fit did not converge: singular normal equations")
        cov = np.linalg.inv(xtwx)
        beta = cov @ (X.T @ (w * y))
        var = np.maximum(X @ beta, 1.0)
    a, p, q = beta
    b = np.hypot(p, q)
    if not a > 0:
        raise ValueError("fit did not converge: non-positive baseline")
    v = b / a
    if b > 0:
        grad = np.array([-v / a, p / (a * b), q / (a * b)])
    else:
        grad = np.array([0.0, 1.0 / a, 0.0])
    sigma_v = float(np.sqrt(grad @ cov @ grad))
    resid = (y - X @ beta) / np.sqrt(var)
    return FransonFit(
        float(v), sigma_v, float(np.arctan2(q, p)), float(a), float(b), cov,
        phases, y, np.sqrt(np.maximum(y, 1.0)), float(resid @ resid),
    )


def scan_and_fit(cfg, phases, duration_s, seed=None, noise=True):
    """Simulate a phase scan of the central peak and fit its visibility."""
    phases = _check_schedule(phases)
    mean = fringe(cfg, phases) * duration_s
    counts = np.random.default_rng(seed).poisson(mean) if noise else mean
    return fit_fringe(phases, counts)


def write_scan_csv(path, fit):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["phase_rad", "counts", "counts_err", "fit_value"])
        for row in zip(fit.phases, fit.counts, fit.counts_err, fit.model(fit.phases)):
            w.writerow([f"{v:.10g}" for v in row])
