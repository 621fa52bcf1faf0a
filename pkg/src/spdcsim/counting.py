"""
Singles/coincidence counting: a Poisson forward model and the inverse
estimators for pair rate, CAR, heralding efficiency and spectral brightness.

Random numbers come from numpy's PCG64 bit generator seeded through
``numpy.random.default_rng(seed)``, so a given seed reproduces the same
counts on every platform numpy supports.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DetectorModel",
    "CountingResult",
    "INFINITE_CAR",
    "expected_rates",
    "simulate_counts",
    "simulate_ensemble",
    "estimate_pair_rate",
    "car",
    "expected_car",
    "heralding_efficiency",
    "spectral_brightness",
    "accidental_rate",
    "write_ensemble_csv",
]

INFINITE_CAR = "infinite"


@dataclass(frozen=True)
class DetectorModel:
    """Per-arm efficiency (linear, fiber coupling included), dark rate and window."""

    eta1: float = 0.70
    eta2: float = 0.70
    dark_hz: float = 3500.0
    window_ps: float = 256.0

    def __post_init__(self):
        for name in ("eta1", "eta2"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if not self.dark_hz >= 0:
            raise ValueError(f"dark count rate must be non-negative, got {self.dark_hz}")
        if not self.window_ps > 0:
            raise ValueError(f"coincidence window must be positive, got {self.window_ps}")


@dataclass(frozen=True)
class CountingResult:
    duration_s: float
    singles1: int
    singles2: int
    coincidences: int     # true + accidental, as a counter would see them
    accidentals: int      # separately estimated accidental coincidences

    @property
    def r1(self):
        return self.singles1 / self.duration_s

    @property
    def r2(self):
        return self.singles2 / self.duration_s

    @property
    def rcc(self):
        return self.coincidences / self.duration_s

    @property
    def rac(self):
        return self.accidentals / self.duration_s

    def pair_rate(self, pump_power_mw=1.0, dark_hz=0.0):
        return estimate_pair_rate(self.r1, self.r2, self.rcc, self.rac, pump_power_mw, dark_hz)

    def car(self):
        return car(self.rcc, self.rac)

    def heralding(self, arm=1):
        return heralding_efficiency(self.rcc, self.rac, self.r1 if arm == 1 else self.r2)


def accidental_rate(r1, r2, window_ps):
    """R1 * R2 * dt for two independent detectors."""
    return r1 * r2 * window_ps * 1e-12


def expected_rates(pair_rate_hz, det):
    """Mean (singles1, singles2, true coincidences, accidentals) in Hz."""
    l1 = det.eta1 * pair_rate_hz + det.dark_hz
    l2 = det.eta2 * pair_rate_hz + det.dark_hz
    true = det.eta1 * det.eta2 * pair_rate_hz
    return l1, l2, true, accidental_rate(l1, l2, det.window_ps)


def simulate_counts(pair_rate_hz, det, duration_s, seed=None):
    """Seeded Poisson realisation of one counting run."""
    if pair_rate_hz < 0:
        raise ValueError("pair rate must be non-negative")
    if not duration_s > 0:
        raise ValueError("duration must be positive")
    rng = np.random.default_rng(seed)
    l1, l2, true, acc = expected_rates(pair_rate_hz, det)
    n1, n2, ntrue, nacc, nacc_est = rng.poisson(
        [l1 * duration_s, l2 * duration_s, true * duration_s, acc * duration_s, acc * duration_s]
    )
    return CountingResult(duration_s, int(n1), int(n2), int(ntrue + nacc), int(nacc_est))


def simulate_ensemble(pair_rate_hz, det, duration_s, seeds):
    return [simulate_counts(pair_rate_hz, det, duration_s, seed=s) for s in seeds]


def estimate_pair_rate(r1, r2, rcc, rac, pump_power_mw=1.0, dark_hz=0.0):
    """N = R1 R2 / (Rcc - Rac) per mW of pump (Hz/mW).

    ``dark_hz`` is subtracted from both singles first; the default leaves
    them untouched.
    """
    if not rcc > rac:
        raise ValueError(f"non-physical input: Rcc = {rcc} Hz <= Rac = {rac} Hz")
    if not pump_power_mw > 0:
        raise ValueError("pump power must be positive")
    return (r1 - dark_hz) * (r2 - dark_hz) / (rcc - rac) / pump_power_mw


def car(rcc, rac):
    """Coincidence-to-accidental ratio; ``INFINITE_CAR`` when Rac is zero."""
    if rac < 0:
        raise ValueError("accidental rate must be non-negative")
    if rac == 0:
        return INFINITE_CAR
    return rcc / rac


def expected_car(pair_rate_hz, det):
    _, _, true, acc = expected_rates(pair_rate_hz, det)
    return (true + acc) / acc


def heralding_efficiency(rcc, rac, r_herald):
    """(Rcc - Rac) / R_herald."""
    if not r_herald > 0:
        raise ValueError("heralding-arm rate must be positive")
    return (rcc - rac) / r_herald


def spectral_brightness(r1, r2, rcc, rac, pump_power_mw, bandwidth_nm):
    """Pair rate per mW per nm (Hz/nm/mW)."""
    if not bandwidth_nm > 0:
        raise ValueError("bandwidth must be positive")
    return estimate_pair_rate(r1, r2, rcc, rac, pump_power_mw) / bandwidth_nm


def write_ensemble_csv(path, seeds, results, pump_power_mw=1.0, dark_hz=0.0):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", "R1", "R2", "Rcc", "Rac", "N_est"])
        for seed, r in zip(seeds, results):
            try:
                n_est = f"{r.pair_rate(pump_power_mw, dark_hz):.10g}"
            except ValueError:
                n_est = "nan"
            w.writerow([seed] + [f"{v:.10g}" for v in (r.r1, r.r2, r.rcc, r.rac)] + [n_est])
