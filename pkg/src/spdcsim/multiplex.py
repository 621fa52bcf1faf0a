"""
Tunable WDM filter bank and channelized coincidence (JSI) matrices.

Each channel is a flat-top passband with a super-Gaussian edge,

    T(l) = T_stop + (T_pass - T_stop) * exp(-ln2 * (2 (l - l_c) / w)^16),

T_pass = 10^(-IL/10) and T_stop = 10^(-(IL + ER)/10), so the half-power
points of the passband sit at l_c +- w/2.

Bank ``B`` collects the high-frequency photon (short wavelength, labels
beta_j) and bank ``C`` the low-frequency photon (long wavelength, alpha_j).
Matched pairs share an index, so a perfect source gives a diagonal matrix.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .biphoton import BiphotonSpectrum
from .dispersion import omega_from_wavelength, wavelength_from_omega

__all__ = [
    "Channel",
    "ChannelBank",
    "JSIMatrix",
    "SUPER_GAUSSIAN_ORDER",
    "channel_transmission",
    "default_banks",
    "grid_banks",
    "paired_banks",
    "channel_singles",
    "pair_integrand",
    "jsi_matrix",
    "rejection_ratios",
]

SUPER_GAUSSIAN_ORDER = 8


@dataclass(frozen=True)
class Channel:
    center_nm: float
    width_nm: float = 0.8
    insertion_loss_db: float = 3.0
    extinction_db: float = 60.0
    label: str = ""

    def __post_init__(self):
        if not self.width_nm > 0:
            raise ValueError(f"passband width must be positive, got {self.width_nm}")
        if not self.center_nm > 0:
            raise ValueError(f"channel center must be positive, got {self.center_nm}")
        if not abs(self.extinction_db) > abs(self.insertion_loss_db):
            raise ValueError("extinction must exceed insertion loss (dB magnitude)")

    @property
    def t_pass(self):
        return 10 ** (-self.insertion_loss_db / 10)

    @property
    def t_stop(self):
        return 10 ** (-(self.insertion_loss_db + self.extinction_db) / 10)


@dataclass(frozen=True)
class ChannelBank:
    channels: tuple
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        if not self.channels:
            raise ValueError("channel bank is empty")

    def __len__(self):
        return len(self.channels)

    def __iter__(self):
        return iter(self.channels)

    def __getitem__(self, i):
        return self.channels[i]

    @property
    def centers(self):
        return np.array([ch.center_nm for ch in self.channels])

    @property
    def labels(self):
        return [ch.label for ch in self.channels]


def channel_transmission(channel, wavelength_nm):
    """Linear power transmittance of one channel."""
    x = 2 * (np.asarray(wavelength_nm, dtype=float) - channel.center_nm) / channel.width_nm
    with np.errstate(over="ignore"):
        edge = np.exp(-np.log(2) * x ** (2 * SUPER_GAUSSIAN_ORDER))
    t = channel.t_stop + (channel.t_pass - channel.t_stop) * edge
    return float(t) if t.ndim == 0 else t


def paired_banks(center_nm, detunings, width_nm=0.8, insertion_loss_db=3.0, extinction_db=60.0):
    """Energy-matched bank pair at angular detunings ``detunings`` from ``center_nm``."""
    w0 = omega_from_wavelength(center_nm)
    kw = dict(width_nm=width_nm, insertion_loss_db=insertion_loss_db, extinction_db=extinction_db)
    hi = [
        Channel(float(wavelength_from_omega(w0 + d)), label=f"beta_{j}", **kw)
        for j, d in enumerate(detunings, start=1)
    ]
    lo = [
        Channel(float(wavelength_from_omega(w0 - d)), label=f"alpha_{j}", **kw)
        for j, d in enumerate(detunings, start=1)
    ]
    return ChannelBank(hi, name="B"), ChannelBank(lo, name="C")


def default_banks(center_nm=1471.52, pairs=8, spacing_nm=8.0, **channel_kw):
    """Eight channel pairs on a uniform frequency grid inside the 130 nm band.

    Pair j sits at detuning j * dw with dw the angular-frequency equivalent of
    ``spacing_nm`` at the center; the outermost pair lands about +-64 nm out.
    """
    w0 = omega_from_wavelength(center_nm)
    dw = w0 * spacing_nm / center_nm
    return paired_banks(center_nm, dw * np.arange(1, pairs + 1), **channel_kw)


def grid_banks(center_nm=1471.52, step_nm=10.0, span_nm=200.0, **channel_kw):
    """Sweep grid: both banks stepped by ``step_nm`` across ``span_nm``.

    The default span covers the ~200 nm theoretical band.  Channel k of B is
    matched to channel k of C, mirroring the 2-D sweep of
    a correlation measurement.
    """
    n = int(np.floor(span_nm / 2 / step_nm))
    w0 = omega_from_wavelength(center_nm)
    dw = w0 * step_nm / center_nm
    return paired_banks(center_nm, dw * np.arange(1, n + 1), **channel_kw)


def _spectrum_fn(spec):
    if isinstance(spec, BiphotonSpectrum):
        return spec.evaluate, spec.detuning_range
    if isinstance(spec, tuple) and len(spec) == 2:
        return spec
    raise TypeError("spectrum must be a BiphotonSpectrum or a (callable, (nu_min, nu_max)) pair")


def _passband_nu(channel, w0, sign):
    """Detuning interval (signal side) where ``channel`` is near its passband."""
    half = 1.5 * channel.width_nm
    wl = np.array([channel.center_nm - half, channel.center_nm + half])
    nu = sign * (omega_from_wavelength(wl) - w0)
    return float(nu.min()), float(nu.max())


def _integrate(fn, lo, hi, breaks):
    pts = sorted({lo, hi, *[b for b in breaks if lo < b < hi]})
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        total += quad(fn, a, b, epsabs=0.0, epsrel=1e-10, limit=200)[0]
    return total


def pair_integrand(spec, ch_b, ch_c, center_nm):
    """P(nu) * T_B(w0 + nu) * T_C(w0 - nu) as a function of nu (rad/s)."""
    p, _ = _spectrum_fn(spec)
    w0 = omega_from_wavelength(center_nm)

    def f(nu):
        return (
            p(nu)
            * channel_transmission(ch_b, wavelength_from_omega(w0 + nu))
            * channel_transmission(ch_c, wavelength_from_omega(w0 - nu))
        )

    return f


def channel_singles(spec, channel, center_nm, side):
    """Spectrum integral through one channel, partner unfiltered (side +1 for B, -1 for C)."""
    p, (lo, hi) = _spectrum_fn(spec)
    w0 = omega_from_wavelength(center_nm)
    band = _passband_nu(channel, w0, side)

    def f(nu):
        return p(nu) * channel_transmission(channel, wavelength_from_omega(w0 + side * nu))

    return _integrate(f, lo, hi, band)


@dataclass(frozen=True)
class JSIMatrix:
    """Relative coincidence rates; rows are bank B, columns bank C."""

    linear: np.ndarray
    true: np.ndarray
    accidental: np.ndarray
    row_centers_nm: np.ndarray
    col_centers_nm: np.ndarray
    row_labels: tuple
    col_labels: tuple

    @property
    def db(self):
        with np.errstate(divide="ignore"):
            return 10 * np.log10(self.linear / self.linear.max())

    def to_csv(self, path, db=False):
        data = self.db if db else self.linear
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["B\\C_nm"] + [f"{x:.4f}" for x in self.col_centers_nm])
            for center, row in zip(self.row_centers_nm, data):
                w.writerow([f"{center:.4f}"] + [f"{v:.10g}" for v in row])


def jsi_matrix(spec, bank_b, bank_c, accidental_floor=0.0, center_nm=None):
    """Channelized coincidence matrix with an explicit accidental floor.

    ``spec`` is a ``BiphotonSpectrum`` (evaluated exactly when it carries its
    source parameters, interpolated otherwise) or
    a ``(callable P(nu), (nu_min, nu_max))`` pair.  The accidental term of
    entry (i, j) is ``accidental_floor * max(true) * s_i s_j / (max s_B max s_C)``
    with s the single-channel spectrum integrals, i.e. it follows the
    R1 * R2 scaling of accidental coincidences.
    """
    if accidental_floor < 0:
        raise ValueError("accidental floor must be non-negative")
    if center_nm is None:
        if not isinstance(spec, BiphotonSpectrum):
            raise ValueError("center_nm is required for a callable spectrum")
        center_nm = spec.center_nm
    p, (lo, hi) = _spectrum_fn(spec)
    w0 = omega_from_wavelength(center_nm)
    bands_b = [_passband_nu(ch, w0, +1) for ch in bank_b]
    bands_c = [_passband_nu(ch, w0, -1) for ch in bank_c]
    for band in bands_b + bands_c:
        if band[0] < lo or band[1] > hi:
            raise ValueError(
                "spectrum does not cover every channel passband "
                f"(needs detuning {band[0]:.4g}..{band[1]:.4g} rad/s, has {lo:.4g}..{hi:.4g})"
            )

    true = np.zeros((len(bank_b), len(bank_c)))
    for i, cb in enumerate(bank_b):
        for j, cc in enumerate(bank_c):
            f = pair_integrand(spec, cb, cc, center_nm)
            true[i, j] = _integrate(f, lo, hi, bands_b[i] + bands_c[j])

    acc = np.zeros_like(true)
    if accidental_floor > 0:
        sb = np.array([channel_singles(spec, ch, center_nm, +1) for ch in bank_b])
        sc = np.array([channel_singles(spec, ch, center_nm, -1) for ch in bank_c])
        acc = accidental_floor * true.max() * np.outer(sb, sc) / (sb.max() * sc.max())
    return JSIMatrix(
        true + acc, true, acc, bank_b.centers, bank_c.centers,
        tuple(bank_b.labels), tuple(bank_c.labels),
    )


def rejection_ratios(matrix, pairing="diagonal"):
    """(adjacent, non-adjacent) rejection in dB, worst case over matched pairs.

    Adjacency follows wavelength order when ``matrix`` is a ``JSIMatrix``,
    index order for a bare array.  ``pairing="anti-diagonal"`` declares that
    matched pairs sit on the anti-diagonal.
    """
    if isinstance(matrix, JSIMatrix):
        m = np.array(matrix.linear, dtype=float)
        rank = np.argsort(np.argsort(matrix.row_centers_nm))
    else:
        m = np.array(matrix, dtype=float)
        rank = np.arange(m.shape[0])
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("rejection ratios need a square matrix")
    if pairing == "anti-diagonal":
        m = m[:, ::-1]
    elif pairing != "diagonal":
        raise ValueError(f"unknown pairing convention {pairing!r}")
    n = m.shape[0]
    diag = np.diag(m)
    if np.any(diag <= 0):
        raise ValueError("zero diagonal entry: matched channel pair has no coincidences")
    adj = np.inf
    nonadj = np.inf
    for i in range(n):
        near = []
        far = []
        for j in range(n):
            if j == i:
                continue
            sep = abs(rank[i] - rank[j])
            target = near if sep == 1 else far
            target.extend([m[i, j], m[j, i]])
        with np.errstate(divide="ignore"):
            if near:
                adj = min(adj, 10 * np.log10(diag[i] / max(near)))
            if far:
                nonadj = min(nonadj, 10 * np.log10(diag[i] / max(far)))
    return float(adj), float(nonadj)
