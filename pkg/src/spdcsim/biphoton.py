"""
Biphoton spectrum and absolute pair rate of degenerate type-0 SPDC.

The joint spectral amplitude of a length-L, QPM-matched waveguide is

    h(L dk) = exp(-i L dk / 2) sinc(L dk / 2),     sinc(x) = sin(x) / x,

with ``nu`` the angular-frequency detuning of the signal from omega_p / 2
(the idler sits at -nu).  In ``"quadratic"`` mode dk = GVD0 * nu**2; in
``"exact"`` mode dk is the full mismatch k_p - k_s - k_i - 2 pi / Lambda
evaluated on a dispersion model.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.constants import c, epsilon_0
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import bisect, curve_fit

from .dispersion import (
    DispersionModel,
    bulk_lithium_niobate,
    omega_from_wavelength,
    wavelength_from_omega,
)
from .qpm import PolingSpec, phase_mismatch, solve_poling_period

__all__ = [
    "SourceParams",
    "BiphotonSpectrum",
    "SincFit",
    "QuadratureError",
    "MODES",
    "jsa",
    "phase_mismatch_at",
    "first_zero_detuning",
    "spectrum",
    "spectrum_wavelength",
    "fwhm",
    "fwhm_quadratic_closed",
    "lgvd_for_fwhm",
    "pair_rate_prefactor",
    "pair_rate_closed",
    "pair_rate_numeric",
    "sinc2_model",
    "fit_sinc_spectrum",
    "write_spectrum_csv",
]

MODES = ("quadratic", "exact")

# sinc^2(x) = 1/2
SINC2_HALF_X = 1.3915573782515103

FS2_PER_MM_TO_SI = 1e-27   # s^2/m
FS2_TO_S2 = 1e-30


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested accuracy."""


@dataclass(frozen=True)
class SourceParams:
    """Everything the pair-rate and spectrum formulas need.

    Units: nm, mW, pm/V, um^2, mm, fs^2/mm.  ``overlap`` is alpha^2.
    ``n_signal`` and ``n_pump`` override the bulk Sellmeier indices at
    2*wl_pump and wl_pump.  ``dispersion`` is only needed for exact mode; its
    poling period is solved for degeneracy unless ``period_um`` is given.
    """

    wl_pump_nm: float = 735.76
    power_mw: float = 1.0
    d33_pm_per_v: float = 33.0
    overlap: float = 0.928
    area_um2: float = 1.26
    length_mm: float = 6.0
    gvd_fs2_per_mm: float = -60.0
    n_signal: Optional[float] = None
    n_pump: Optional[float] = None
    dispersion: Optional[DispersionModel] = field(default=None, compare=False)
    period_um: Optional[float] = None

    def __post_init__(self):
        for name in ("wl_pump_nm", "power_mw", "d33_pm_per_v", "overlap", "area_um2", "length_mm"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")
        if not np.isfinite(self.gvd_fs2_per_mm):
            raise ValueError("gvd_fs2_per_mm must be finite")
        for name in ("n_signal", "n_pump"):
            v = getattr(self, name)
            if v is not None and not v > 1:
                raise ValueError(f"{name} must exceed 1, got {v}")

    @property
    def center_nm(self):
        return 2 * self.wl_pump_nm

    @property
    def n0(self):
        if self.n_signal is not None:
            return float(self.n_signal)
        return bulk_lithium_niobate().n(self.center_nm)

    @property
    def np_(self):
        if self.n_pump is not None:
            return float(self.n_pump)
        return bulk_lithium_niobate().n(self.wl_pump_nm)

    @property
    def lgvd_si(self):
        """L * GVD0 in s^2."""
        return self.length_mm * 1e-3 * self.gvd_fs2_per_mm * FS2_PER_MM_TO_SI

    def poling(self):
        if self.dispersion is None:
            raise ValueError("exact-dispersion mode needs SourceParams.dispersion")
        period = self.period_um
        if period is None:
            period = solve_poling_period(self.dispersion, self.dispersion, self.wl_pump_nm)
        return PolingSpec(period_um=period, length_mm=self.length_mm)

    def with_(self, **changes):
        return replace(self, **changes)


def _check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def phase_mismatch_at(params, nu, mode="quadratic"):
    """Delta k (rad/m) at signal detuning ``nu`` (rad/s)."""
    _check_mode(mode)
    nu = np.asarray(nu, dtype=float)
    if mode == "quadratic":
        return params.gvd_fs2_per_mm * FS2_PER_MM_TO_SI * nu**2
    model = params.dispersion
    if model is None:
        raise ValueError("exact-dispersion mode needs SourceParams.dispersion")
    poling = params.poling()
    wp = omega_from_wavelength(params.wl_pump_nm)
    wl_s = wavelength_from_omega(wp / 2 + nu)
    wl_i = wavelength_from_omega(wp / 2 - nu)
    return phase_mismatch(model, model, model, params.wl_pump_nm, wl_s, wl_i, poling)


def jsa(params, nu, mode="quadratic"):
    """Joint spectral amplitude h(L dk) at detuning ``nu`` (rad/s)."""
    half = 0.5 * params.length_mm * 1e-3 * np.asarray(phase_mismatch_at(params, nu, mode))
    h = np.exp(-1j * half) * np.sinc(half / np.pi)
    return complex(h) if h.ndim == 0 else h


def first_zero_detuning(params):
    """nu_0 = sqrt(2 pi / (L |GVD0|)), first zero of the quadratic JSA."""
    lg = abs(params.lgvd_si)
    if lg == 0:
        raise ValueError("first zero undefined for zero GVD")
    return np.sqrt(2 * np.pi / lg)


@dataclass(frozen=True)
class BiphotonSpectrum:
    mode: str
    center_nm: float
    detuning: np.ndarray        # rad/s, signal side
    wavelength_nm: np.ndarray
    intensity: np.ndarray
    params: Optional[SourceParams] = field(default=None, repr=False, compare=False)

    @property
    def detuning_range(self):
        return float(self.detuning.min()), float(self.detuning.max())

    def evaluate(self, nu):
        """P at arbitrary detunings: exact formula if known, else interpolation."""
        if self.params is not None:
            return np.abs(jsa(self.params, nu, self.mode)) ** 2
        order = np.argsort(self.detuning)
        return np.interp(nu, self.detuning[order], self.intensity[order])

    def to_csv(self, path):
        write_spectrum_csv(path, self.wavelength_nm, self.intensity)


def spectrum(params, grid, mode="quadratic", units="nm"):
    """Sample P = |h|^2 on a wavelength (nm) or detuning (rad/s) grid."""
    _check_mode(mode)
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise ValueError("empty spectrum grid")
    w0 = omega_from_wavelength(params.center_nm)
    if units == "nm":
        wl = grid
        nu = omega_from_wavelength(wl) - w0
    elif units == "rad/s":
        nu = grid
        wl = wavelength_from_omega(w0 + nu)
    else:
        raise ValueError(f"units must be 'nm' or 'rad/s', got {units!r}")
    if mode == "quadratic" and units == "nm":
        intensity = spectrum_wavelength(params, wl)
    else:
        intensity = np.abs(jsa(params, nu, mode)) ** 2
    return BiphotonSpectrum(
        mode, params.center_nm, nu, wl, np.asarray(intensity, dtype=float), params=params
    )


def spectrum_wavelength(params, wavelength_nm):
    """P(lambda) = sinc^2[2 pi^2 c^2 L GVD0 (1/lambda - 1/(2 lambda_p))^2]."""
    inv = 1.0 / (np.asarray(wavelength_nm, dtype=float) * 1e-9) - 1.0 / (params.center_nm * 1e-9)
    x = 2 * np.pi**2 * c**2 * params.lgvd_si * inv**2
    return np.sinc(x / np.pi) ** 2


def _detuning_window(params, mode, window):
    if mode == "quadratic":
        return window * first_zero_detuning(params)
    # exact mode: stay inside the model range on both sides
    model = params.dispersion
    if model is None:
        raise ValueError("exact-dispersion mode needs SourceParams.dispersion")
    w0 = omega_from_wavelength(params.center_nm)
    lim = min(
        omega_from_wavelength(model.wl_min) - w0,
        w0 - omega_from_wavelength(model.wl_max),
    )
    nu_max = window * first_zero_detuning(params) if params.gvd_fs2_per_mm else lim
    return min(nu_max, 0.999 * lim)


def fwhm(params, mode="quadratic", window=3.0, samples=4001, xtol=0.01):
    """Full width (nm) between the outermost half-maximum wavelengths."""
    _check_mode(mode)
    nu_max = _detuning_window(params, mode, window)
    w0 = omega_from_wavelength(params.center_nm)
    wl = np.sort(wavelength_from_omega(w0 + np.linspace(-nu_max, nu_max, samples)))
    p = spectrum(params, wl, mode).intensity
    peak = p.max()
    above = np.nonzero(p >= 0.5 * peak)[0]
    if above.size == 0 or above[0] == 0 or above[-1] == wl.size - 1:
        raise ValueError("no half-maximum crossing inside the search window")

    def excess(x):
        return spectrum(params, [x], mode).intensity[0] - 0.5 * peak

    lo = bisect(excess, wl[above[0] - 1], wl[above[0]], xtol=xtol)
    hi = bisect(excess, wl[above[-1]], wl[above[-1] + 1], xtol=xtol)
    return hi - lo


def fwhm_quadratic_closed(lgvd_fs2, center_nm):
    """Closed-form FWHM (nm) of the quadratic-mode P(lambda)."""
    d = np.sqrt(SINC2_HALF_X / (2 * np.pi**2 * c**2 * abs(lgvd_fs2) * FS2_TO_S2))
    inv0 = 1.0 / (center_nm * 1e-9)
    return (1.0 / (inv0 - d) - 1.0 / (inv0 + d)) * 1e9


def lgvd_for_fwhm(fwhm_nm, center_nm):
    """|L * GVD0| (fs^2) giving a quadratic-mode FWHM of ``fwhm_nm``."""
    if np.any(~(np.asarray(fwhm_nm) > 0)):
        raise ValueError("FWHM must be positive")
    # FWHM = 2d / (inv0^2 - d^2), solved for the half-width d in 1/m
    w = fwhm_nm * 1e-9
    inv0 = 1.0 / (center_nm * 1e-9)
    d = (np.sqrt(1 + (w * inv0) ** 2) - 1) / w
    return SINC2_HALF_X / (2 * np.pi**2 * c**2 * d**2) / FS2_TO_S2


def pair_rate_prefactor(params):
    """|A|^2 in s^-2 (rate per unit angular detuning), with |E_p|^2 folded in."""
    d = params.d33_pm_per_v * 1e-12
    L = params.length_mm * 1e-3
    S = params.area_um2 * 1e-12
    P = params.power_mw * 1e-3
    wp = omega_from_wavelength(params.wl_pump_nm)
    ep2 = 2 * P / (epsilon_0 * params.np_ * c * S)
    return (d * L * wp / (2 * np.pi * c * params.n0)) ** 2 * params.overlap * ep2


def pair_rate_closed(params):
    """Closed-form pair generation rate (Hz) at ``params.power_mw``."""
    if params.gvd_fs2_per_mm == 0:
        raise ValueError("closed-form pair rate is singular at zero GVD")
    d = params.d33_pm_per_v * 1e-12
    L = params.length_mm * 1e-3
    S = params.area_um2 * 1e-12
    P = params.power_mw * 1e-3
    lp = params.wl_pump_nm * 1e-9
    gvd_si = abs(params.gvd_fs2_per_mm) * FS2_PER_MM_TO_SI
    pref = 8 * P * d**2 * params.overlap / (3 * epsilon_0 * c * S * lp**2 * params.n0**2 * params.np_)
    return pref * np.sqrt(2 * np.pi * L**3 / gvd_si)


def pair_rate_numeric(params, window=20.0, mode="quadratic", rtol=1e-6):
    """|A|^2 * integral of |h|^2 over nu in [-window*nu0, window*nu0] (Hz).

    The integral is split at the zeros of the quadratic JSA so each adaptive
    Gauss-Kronrod piece sees at most one lobe.
    """
    _check_mode(mode)
    if params.gvd_fs2_per_mm == 0:
        raise ValueError("integration window is set by the GVD, which is zero")
    if window < 0:
        raise ValueError("window must be non-negative")
    if window == 0:
        return 0.0
    nu0 = first_zero_detuning(params)
    nu_max = window * nu0 if mode == "quadratic" else _detuning_window(params, mode, window)
    nz = int(np.floor((nu_max / nu0) ** 2))
    edges = np.concatenate([[0.0], nu0 * np.sqrt(np.arange(1, nz + 1)), [nu_max]])
    edges = np.unique(edges[edges <= nu_max])

    def integrand(x):
        return abs(jsa(params, x, mode)) ** 2

    total = 0.0
    err = 0.0
    for sign in ((1.0,) if mode == "quadratic" else (1.0, -1.0)):
        for a, b in zip(edges[:-1], edges[1:]):
            lo, hi = (a, b) if sign > 0 else (-b, -a)
            with warnings.catch_warnings():
                warnings.simplefilter("error", IntegrationWarning)
                try:
                    val, e = quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-10, limit=200)
                except IntegrationWarning as exc:
                    raise QuadratureError(f"quadrature failed on [{lo:.4g}, {hi:.4g}]: {exc}") from None
            total += val
            err += e
    if mode == "quadratic":
        total *= 2
        err *= 2
    if total > 0 and err / total > rtol:
        raise QuadratureError(f"relative quadrature error {err / total:.2g} exceeds {rtol}")
    return pair_rate_prefactor(params) * total


def sinc2_model(wavelength_nm, lgvd_fs2, amplitude, center_nm):
    """amplitude * sinc^2[2 pi^2 c^2 (L GVD0) (1/lambda - 1/center)^2]."""
    inv = 1e9 / np.asarray(wavelength_nm, dtype=float) - 1e9 / center_nm
    x = 2 * np.pi**2 * c**2 * lgvd_fs2 * FS2_TO_S2 * inv**2
    return amplitude * np.sinc(x / np.pi) ** 2


@dataclass(frozen=True)
class SincFit:
    lgvd_fs2: float
    amplitude: float
    center_nm: float
    lgvd_err: float
    amplitude_err: float
    center_err: float
    covariance: np.ndarray
    chi2: float
    dof: int

    @property
    def fwhm_nm(self):
        return fwhm_quadratic_closed(self.lgvd_fs2, self.center_nm)


def _initial_guesses(wl, y, sig):
    """Starting point for the sinc^2 fit from a coarse (L GVD0, center) grid.

    The least-squares surface has false minima once the center starts a
    few nm off, so a local solver alone is not enough.  On the grid the
    amplitude is solved in closed form.
    """
    span = np.ptp(wl)
    widths = np.geomspace(span / 30, 2 * span, 48)
    inner = wl[(wl >= wl.min() + 0.1 * span) & (wl <= wl.max() - 0.1 * span)]
    centers = np.linspace(inner.min(), inner.max(), 121) if inner.size else np.array([wl[np.argmax(y)]])
    W, C0 = np.meshgrid(widths, centers, indexing="ij")
    lg = lgvd_for_fwhm(W, C0)[..., None]
    f = sinc2_model(wl, lg, 1.0, C0[..., None])
    wt = 1.0 / sig**2
    den = np.sum(wt * f * f, axis=-1)
    amp = np.clip(np.sum(wt * f * y, axis=-1) / np.where(den > 0, den, 1.0), 0.0, None)
    chi2 = np.sum(wt * (y - amp[..., None] * f) ** 2, axis=-1)
    chi2[den == 0] = np.inf
    i, j = np.unravel_index(np.argmin(chi2), chi2.shape)
    best = (chi2[i, j], (float(lg[i, j, 0]), float(amp[i, j]), float(C0[i, j])))
    return [best[1]] if np.isfinite(best[0]) else []


def fit_sinc_spectrum(wavelength_nm, counts, counts_err, p0=None):
    """Weighted least-squares fit of a sinc^2 spectrum.

    Free parameters are |L GVD0| (fs^2), the peak amplitude and the center
    wavelength; weights are 1 / counts_err**2.  Without ``p0`` the start comes
    from a coarse grid search.
    """
    wl = np.asarray(wavelength_nm, dtype=float)
    y = np.asarray(counts, dtype=float)
    sig = np.asarray(counts_err, dtype=float)
    if not (wl.shape == y.shape == sig.shape) or wl.ndim != 1:
        raise ValueError("wavelength, counts and errors must be 1-D arrays of equal length")
    if wl.size < 5:
        raise ValueError("need at least 5 spectrum samples")
    if np.any(~(sig > 0)):
        raise ValueError("count errors must be strictly positive")
    if p0 is None:
        starts = _initial_guesses(wl, y, sig)
    else:
        starts = [tuple(p0)]
    best = None
    for guess in starts:
        try:
            popt, pcov = curve_fit(
                sinc2_model, wl, y, p0=guess, sigma=sig, absolute_sigma=True,
                bounds=([0.0, 0.0, wl.min()], [np.inf, np.inf, wl.max()]),
            )
        except (RuntimeError, ValueError) as exc:
            err = exc
            continue
        chi2 = float(np.sum(((y - sinc2_model(wl, *popt)) / sig) ** 2))
        if best is None or chi2 < best[0]:
            best = (chi2, popt, pcov)
    if best is None:
        raise ValueError(f"sinc^2 fit failed: {err if starts else 'no usable starting point'}") from None
    _, popt, pcov = best
    if not np.all(np.isfinite(pcov)):
        raise ValueError("degenerate design matrix: parameter covariance is not finite")
    resid = (y - sinc2_model(wl, *popt)) / sig
    perr = np.sqrt(np.diag(pcov))
    return SincFit(
        float(popt[0]), float(popt[1]), float(popt[2]),
        float(perr[0]), float(perr[1]), float(perr[2]),
        pcov, float(resid @ resid), wl.size - 3,
    )


def write_spectrum_csv(path, wavelength_nm, intensity, counts_err=None, fit_value=None):
    """CSV with header ``wavelength_nm,intensity`` (or counts columns for fits)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if counts_err is None:
            w.writerow(["wavelength_nm", "intensity"])
            for row in zip(wavelength_nm, intensity):
                w.writerow([f"{v:.10g}" for v in row])
        else:
            header = ["wavelength_nm", "counts", "counts_err"]
            cols = [wavelength_nm, intensity, counts_err]
            if fit_value is not None:
                header.append("fit_value")
                cols.append(fit_value)
            w.writerow(header)
            for row in zip(*cols):
                w.writerow([f"{v:.10g}" for v in row])
