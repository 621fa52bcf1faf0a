"""Quasi-phase-matching arithmetic for periodically poled waveguides."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .dispersion import wavevector

__all__ = [
    "PolingSpec",
    "NoPhaseMatchingError",
    "fourier_coefficient",
    "grating_vector",
    "phase_mismatch",
    "degenerate_mismatch",
    "solve_poling_period",
    "solve_degenerate_wavelength",
]

ENERGY_RTOL = 1e-6


class NoPhaseMatchingError(ValueError):
    """No QPM solution exists for the requested configuration."""


@dataclass(frozen=True)
class PolingSpec:
    """Poling period (um), duty cycle, interaction length (mm) and QPM order."""

    period_um: float = 4.0
    duty_cycle: float = 0.5
    length_mm: float = 6.0
    order: int = 1

    def __post_init__(self):
        if not self.period_um > 0:
            raise ValueError(f"poling period must be positive, got {self.period_um}")
        if not 0 < self.duty_cycle < 1:
            raise ValueError(f"duty cycle must lie in (0, 1), got {self.duty_cycle}")
        if not self.length_mm > 0:
            raise ValueError(f"interaction length must be positive, got {self.length_mm}")
        if int(self.order) != self.order or self.order < 1:
            raise ValueError(f"QPM order must be a positive integer, got {self.order}")


def fourier_coefficient(m, duty_cycle=0.5):
    """|f_m| of a +-1 poling profile: 2 |sin(m pi D)| / (m pi)."""
    if int(m) != m or m < 1:
        raise ValueError(f"QPM order must be a positive integer, got {m}")
    if not 0 < duty_cycle < 1:
        raise ValueError(f"duty cycle must lie in (0, 1), got {duty_cycle}")
    return abs(2.0 / (m * np.pi) * np.sin(m * np.pi * duty_cycle))


def grating_vector(poling):
    """G_m = 2 pi m / Lambda in rad/m."""
    return 2 * np.pi * poling.order / (poling.period_um * 1e-6)


def _check_energy(wl_p, wl_s, wl_i):
    inv_p = 1.0 / np.asarray(wl_p, dtype=float)
    residual = inv_p - 1.0 / np.asarray(wl_s, dtype=float) - 1.0 / np.asarray(wl_i, dtype=float)
    if np.any(np.abs(residual) > ENERGY_RTOL * inv_p):
        raise ValueError(
            "energy conservation violated: 1/lp - 1/ls - 1/li = "
            f"{np.max(np.abs(residual)):.3g} nm^-1"
        )


def phase_mismatch(disp_pump, disp_signal, disp_idler, wl_p, wl_s, wl_i, poling):
    """Delta k = k_p - k_s - k_i - 2 pi m / Lambda, rad/m."""
    _check_energy(wl_p, wl_s, wl_i)
    kp = np.asarray(wavevector(disp_pump, wl_p))
    ks = np.asarray(wavevector(disp_signal, wl_s))
    ki = np.asarray(wavevector(disp_idler, wl_i))
    dk = kp - (ks + ki) - grating_vector(poling)
    return float(dk) if dk.ndim == 0 else dk


def degenerate_mismatch(disp_pump, disp_half, wl_degenerate, poling):
    """Delta k at exact degeneracy, pump at half the given wavelength."""
    wl = float(wl_degenerate)
    kp = wavevector(disp_pump, wl / 2)
    ks = wavevector(disp_half, wl)
    return kp - 2 * ks - grating_vector(poling)


def solve_poling_period(disp_pump, disp_half, wl_pump, m=1):
    """Poling period (um) phase matching degenerate SPDC from ``wl_pump``."""
    if int(m) != m or m < 1:
        raise ValueError(f"QPM order must be a positive integer, got {m}")
    kp = wavevector(disp_pump, wl_pump)
    ks = wavevector(disp_half, 2 * wl_pump)
    mismatch = kp - 2 * ks
    if not mismatch > 0:
        raise NoPhaseMatchingError(
            f"k_p - 2 k_s = {mismatch:.4g} rad/m <= 0: no QPM solution for this pump"
        )
    return 2 * np.pi * m / mismatch * 1e6


def solve_degenerate_wavelength(disp_pump, disp_half, poling, bracket, xtol=0.01):
    """Degenerate signal wavelength (nm) where Delta k vanishes, by bisection.

    The pump sits at half the returned wavelength.
    """
    a, b = float(bracket[0]), float(bracket[1])

    def f(wl):
        return degenerate_mismatch(disp_pump, disp_half, wl, poling)

    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if np.sign(fa) == np.sign(fb):
        raise NoPhaseMatchingError(
            f"Delta k does not change sign over [{a}, {b}] nm ({fa:.4g}, {fb:.4g} rad/m)"
        )
    return bisect(f, a, b, xtol=xtol)
