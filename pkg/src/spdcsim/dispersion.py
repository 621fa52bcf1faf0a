"""
Refractive index, group velocity and group-velocity dispersion.

Two kinds of model are supported:

* ``SellmeierModel`` -- analytic bulk dispersion,
  n^2 = A + sum_i B_i lambda^2 / (lambda^2 - C_i), lambda in microns.
* ``TabulatedModel`` -- effective index of a guided mode given on a wavelength
  grid, interpolated with a natural cubic spline.

Wavelengths are in nm at every public entry point; everything internal is SI.
Derivatives are taken in angular frequency with 5-point central differences,
step 1e-4 of the local omega.  GVD is reported in fs^2/mm.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.constants import c
from scipy.interpolate import CubicSpline
from scipy.optimize import bisect

__all__ = [
    "DispersionModel",
    "SellmeierModel",
    "TabulatedModel",
    "OutOfRangeError",
    "TableFormatError",
    "bulk_lithium_niobate",
    "constant_index",
    "table_from_function",
    "load_table",
    "save_table",
    "index",
    "wavevector",
    "group_velocity",
    "gvd",
    "find_zero_gvd",
    "engineered_waveguide",
    "omega_from_wavelength",
    "wavelength_from_omega",
    "GVD_SI_TO_FS2_PER_MM",
]

# s^2/m -> fs^2/mm
GVD_SI_TO_FS2_PER_MM = 1e30 * 1e-3

FD_RELATIVE_STEP = 1e-4


class OutOfRangeError(ValueError):
    """Wavelength outside the validity range of a dispersion model."""


class TableFormatError(ValueError):
    """Malformed tabulated-index data."""


def omega_from_wavelength(wavelength_nm):
    return 2 * np.pi * c / (np.asarray(wavelength_nm, dtype=float) * 1e-9)


def wavelength_from_omega(omega):
    return 2 * np.pi * c / np.asarray(omega, dtype=float) * 1e9


def _maybe_scalar(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


class DispersionModel:
    """Base class: a scalar refractive index n(lambda) over a closed range."""

    kind: str = ""
    wl_min: float
    wl_max: float

    @property
    def valid_range(self):
        return (self.wl_min, self.wl_max)

    def _check_range(self, wavelength_nm):
        wl = np.asarray(wavelength_nm, dtype=float)
        if np.any(~np.isfinite(wl)) or np.any(wl < self.wl_min) or np.any(wl > self.wl_max):
            bad = wl[(wl < self.wl_min) | (wl > self.wl_max) | ~np.isfinite(wl)]
            raise OutOfRangeError(
                f"wavelength {bad.ravel()[0]!r} nm outside valid range "
                f"[{self.wl_min}, {self.wl_max}] nm of {self.kind} model"
            )
        return wl

    def _n(self, wl_nm):
        raise NotImplementedError

    def n(self, wavelength_nm):
        return _maybe_scalar(self._n(self._check_range(wavelength_nm)))


@dataclass(frozen=True, eq=False)
class SellmeierModel(DispersionModel):
    """n^2 = A + sum B_i l^2 / (l^2 - C_i) with l in microns, C_i in um^2."""

    A: float
    B: tuple
    C: tuple
    wl_min: float = 400.0
    wl_max: float = 5000.0
    name: str = "sellmeier"
    kind: str = field(default="analytic-sellmeier", init=False)

    def __post_init__(self):
        object.__setattr__(self, "B", tuple(float(b) for b in self.B))
        object.__setattr__(self, "C", tuple(float(x) for x in self.C))
        if len(self.B) != len(self.C):
            raise ValueError("Sellmeier B and C coefficient lists differ in length")
        if not self.wl_min < self.wl_max:
            raise ValueError("empty wavelength range")
        probe = np.linspace(self.wl_min, self.wl_max, 512)
        n2 = self._n2(probe * 1e-3)
        if np.any(n2 <= 1.0):
            raise ValueError("Sellmeier model gives n <= 1 inside its valid range")

    def _n2(self, lum):
        l2 = lum * lum
        n2 = np.full_like(l2, self.A, dtype=float)
        for b, cc in zip(self.B, self.C):
            n2 = n2 + b * l2 / (l2 - cc)
        return n2

    def _n(self, wl_nm):
        return np.sqrt(self._n2(wl_nm * 1e-3))

    def derivatives(self, wavelength_nm):
        """Closed-form n, dn/dlambda, d2n/dlambda2, with lambda in metres."""
        lum = self._check_range(wavelength_nm) * 1e-3
        l2 = lum * lum
        n2 = self._n2(lum)
        # d(n^2)/dl and d2(n^2)/dl2 in um^-1 and um^-2
        d1 = np.zeros_like(lum)
        d2 = np.zeros_like(lum)
        for b, cc in zip(self.B, self.C):
            den = l2 - cc
            d1 = d1 - 2 * b * cc * lum / den**2
            d2 = d2 + 2 * b * cc * (3 * l2 + cc) / den**3
        n = np.sqrt(n2)
        dn = d1 / (2 * n)
        ddn = (d2 - 2 * dn**2) / (2 * n)
        return n, dn * 1e6, ddn * 1e12


@dataclass(frozen=True, eq=False)
class TabulatedModel(DispersionModel):
    """Effective index on a strictly increasing wavelength grid (nm)."""

    wavelengths: np.ndarray
    values: np.ndarray
    name: str = "table"
    kind: str = field(default="tabulated", init=False)
    wl_min: float = field(init=False)
    wl_max: float = field(init=False)

    def __post_init__(self):
        wl = np.array(self.wavelengths, dtype=float)
        nv = np.array(self.values, dtype=float)
        if wl.ndim != 1 or wl.shape != nv.shape:
            raise TableFormatError("wavelength and index arrays must be 1-D and equal length")
        if wl.size < 4:
            raise TableFormatError("tabulated model needs at least 4 points")
        if np.any(np.diff(wl) <= 0):
            i = int(np.argmax(np.diff(wl) <= 0)) + 1
            raise TableFormatError(f"wavelength grid not strictly increasing at row {i}")
        if not np.all(np.isfinite(nv)) or np.any(nv <= 1.0):
            raise TableFormatError("tabulated index must be finite and > 1")
        wl.setflags(write=False)
        nv.setflags(write=False)
        object.__setattr__(self, "wavelengths", wl)
        object.__setattr__(self, "values", nv)
        object.__setattr__(self, "wl_min", float(wl[0]))
        object.__setattr__(self, "wl_max", float(wl[-1]))
        object.__setattr__(self, "_spline", CubicSpline(wl, nv, bc_type="natural"))

    def _n(self, wl_nm):
        out = np.asarray(self._spline(wl_nm), dtype=float)
        # knots are reproduced exactly, not to spline rounding
        idx = np.searchsorted(self.wavelengths, wl_nm)
        idx = np.clip(idx, 0, self.wavelengths.size - 1)
        hit = self.wavelengths[idx] == wl_nm
        return np.where(hit, self.values[idx], out)


def bulk_lithium_niobate():
    """Extraordinary index of congruent LiNbO3 near room temperature.

    Three-term Sellmeier fit of Zelmon, Small and Jundt (JOSA B 14, 3319,
    1997), valid 0.4-5 um.
    """
    return SellmeierModel(
        A=1.0,
        B=(2.9804, 0.5981, 8.9543),
        C=(0.02047, 0.0666, 416.08),
        wl_min=400.0,
        wl_max=5000.0,
        name="LiNbO3-e (Zelmon 1997)",
    )


def constant_index(n, wl_min=400.0, wl_max=5000.0, points=64):
    """Dispersionless table, mainly for tests and sanity checks."""
    wl = np.linspace(wl_min, wl_max, points)
    return TabulatedModel(wl, np.full_like(wl, float(n)), name=f"n={n}")


def table_from_function(fn, wavelengths_nm, name="synthetic"):
    """Sample ``fn(wavelength_nm) -> n`` on a grid and wrap it as a table."""
    wl = np.asarray(wavelengths_nm, dtype=float)
    return TabulatedModel(wl, np.asarray(fn(wl), dtype=float), name=name)


def load_table(path, name=None):
    """Read a ``wavelength_nm n_eff`` text table; '#' starts a comment."""
    path = Path(path)
    rows = []
    last = None
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise TableFormatError(f"{path}:{lineno}: expected 'wavelength_nm n_eff', got {raw!r}")
        try:
            wl, n = float(parts[0]), float(parts[1])
        except ValueError:
            raise TableFormatError(f"{path}:{lineno}: non-numeric entry {raw!r}") from None
        if last is not None:
            if wl == last:
                raise TableFormatError(f"{path}:{lineno}: duplicate wavelength {wl} nm")
            if wl < last:
                raise TableFormatError(
                    f"{path}:{lineno}: wavelength {wl} nm not increasing (previous {last} nm)"
                )
        rows.append((wl, n))
        last = wl
    if len(rows) < 4:
        raise TableFormatError(f"{path}: need at least 4 rows, found {len(rows)}")
    arr = np.array(rows)
    return TabulatedModel(arr[:, 0], arr[:, 1], name=name or path.stem)


def save_table(model, path, header=None):
    with open(path, "w") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for wl, n in zip(model.wavelengths, model.values):
            fh.write(f"{float(wl)!r} {float(n)!r}\n")


def index(model, wavelength_nm):
    return model.n(wavelength_nm)


def wavevector(model, wavelength_nm):
    """k = 2 pi n / lambda in rad/m."""
    wl = np.asarray(wavelength_nm, dtype=float)
    return _maybe_scalar(2 * np.pi * np.asarray(model.n(wl)) / (wl * 1e-9))


def _k_of_omega(model, omega):
    wl = wavelength_from_omega(omega)
    return np.asarray(model.n(wl)) * omega / c


def _stencil(model, wavelength_nm):
    wl = np.asarray(wavelength_nm, dtype=float)
    omega = omega_from_wavelength(wl)
    h = FD_RELATIVE_STEP * omega
    lo = wavelength_from_omega(omega + 2 * h)
    hi = wavelength_from_omega(omega - 2 * h)
    if np.any(lo < model.wl_min) or np.any(hi > model.wl_max):
        raise OutOfRangeError(
            f"wavelength too close to the edge of [{model.wl_min}, {model.wl_max}] nm "
            "for the finite-difference stencil"
        )
    k = [_k_of_omega(model, omega + j * h) for j in (-2, -1, 0, 1, 2)]
    return k, h


def group_velocity(model, wavelength_nm, closed_form=False):
    """u = d(omega)/dk in m/s."""
    if closed_form:
        if not isinstance(model, SellmeierModel):
            raise TypeError("closed-form group velocity needs an analytic model")
        wl_m = np.asarray(wavelength_nm, dtype=float) * 1e-9
        n, dn, _ = model.derivatives(wavelength_nm)
        return _maybe_scalar(c / (n - wl_m * dn))
    (km2, km1, _, kp1, kp2), h = _stencil(model, wavelength_nm)
    dk = (-kp2 + 8 * kp1 - 8 * km1 + km2) / (12 * h)
    return _maybe_scalar(1.0 / dk)


def gvd(model, wavelength_nm, closed_form=False):
    """d2k/d(omega)2 in fs^2/mm."""
    if closed_form:
        if not isinstance(model, SellmeierModel):
            raise TypeError("closed-form GVD needs an analytic model")
        wl_m = np.asarray(wavelength_nm, dtype=float) * 1e-9
        _, _, ddn = model.derivatives(wavelength_nm)
        beta2 = wl_m**3 / (2 * np.pi * c**2) * ddn
        return _maybe_scalar(beta2 * GVD_SI_TO_FS2_PER_MM)
    (km2, km1, k0, kp1, kp2), h = _stencil(model, wavelength_nm)
    d2k = (-kp2 + 16 * kp1 - 30 * k0 + 16 * km1 - km2) / (12 * h * h)
    return _maybe_scalar(d2k * GVD_SI_TO_FS2_PER_MM)


def find_zero_gvd(model, bracket, xtol=0.1):
    """Wavelength (nm) where the GVD changes sign inside ``bracket``."""
    a, b = float(bracket[0]), float(bracket[1])
    fa, fb = gvd(model, a), gvd(model, b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if np.sign(fa) == np.sign(fb):
        raise ValueError(f"GVD does not change sign over [{a}, {b}] nm ({fa:.3g}, {fb:.3g} fs^2/mm)")
    return bisect(lambda wl: gvd(model, wl), a, b, xtol=xtol)


_WG_POWERS = np.array([0, -2, 2, 4, -4, 6])


def engineered_waveguide(
    n_signal=None,
    degenerate_nm=1471.52,
    period_um=4.0,
    gvd_fs2_per_mm=-60.0,
    gvd_anchor_nm=1475.0,
    flat_band_nm=(1150.0, 1600.0),
    grid_nm=(600.0, 2000.0, 5.0),
):
    """Synthetic effective-index table for a dispersion-engineered waveguide.

    No mode solver is involved.  n(l) = sum a_j l^p (l in um,
    p in {0, -2, 2, 4, -4, 6}) is fitted so that

    * n(degenerate) = ``n_signal`` (bulk LN value when None),
    * first-order QPM holds at degeneracy for ``period_um``,
    * GVD(``gvd_anchor_nm``) = ``gvd_fs2_per_mm`` exactly,

    and, in the least-squares sense, the GVD stays at ``gvd_fs2_per_mm``
    across ``flat_band_nm``.
    """
    ls = degenerate_nm * 1e-3
    lp = ls / 2
    if n_signal is None:
        n_signal = bulk_lithium_niobate().n(degenerate_nm)
    p = _WG_POWERS

    def basis(lum):
        return lum**p

    def gvd_row(lum):
        scale = (lum * 1e-6) ** 3 / (2 * np.pi * c**2) * 1e12 * GVD_SI_TO_FS2_PER_MM
        return scale * p * (p - 1) * lum ** (p - 2.0)

    eq = np.array([basis(ls), basis(lp) - basis(ls), gvd_row(gvd_anchor_nm * 1e-3)])
    rhs_eq = np.array([n_signal, lp / period_um, gvd_fs2_per_mm])
    band = np.linspace(flat_band_nm[0], flat_band_nm[1], 40) * 1e-3
    G = np.array([gvd_row(lum) for lum in band])
    g = np.full(band.size, float(gvd_fs2_per_mm))
    nb, ne = p.size, eq.shape[0]
    kkt = np.block([[2 * G.T @ G, eq.T], [eq, np.zeros((ne, ne))]])
    coeffs = np.linalg.solve(kkt, np.concatenate([2 * G.T @ g, rhs_eq]))[:nb]

    wl = np.arange(grid_nm[0], grid_nm[1] + 0.5 * grid_nm[2], grid_nm[2])
    values = basis((wl * 1e-3)[:, None]) @ coeffs
    return TabulatedModel(wl, values, name="engineered waveguide (synthetic)")
