import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.constants import c

from spdcsim import dispersion
from spdcsim.dispersion import OutOfRangeError, TableFormatError


def _symbolic_k(model):
    """k(omega) of a Sellmeier model as a sympy expression plus its derivatives."""
    w = sp.Symbol("w", positive=True)
    lum = 2 * sp.pi * sp.Float(c) / w * 10**6
    n2 = sp.Float(model.A)
    for b, cc in zip(model.B, model.C):
        n2 += sp.Float(b) * lum**2 / (lum**2 - sp.Float(cc))
    k = sp.sqrt(n2) * w / sp.Float(c)
    return w, k, sp.diff(k, w), sp.diff(k, w, 2)


@pytest.fixture(scope="module")
def symbolic(bulk):
    return _symbolic_k(bulk)


def _eval(expr, w, omega):
    return float(expr.subs(w, omega).evalf(30))


# ---- index -------------------------------------------------------------------

def test_constant_table_returns_constant():
    m = dispersion.constant_index(2.2)
    assert m.n(1234.5) == pytest.approx(2.2, abs=1e-14)
    assert np.allclose(m.n(np.linspace(500, 4000, 17)), 2.2, atol=1e-14)


def test_bulk_index_matches_direct_formula(bulk):
    # independent evaluation of the published three-term fit
    l2 = 1.475**2
    n2 = 1 + 2.9804 * l2 / (l2 - 0.02047) + 0.5981 * l2 / (l2 - 0.0666) + 8.9543 * l2 / (l2 - 416.08)
    assert bulk.n(1475.0) == pytest.approx(np.sqrt(n2), rel=1e-14)
    assert bulk.n(1475.0) == pytest.approx(2.13977, abs=1e-5)


def test_table_reproduces_knots_exactly(waveguide):
    wl = waveguide.wavelengths
    assert np.array_equal(waveguide.n(wl), waveguide.values)
    assert waveguide.n(float(wl[37])) == waveguide.values[37]


@pytest.mark.parametrize("wl", [399.0, 5001.0, np.array([1000.0, 6000.0])])
def test_out_of_range_is_error(bulk, wl):
    with pytest.raises(OutOfRangeError):
        bulk.n(wl)


def test_table_validation(tmp_path):
    with pytest.raises(TableFormatError, match="at least 4"):
        dispersion.TabulatedModel([1, 2, 3], [2, 2, 2])
    with pytest.raises(TableFormatError, match="strictly increasing"):
        dispersion.TabulatedModel([1, 2, 2, 3], [2, 2, 2, 2])
    with pytest.raises(TableFormatError):
        dispersion.TabulatedModel([1, 2, 3, 4], [2, 2, 0.9, 2])
    p = tmp_path / "t.txt"
    p.write_text("# wl n\n1000 2.1\n1100 2.1\n1100 2.1\n1200 2.1\n1300 2.1\n")
    with pytest.raises(TableFormatError, match=r":4: duplicate"):
        dispersion.load_table(p)


def test_table_roundtrip(tmp_path, waveguide):
    p = tmp_path / "wg.txt"
    dispersion.save_table(waveguide, p)
    back = dispersion.load_table(p)
    assert np.array_equal(back.wavelengths, waveguide.wavelengths)
    assert np.array_equal(back.values, waveguide.values)


# ---- wavevector ----------------------------------------------------------------

def test_vacuum_like_wavevector():
    m = dispersion.constant_index(1.0 + 1e-15)
    assert dispersion.wavevector(m, 1000.0) == pytest.approx(2 * np.pi * 1e6, rel=1e-12)


def test_wavevector_consistent_with_index(bulk):
    n = dispersion.index(bulk, 1475.0)
    assert dispersion.wavevector(bulk, 1475.0) == pytest.approx(2 * np.pi * n / 1475e-9, rel=1e-15)


def test_doubling_wavelength_halves_k():
    m = dispersion.constant_index(2.2)
    assert dispersion.wavevector(m, 1600.0) == pytest.approx(dispersion.wavevector(m, 800.0) / 2, rel=1e-14)


# ---- group velocity / GVD ---------------------------------------------------

def test_constant_index_group_velocity_and_gvd():
    m = dispersion.constant_index(2.2)
    assert dispersion.group_velocity(m, 1475.0) == pytest.approx(c / 2.2, rel=1e-9)
    assert abs(dispersion.gvd(m, 1475.0)) < 1e-3


def test_group_velocity_matches_symbolic(bulk, symbolic):
    w, _, dk, _ = symbolic
    omega = 2 * np.pi * c / 1475e-9
    assert dispersion.group_velocity(bulk, 1475.0) == pytest.approx(1 / _eval(dk, w, omega), rel=1e-8)


def test_derivative_sweep_matches_symbolic(bulk, symbolic):
    w, _, dk, d2k = symbolic
    for wl in np.linspace(600.0, 3000.0, 100):
        omega = 2 * np.pi * c / (wl * 1e-9)
        u_ref = 1 / _eval(dk, w, omega)
        g_ref = _eval(d2k, w, omega) * 1e27
        assert dispersion.group_velocity(bulk, wl) == pytest.approx(u_ref, rel=1e-8)
        assert dispersion.gvd(bulk, wl) == pytest.approx(g_ref, rel=1e-4, abs=1e-3)


def test_closed_form_agrees_with_stencil(bulk):
    wl = np.linspace(800, 2500, 30)
    assert np.allclose(dispersion.gvd(bulk, wl), dispersion.gvd(bulk, wl, closed_form=True), rtol=1e-4, atol=1e-3)
    assert np.allclose(dispersion.group_velocity(bulk, wl), dispersion.group_velocity(bulk, wl, closed_form=True),
                       rtol=1e-9)


def test_group_velocity_below_c(bulk):
    wl = np.linspace(500, 4500, 50)
    assert np.all(dispersion.group_velocity(bulk, wl) < c)


class _Affine(dispersion.DispersionModel):
    """n = a + b lambda, so k = a omega / c + 2 pi b: affine in omega."""

    kind = "analytic-test"
    wl_min = 400.0
    wl_max = 5000.0

    def _n(self, wl_nm):
        return 2.0 + 1e-4 * wl_nm


def test_gvd_of_affine_k_is_zero():
    # round-off of the fixed-step stencil grows with wavelength; the bound
    # holds over the band the package works in
    g = dispersion.gvd(_Affine(), np.linspace(500.0, 3000.0, 101))
    assert np.max(np.abs(g)) < 1e-3


@settings(max_examples=30, deadline=None)
@given(st.floats(500.0, 4500.0))
def test_derivatives_bit_deterministic(wl):
    bulk = dispersion.bulk_lithium_niobate()
    assert dispersion.gvd(bulk, wl) == dispersion.gvd(bulk, wl)
    assert dispersion.group_velocity(bulk, wl) == dispersion.group_velocity(bulk, wl)


def test_stencil_edge_is_error(bulk):
    with pytest.raises(OutOfRangeError):
        dispersion.gvd(bulk, 400.01)


# ---- zero GVD -------------------------------------------------------------------

def test_bulk_zero_gvd_window(bulk):
    root = dispersion.find_zero_gvd(bulk, (1700.0, 2100.0))
    assert 1850.0 <= root <= 2000.0
    assert dispersion.gvd(bulk, 1850.0) > 0 > dispersion.gvd(bulk, 2000.0)


def test_bracket_independence(bulk):
    a = dispersion.find_zero_gvd(bulk, (1700.0, 2100.0), xtol=1e-3)
    b = dispersion.find_zero_gvd(bulk, (1850.0, 2000.0), xtol=1e-3)
    assert a == pytest.approx(b, abs=2e-3)


def test_linear_gvd_root():
    # k'' linear in lambda around 1500 nm: build n from a synthetic model whose
    # GVD crosses zero there, then compare with a dense sign scan
    wl = np.linspace(900.0, 2200.0, 1301)
    m = dispersion.table_from_function(lambda x: 2.0 + 1e-9 * (x - 1500.0) ** 3, wl)
    grid = np.linspace(1300.0, 1700.0, 401)
    g = dispersion.gvd(m, grid)
    i = np.nonzero(np.diff(np.sign(g)))[0]
    assert i.size == 1
    root = dispersion.find_zero_gvd(m, (1300.0, 1700.0), xtol=1e-3)
    assert grid[i[0]] <= root <= grid[i[0] + 1]


def test_no_sign_change_is_error(bulk):
    with pytest.raises(ValueError, match="does not change sign"):
        dispersion.find_zero_gvd(bulk, (1000.0, 1500.0))


# ---- synthesized waveguide -------------------------------------------------------

def test_waveguide_gvd_anchor(waveguide):
    assert dispersion.gvd(waveguide, 1475.0) == pytest.approx(-60.0, abs=0.5)


def test_waveguide_flat_band(waveguide):
    g = dispersion.gvd(waveguide, np.linspace(1200.0, 1570.0, 38))
    assert np.all(np.abs(g + 60.0) < 5.0)
