"""
Biphoton spectrum and absolute pair rate
========================================

With the phase mismatch expanded to second order about degeneracy, the
spectrum is a sinc^2 in (1/lambda - 1/lambda_0)^2 whose width is set by L*GVD.
"""

import numpy as np

from spdcsim import biphoton
from spdcsim.biphoton import SourceParams

p = SourceParams()
print("FWHM: %.1f nm" % biphoton.fwhm(p))

wl = np.arange(1300.0, 1700.0, 25.0)
for x, y in zip(wl, biphoton.spectrum(p, wl).intensity):
    print("%7.1f nm  %s" % (x, "#" * int(round(40 * y))))

###############################################################################
# The closed-form rate and the quadrature of |h|^2 agree; both depend on the
# refractive indices, taken here from the bulk Sellmeier model.

closed = biphoton.pair_rate_closed(p)
numeric = biphoton.pair_rate_numeric(p)
print("closed %.4e Hz/mW, quadrature %.4e Hz/mW (ratio %.6f)" % (closed, numeric, numeric / closed))
print("n0 = %.4f, np = %.4f" % (p.n0, p.np_))

###############################################################################
# Halving the GVD magnitude broadens the band by sqrt(2) and raises the rate
# by the same factor.

q = p.with_(gvd_fs2_per_mm=-30.0)
print("GVD -30: FWHM %.1f nm, rate x%.3f" % (biphoton.fwhm(q), biphoton.pair_rate_closed(q) / closed))

###############################################################################
# A measured band narrower than theory is described by an effective L*GVD.
# Fit a noisy 130 nm spectrum sampled every 10 nm.

lg = biphoton.lgvd_for_fwhm(130.0, p.center_nm)
grid = np.arange(1350.0, 1601.0, 10.0)
counts = np.random.default_rng(1).poisson(biphoton.sinc2_model(grid, lg, 1e4, p.center_nm)).astype(float)
fit = biphoton.fit_sinc_spectrum(grid, counts, np.sqrt(np.maximum(counts, 1)))
print("fitted FWHM %.2f nm, L*GVD %.1f +- %.1f fs^2 (true %.1f)" % (fit.fwhm_nm, fit.lgvd_fs2, fit.lgvd_err, lg))
