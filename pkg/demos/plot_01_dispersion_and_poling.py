"""
Dispersion engineering and the poling period
============================================

Bulk lithium niobate has its zero-GVD point near 1.9 um, far from the
telecom band.  A waveguide whose geometry pulls the GVD to a small negative
value at 1.47 um gives broadband degenerate SPDC.  Here we compare the two
and solve for the first-order poling period.
"""

import numpy as np

from spdcsim import dispersion, qpm

bulk = dispersion.bulk_lithium_niobate()
print("bulk zero-GVD wavelength: %.1f nm" % dispersion.find_zero_gvd(bulk, (1700, 2100)))

###############################################################################
# No mode solver is shipped.  The waveguide is a synthesized effective-index
# table: GVD pinned to -60 fs^2/mm at 1475 nm and kept flat over the band.

wg = dispersion.engineered_waveguide()
for wl in (1200.0, 1350.0, 1475.0, 1570.0):
    print("%7.1f nm  bulk %8.2f  waveguide %7.2f fs^2/mm" % (wl, dispersion.gvd(bulk, wl), dispersion.gvd(wg, wl)))

###############################################################################
# The period that phase matches 735.76 nm -> 2 x 1471.52 nm, and the reverse:
# which fundamental wavelength a 4 um grating serves.

print("poling period: %.4f um" % qpm.solve_poling_period(wg, wg, 735.76))
root = qpm.solve_degenerate_wavelength(wg, wg, qpm.PolingSpec(period_um=4.0), (1400, 1550))
print("degenerate wavelength for 4 um: %.2f nm" % root)
print("f_1 at 50%% duty: %.5f (2/pi = %.5f)" % (qpm.fourier_coefficient(1, 0.5), 2 / np.pi))
