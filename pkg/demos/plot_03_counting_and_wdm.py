"""
Coincidence counting and WDM channel pairs
==========================================

Singles and coincidence rates give the pair rate, CAR and heralding
efficiency.  Slicing the broadband spectrum into energy-matched channel pairs
gives a near-diagonal coincidence matrix.
"""

import numpy as np

from spdcsim import biphoton, counting, dispersion, multiplex
from spdcsim.biphoton import SourceParams

r1, r2, rcc, rac = 126e3, 295e3, 4792.0, 8.0
print("N = %.3e Hz/mW" % counting.estimate_pair_rate(r1, r2, rcc, rac, 27.8e-6))
print("CAR = %.0f, heralding = %.2f%%" % (counting.car(rcc, rac), 100 * counting.heralding_efficiency(rcc, rac, r1)))
print("R1 R2 dt at 256 ps = %.1f Hz" % counting.accidental_rate(r1, r2, 256.0))

###############################################################################
# Forward-simulate the counters and invert them again.

det = counting.DetectorModel(eta1=0.0158, eta2=0.0375, dark_hz=3500.0)
runs = counting.simulate_ensemble(7.77e6, det, 10.0, range(20))
est = np.array([r.pair_rate(1.0, det.dark_hz) for r in runs])
print("recovered %.4e +- %.1e Hz (true 7.77e6)" % (est.mean(), est.std(ddof=1) / np.sqrt(est.size)))

###############################################################################
# Eight channel pairs, 0.8 nm passbands with 60 dB extinction, plus an
# accidental floor of 1e-4 of the peak.

p = SourceParams()
w0 = dispersion.omega_from_wavelength(p.center_nm)
nu_max = dispersion.omega_from_wavelength(p.center_nm - 90.0) - w0
spec = biphoton.spectrum(p, np.linspace(-nu_max, nu_max, 2001), units="rad/s")
bank_b, bank_c = multiplex.default_banks()
m = multiplex.jsi_matrix(spec, bank_b, bank_c, accidental_floor=1e-4)
np.set_printoptions(precision=0, suppress=True, linewidth=120)
print(m.db)
print("rejection: adjacent %.1f dB, non-adjacent %.1f dB" % multiplex.rejection_ratios(m))
