"""
Plasmon resonances and the collective spectral density
======================================================

The sphere's multipole resonances sit where Re eps_m = -(n+1)/n. Around a ring
of emitters only azimuthal orders that are multiples of N survive in the
symmetric channel, so the dipole resonance drops out for every N >= 2.
"""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from lspqe import SILVER, GridSpec, SystemGeometry, build_spectral_table, lsp_resonances

w1, w2 = lsp_resonances(SILVER, 1.0, [1, 2])
print(f"dipole {w1:.3f} eV, quadrupole {w2:.3f} eV")

###############################################################################
# Symmetric-channel density for a few ring sizes at r = 8 nm.
grid = GridSpec(2.5, 4.5, 2001)
fig, ax = plt.subplots()
for N in (1, 2, 4, 8):
    table = build_spectral_table(SILVER, SystemGeometry(5.0, 8.0, N), grid)
    ax.semilogy(table.omega, table.d_channels[0], label=f"N = {N}")
for w in (w1, w2):
    ax.axvline(w, color="grey", ls="--", lw=0.7)
ax.set(xlabel="energy (eV)", ylabel="D_0 (eV)")
ax.legend()
fig.savefig("spectral_density.png", dpi=120)

###############################################################################
# The quadrupole weight in D_0 is 2 (w_20 + w_22) for N = 2 but only 4 w_20 for
# N = 4, so the peak height is not monotone in N.
for N in (2, 4, 8):
    t = build_spectral_table(SILVER, SystemGeometry(5.0, 8.0, N), GridSpec(w1, w2, 3))
    print(N, "D0(w1)/D0(w2) =", round(float(t.d_channels[0, 0] / t.d_channels[0, -1]), 4))
