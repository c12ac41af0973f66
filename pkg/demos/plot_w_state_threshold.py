"""
W states and the superatom threshold
====================================

A W state only feeds the symmetric channel, so the ring behaves like one
two-level system with spectral density D_0. At r = 9.5 nm that channel binds
only once the ring is large enough.
"""
import numpy as np

from lspqe import SILVER, GridSpec, SystemGeometry, build_spectral_table, find_bound_state
from lspqe.spectrum import y_function

geom = SystemGeometry(5.0, 9.5, 2)
for N in range(1, 41):
    table = build_spectral_table(SILVER, geom.with_(n_emitters=N), GridSpec(0.01, 8.0, 2000))
    st = find_bound_state(table, 0)
    label = "none" if st is None else f"E = {st.energy:+.4f} eV, Z = {st.residue:.3f}"
    print(f"N = {N:2d}  y0(0) = {y_function(table, 0, 0.0):+.4f}  {label}")
