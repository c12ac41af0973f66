import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import optimize

from lspqe import SILVER, GridSpec, SpectralTable, SystemGeometry, bound_state_population, build_spectral_table
from lspqe import eigen_residual, find_bound_state, find_bound_states, scan_spectrum, threshold_distance
from lspqe.spectrum import AbsentStateError, PrecisionError, y_function


def rect_table(c, a, b, w0, n=200_001):
    om = np.linspace(a, b, n)
    d = np.full((1, n), c)
    return SpectralTable(om, d.copy(), 1, w0, d_channels=d)


def rect_closed_form(c, a, b, w0):
    def g(e):
        return w0 - c * math.log((b - e) / (a - e)) - e

    return g


@pytest.mark.parametrize("c,a,b,w0", [(0.2, 0.01, 5.0, 0.8), (0.5, 0.05, 3.0, 0.3), (0.05, 0.001, 8.0, 0.2)])
def test_rectangle_density_against_closed_form_and_scan(c, a, b, w0):
    g = rect_closed_form(c, a, b, w0)
    e_root = optimize.brentq(g, -50, -1e-12, xtol=1e-14)
    # brute scan oracle: 10^6 points, locate the sign change
    es = np.linspace(-10, -1e-9, 1_000_000)
    vals = w0 - c * np.log((b - es) / (a - es)) - es
    k = np.nonzero(np.diff(np.sign(vals)))[0][0]
    st_ = find_bound_state(rect_table(c, a, b, w0), 0)
    assert st_.energy == pytest.approx(e_root, abs=1e-6)
    assert es[k] <= st_.energy <= es[k + 1] + 1e-6
    z = 1 / (1 + c * (1 / (a - e_root) - 1 / (b - e_root)))
    assert st_.residue == pytest.approx(z, abs=1e-6)
    assert 0 < st_.residue <= 1


def test_absent_and_decoupled_cases():
    assert find_bound_state(rect_table(0.01, 0.01, 5.0, 0.8, 2001), 0) is None
    zero = rect_table(0.0, 0.01, 5.0, 0.8, 101)
    st_ = find_bound_state(zero, 0)
    assert st_.energy == 0.8 and st_.residue == 1.0


def test_precision_error_on_coarse_grid():
    om = np.array([0.001, 0.002, 0.5, 1.0, 4.0])
    d = np.array([[5.0, 0.0, 0.0, 3.0, 0.0]])
    table = SpectralTable(om, d.copy(), 1, 0.8, d_channels=d)
    with pytest.raises(PrecisionError):
        find_bound_state(table, 0)


@given(st.floats(0.01, 2.0), st.floats(0.1, 2.0), st.floats(-5.0, -1e-3), st.floats(-5.0, -1e-3))
def test_y_strictly_decreasing(c, w0, e1, e2):
    if e1 == e2:
        return
    table = rect_table(c, 0.01, 5.0, w0, 201)
    lo, hi = sorted((e1, e2))
    assert y_function(table, 0, lo) > y_function(table, 0, hi)


@pytest.mark.parametrize("fixture,N", [("n2_table_r8", 2), ("n4_table_r8", 4)])
def test_bound_states_residual_and_residue(request, fixture, N):
    table = request.getfixturevalue(fixture)
    states = find_bound_states(table)
    assert any(s is not None for s in states)
    for s in states:
        if s is None:
            continue
        assert s.energy < 0
        assert 0 < s.residue <= 1
        assert eigen_residual(table, s.channel, s.energy) < 1e-8
        assert eigen_residual(table, s.channel, s.energy + 1e-3) > 1e-5


def test_n2_populations_are_half_residue(n2_table_r8):
    s0, s1 = find_bound_states(n2_table_r8)
    pops = bound_state_population(n2_table_r8, {"+": s0.energy, "-": s1.energy})
    assert pops["+"] == pytest.approx(s0.residue / 2, rel=1e-12)
    assert pops["-"] == pytest.approx(s1.residue / 2, rel=1e-12)
    with pytest.raises(AbsentStateError):
        bound_state_population(n2_table_r8, {"+": None})


def test_n2_bound_energies_regression(n2_table_r8):
    # frozen from this implementation at the default grid; guards against drift
    s0, s1 = find_bound_states(n2_table_r8)
    assert s0.energy == pytest.approx(-0.4631, abs=2e-3)
    assert s1.energy == pytest.approx(-0.8671, abs=2e-3)


def test_n4_degenerate_pair(n4_table_r8):
    s = find_bound_states(n4_table_r8)
    assert s[1].energy == s[3].energy and s[1].residue == s[3].residue


def test_scan_counts_and_csv():
    geom = SystemGeometry(5.0, 9.0, 2)
    scan = scan_spectrum(SILVER, geom, [8.0, 8.8, 9.5])
    assert scan.counts().tolist() == [2, 1, 0]
    lines = scan.to_csv().splitlines()
    assert lines[0] == "r_nm,channel,bound_energy_eV,residue"
    assert len(lines) == 7
    assert np.isnan(scan.branch(0)[1]) and not np.isnan(scan.branch(1)[1])
    with pytest.raises(ValueError):
        scan_spectrum(SILVER, geom, [4.0])


def test_branch_continuity_under_grid_refinement():
    geom = SystemGeometry(5.0, 9.0, 2)
    rs = np.linspace(7.6, 8.4, 5)
    a = scan_spectrum(SILVER, geom, rs)
    b = scan_spectrum(SILVER, geom, rs, grid=GridSpec().refined(2))
    for ch in (0, 1):
        np.testing.assert_allclose(a.branch(ch), b.branch(ch), atol=1e-5)
        assert np.all(np.diff(a.branch(ch)) > 0)  # bound energies rise towards the edge as r grows


def test_threshold_requires_bracket():
    geom = SystemGeometry(5.0, 9.0, 2)
    with pytest.raises(ValueError):
        threshold_distance(SILVER, geom, 1, 9.5, 10.0)
