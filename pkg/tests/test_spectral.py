import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bsgaps.bloch import ShellMargin, grid_band_table
from bsgaps.errors import InvalidParameter, Uncertified
from bsgaps.model import cos_potential, identity_metric, make_potential, zero_potential
from bsgaps.spectral import (BandInterval, Gap, band_intervals, cluster_check, detect_gaps, ids_curve,
                             integrated_density_of_states, overlap_function, overlap_multiplicity,
                             spectral_report, zeta_scaling_check)
import oracles

I1 = identity_metric(1)
I2 = identity_metric(2)


def test_free_lowest_band():
    table = grid_band_table(8, ShellMargin(4), zero_potential(2), I2, 3.0)
    first = band_intervals(table)[0]
    assert first.lo == 0.0 and first.hi == pytest.approx(0.5)
    # the same numbers from brute force at the grid corners
    assert max(oracles.free_band_values(k, 2, 1)[0] for k in [(0.5, 0.5), (0.0, 0.5)]) == 0.5


def test_single_point_grid_gives_degenerate_intervals():
    table = grid_band_table(1, ShellMargin(4), cos_potential(2, 0.3), I2, 5.0)
    for b in band_intervals(table):
        assert b.lo == b.hi and b.lo_uncertainty == 0 == b.hi_uncertainty


def test_refinement_never_widens_uncertainty():
    pot = cos_potential(2, 0.4)
    table = grid_band_table(10, ShellMargin(5), pot, I2, 12.0)
    plain = band_intervals(table)
    fine = band_intervals(table, refine=True, potential=pot, metric=I2, endpoints="all", iters=8)
    for a, b in zip(plain, fine):
        assert b.lo <= a.lo and b.hi >= a.hi
        assert b.lo_uncertainty <= a.lo_uncertainty and b.hi_uncertainty <= a.hi_uncertainty
    with pytest.raises(InvalidParameter):
        band_intervals(table, refine=True)


def test_first_gap_of_weak_one_dimensional_potential():
    # at k = 1/2 the states e^{+-i pi x} mix through Vhat(+-1) = 0.1
    rep = spectral_report(cos_potential(1, 0.1), I1, (0, 10), ShellMargin(6), 64)
    first = rep.gaps[0]
    lo, hi = oracles.two_by_two_eigenvalues(0.25, 0.1, 0.25)
    assert first.resolved
    assert first.lo == pytest.approx(lo, abs=0.01) and first.hi == pytest.approx(hi, abs=0.01)


def test_free_plane_has_no_gaps():
    rep = spectral_report(zero_potential(2), I2, (0, 10), ShellMargin(6), 8)
    assert rep.gaps == []


def test_overlap_examples():
    band = [BandInterval(0, 10, 0, 0)]
    assert overlap_function(band, 4) == 4
    assert overlap_function(band, 11) == 0
    two = [BandInterval(0, 10, 0, 0), BandInterval(3, 5, 0, 0)]
    assert overlap_multiplicity(two, 4) == 2 and overlap_function(two, 4) == 4


def test_detect_gaps_rules():
    bands = [BandInterval(0, 1, 0.01, 0.01), BandInterval(2, 3, 0.01, 0.01), BandInterval(3.01, 4, 0.1, 0.1)]
    gaps = detect_gaps(bands, (0.5, 5))
    assert [(g.lo, g.hi, g.resolved) for g in gaps] == [(1, 2, True), (3, 3.01, False), (4, 5, True)]
    assert gaps[-1].open_above and not gaps[0].open_above
    with pytest.raises(Uncertified, match="uncertified window"):
        detect_gaps(bands, (0, 5), certified_max=5)
    with pytest.raises(InvalidParameter):
        detect_gaps(bands, (3, 3))


@given(st.lists(st.tuples(st.floats(0, 50), st.floats(0, 5)), min_size=1, max_size=8), st.floats(0, 60))
def test_gaps_avoid_every_band(layout, lam):
    bands = [BandInterval(a, a + w, 0, 0) for a, w in layout]
    gaps = detect_gaps(bands, (0, 60))
    inside_gap = any(g.lo < lam < g.hi for g in gaps)
    if inside_gap:
        assert overlap_multiplicity(bands, lam) == 0
        assert overlap_function(bands, lam) == 0
    elif lam > min(b.lo for b in bands) and overlap_multiplicity(bands, lam) == 0:
        assert any(g.lo <= lam <= g.hi for g in gaps)


def test_zeta_rows():
    bands = [BandInterval(0, 10, 0, 0)]
    rows = zeta_scaling_check(bands, [4, 20], 2, gaps=[Gap(10, 30, True, 0)])
    assert rows[0].zeta == 4 and rows[0].scaled == pytest.approx(4 * 4 ** 0.5)
    assert rows[1].zeta == 0 and rows[1].scaled is None


def test_ids_free_plane_counts_lattice_points():
    N, err = integrated_density_of_states(zero_potential(2), I2, 30.0, 32, ShellMargin(4))
    assert N == pytest.approx(30 * math.pi, rel=0.02)
    assert err >= 0


def test_ids_is_monotone_and_shift_invariant():
    lams = [1, 3, 7, 12]
    pot = cos_potential(2, 0.3)
    a = ids_curve(pot, I2, lams, 12, ShellMargin(5), estimate_error=False)
    assert all(x <= y for x, y in zip(a.values, a.values[1:]))
    # translating the potential by a twists each coefficient by a phase and leaves N unchanged
    a_shift = np.array([0.3, 0.17])
    moved = make_potential(2, {k: c * np.exp(2j * np.pi * np.dot(k, a_shift)) for k, c in pot.coeffs.items()})
    b = ids_curve(moved, I2, lams, 12, ShellMargin(5), estimate_error=False)
    np.testing.assert_allclose(a.values, b.values, atol=1e-12)


def test_ids_uncertified():
    with pytest.raises(Uncertified):
        ids_curve(zero_potential(2), I2, [100.0], 4, 5.0)


def test_cluster_check_reports_prediction():
    table = cluster_check(cos_potential(2, 0.3), I2, [20, 40], 1, 16, ShellMargin(5))
    assert table.predicted_slope == pytest.approx(2 / 2 - 1 - 1)
    assert all(c >= 0 for c in table.counts)
