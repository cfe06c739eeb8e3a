import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bsgaps.bloch import (BasisTooLarge, ShellMargin, band_table, bloch_matrix, build_basis, assemble,
                          certified_limit, eigenvalues, grid_band_table, resolve_cutoff, spectrum_at,
                          truncation_check, uniform_grid)
from bsgaps.errors import InvalidParameter, Uncertified
from bsgaps.model import cos_potential, identity_metric, make_potential, metric_from_G, zero_potential
import oracles

I2 = identity_metric(2)
COS = cos_potential(2)
kvec = st.lists(st.floats(0, 1, exclude_max=True), min_size=2, max_size=2)


def test_basis_examples():
    pts = build_basis([0, 0], 1, I2).points.tolist()
    assert pts == [[-1, 0], [0, -1], [0, 0], [0, 1], [1, 0]]
    assert build_basis([0.5, 0], 0.6, I2).points.tolist() == [[-1, 0], [0, 0]]
    G = metric_from_G([[4, 0], [0, 1]])
    assert build_basis([0, 0], 1.1, G).points.tolist() == [[0, -1], [0, 0], [0, 1]]


@given(kvec, st.floats(0.5, 4))
def test_basis_has_no_holes(k, r):
    pts = {tuple(p) for p in build_basis(k, r, I2).points.tolist()}
    expect = {m for m in oracles.integer_points(2, r + 2)
              if (m[0] + k[0]) ** 2 + (m[1] + k[1]) ** 2 <= r * r * (1 + 1e-12)}
    assert pts == expect


def test_basis_too_large():
    with pytest.raises(BasisTooLarge):
        build_basis([0, 0], 30, I2, max_size=100)


def test_assemble_support_and_eigenvalues():
    V = make_potential(2, {(1, 0): 1.0})
    M = bloch_matrix([0, 0], 1, V, I2)
    H = M.H
    pts = [tuple(p) for p in M.basis.points.tolist()]
    o = pts.index((0, 0))
    for i, p in enumerate(pts):
        for j, q in enumerate(pts):
            if i == j:
                continue
            expect = 1.0 if (p, q) in {((1, 0), (0, 0)), ((0, 0), (1, 0)), ((-1, 0), (0, 0)),
                                       ((0, 0), (-1, 0))} else 0.0
            assert H[i, j] == expect
    assert H[o, o] == 0
    ev = eigenvalues(M)
    np.testing.assert_allclose(ev, [-1, 1, 1, 1, 2], atol=1e-10)
    np.testing.assert_allclose(oracles.jacobi_eigenvalues(H.tolist()), [-1, 1, 1, 1, 2], atol=1e-10)


def test_eigenvalue_small_examples():
    np.testing.assert_allclose(eigenvalues(np.diag([3.0, 1.0, 2.0])), [1, 2, 3])
    np.testing.assert_allclose(eigenvalues(np.array([[0.0, 1.0], [1.0, 0.0]])), [-1, 1])


@given(kvec, st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_eigenvalues_match_jacobi_oracle(k, a, b):
    V = make_potential(2, {(1, 0): a, (1, 1): b})
    M = bloch_matrix(k, 2.2, V, I2)
    assert np.allclose(M.H, M.H.T, atol=1e-14)
    np.testing.assert_allclose(eigenvalues(M), oracles.jacobi_eigenvalues(M.H.tolist()), atol=1e-9)


@given(kvec)
def test_free_operator_is_diagonal_sorted_kinetic(k):
    ev = spectrum_at(k, 4, zero_potential(2), I2)
    M = bloch_matrix(k, 4, zero_potential(2), I2)
    assert not M.coupled
    np.testing.assert_allclose(ev, np.sort(np.diag(M.H)))
    # Weyl count against the enumerated lattice
    lam = 9.0
    count = sum(1 for m in oracles.integer_points(2, 6)
                if (m[0] + k[0]) ** 2 + (m[1] + k[1]) ** 2 < lam)
    assert int(np.sum(ev < lam)) == count


@given(kvec, st.integers(-2, 2), st.integers(-2, 2))
def test_k_periodicity(k, i, j):
    # a ball around a shifted k is the same set of frequencies
    a = spectrum_at(k, 3.0, COS, I2)
    b = spectrum_at([k[0] + i, k[1] + j], 3.0, COS, I2)
    np.testing.assert_allclose(a, b, atol=1e-10)


@given(kvec)
def test_time_reversal(k):
    a = spectrum_at(k, 3.0, COS, I2)
    b = spectrum_at([-k[0], -k[1]], 3.0, COS, I2)
    np.testing.assert_allclose(a, b, atol=1e-10)


@given(kvec, st.floats(-1, 1), st.floats(-1, 1))
def test_perturbation_moves_each_eigenvalue_at_most_v(k, a, b):
    V = make_potential(2, {(1, 0): a, (0, 2): b})
    basis = build_basis(k, 3.0, I2)
    free = eigenvalues(assemble(basis, zero_potential(2), I2))
    full = eigenvalues(assemble(basis, V, I2))
    assert np.max(np.abs(full - free)) <= V.v + 1e-10
    H = assemble(basis, V, I2).H
    off = H - np.diag(np.diag(H))
    assert np.max(np.abs(np.linalg.eigvalsh(off))) <= V.v + 1e-10


def test_constant_shift_moves_every_eigenvalue():
    k = [0.3, 0.1]
    base = bloch_matrix(k, 3.0, COS, I2)
    ev = eigenvalues(base)
    shifted = eigenvalues(base.H + 2.5 * np.eye(len(ev)))
    np.testing.assert_allclose(shifted, ev + 2.5, atol=1e-12)


def test_band_table_matches_pointwise_assembly():
    grid = uniform_grid(8, 2)
    table = band_table(grid, 6.0, COS, I2, lambda_max=15.0, grid_shape=(8, 8))
    for i in (0, 9, 27, 63):
        direct = np.linalg.eigvalsh(bloch_matrix(grid[i], 6.0, COS, I2).H)
        np.testing.assert_allclose(table.values[i], direct[: table.n_bands], atol=1e-10)
    assert np.all(np.diff(table.values, axis=1) >= 0)
    one = band_table([[0.0, 0.0]], 6.0, COS, I2, lambda_max=15.0)
    assert one.values.shape[0] == 1


def test_band_table_threads_do_not_change_output():
    a = grid_band_table(6, 5.0, COS, I2, 10.0, threads=1)
    b = grid_band_table(6, 5.0, COS, I2, 10.0, threads=3)
    c = grid_band_table(6, 5.0, COS, I2, 10.0, use_symmetry=False)
    assert np.array_equal(a.values, b.values)
    np.testing.assert_allclose(a.values, c.values, atol=1e-10)


def test_free_band_table_against_enumeration():
    table = grid_band_table(4, 5.0, zero_potential(2), I2, 8.0)
    for k, row in zip(table.k_grid, table.values):
        np.testing.assert_allclose(row, oracles.free_band_values(k, 5.0, len(row)), atol=1e-12)


def test_certification_rule():
    assert certified_limit(6.0) == 18.0
    with pytest.raises(Uncertified):
        grid_band_table(2, 6.0, COS, I2, 18.0)
    assert resolve_cutoff(ShellMargin(6), 100.0) == 16.0
    with pytest.raises(InvalidParameter):
        resolve_cutoff(ShellMargin(6))


def test_truncation_examples():
    rep = truncation_check([0.2, 0.1], zero_potential(2), I2, [4, 6, 8], lambda_below=16)
    assert rep.changes == (0.0, 0.0)
    rep = truncation_check([0.0, 0.0], COS, I2, [4, 6, 8], lambda_below=10)
    assert rep.monotone
    rep = truncation_check([0.0, 0.0], COS, I2, [6, 8], j_range=[0])
    assert rep.certified(1e-8)
