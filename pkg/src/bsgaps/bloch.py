"""Plane-wave sections of the fibre operators H(k) and band sampling.

For quasi-momentum ``k`` the fibre operator acts on ``exp(i <m + k, x>)``;
truncating to ``|F(m + k)| <= r`` gives a Hermitian matrix with diagonal
``|F(m + k)|^2`` and off-diagonal entries ``Vhat(m_i - m_j)``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import BasisTooLarge, EigenFailure, InvalidParameter, Uncertified
from .model import FourierPotential, Metric

MAX_BASIS = 20000
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class ShellMargin:
    """Cutoff given as a margin above the top of the energy range of interest.

    Resolves to the radius ``sqrt(lambda_max) + width`` so that every state
    below ``lambda_max`` sits ``width`` momentum units inside the basis.
    """

    width: float

    def radius(self, lambda_max: float) -> float:
        return math.sqrt(max(lambda_max, 0.0)) + self.width


def resolve_cutoff(cutoff, lambda_max: float | None = None) -> float:
    if isinstance(cutoff, ShellMargin):
        if lambda_max is None:
            raise InvalidParameter("a shell-margin cutoff needs lambda_max")
        return cutoff.radius(lambda_max)
    r = float(cutoff)
    if not r > 0:
        raise InvalidParameter(f"cutoff radius must be positive, got {cutoff}")
    return r


def certified_limit(radius: float) -> float:
    """Largest energy a basis of this radius is trusted for."""
    return 0.5 * radius * radius


@dataclass(frozen=True, eq=False)
class BlochBasis:
    k: np.ndarray
    points: np.ndarray  # (N, d) integer, lexicographic
    radius: float

    def __len__(self) -> int:
        return len(self.points)

    @property
    def frequencies(self) -> np.ndarray:
        return self.points + self.k


@dataclass(frozen=True, eq=False)
class BlochMatrix:
    basis: BlochBasis
    H: np.ndarray
    coupled: bool  # False when the potential contributes no entries


def build_basis(k, cutoff, metric: Metric, max_size: int = MAX_BASIS) -> BlochBasis:
    """All ``m`` with ``|F(m + k)| <= cutoff``, sorted lexicographically."""
    r = resolve_cutoff(cutoff)
    k = np.asarray(k, dtype=float).reshape(-1)
    d = metric.dim
    if k.shape != (d,):
        raise InvalidParameter(f"k has dimension {k.size}, metric has {d}")
    # |x| <= |F x| / sqrt(min eig G)
    reach = r / math.sqrt(float(np.linalg.eigvalsh(metric.G)[0]))
    lo = np.ceil(-k - reach - 1e-12).astype(int)
    hi = np.floor(-k + reach + 1e-12).astype(int)
    box = int(np.prod(hi - lo + 1))
    if box > 50 * max_size:
        raise BasisTooLarge(f"bounding box of {box} points exceeds limit")
    axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    keep = metric.norm2(grid + k) <= r * r * (1 + 1e-12)
    points = grid[keep]
    if len(points) > max_size:
        raise BasisTooLarge(f"basis size {len(points)} exceeds maximum {max_size}")
    return BlochBasis(k=k, points=points, radius=r)


def assemble(basis: BlochBasis, potential: FourierPotential, metric: Metric) -> BlochMatrix:
    pts = basis.points
    n = len(pts)
    if n == 0:
        raise InvalidParameter("empty basis")
    dtype = float if potential.is_real else complex
    H = np.zeros((n, n), dtype=dtype)
    H[np.diag_indices(n)] = metric.norm2(basis.frequencies)
    lo = pts.min(axis=0)
    shape = pts.max(axis=0) - lo + 1
    lookup = -np.ones(tuple(shape), dtype=np.int64)
    lookup[tuple((pts - lo).T)] = np.arange(n)
    coupled = False
    for m, c in potential.coeffs.items():
        # entry (i, j) holds Vhat(p_i - p_j): partner j sits at p_i - m
        target = pts - np.asarray(m) - lo
        ok = np.all((target >= 0) & (target < shape), axis=1)
        i = np.nonzero(ok)[0]
        j = lookup[tuple(target[ok].T)]
        hit = j >= 0
        if np.any(hit):
            H[i[hit], j[hit]] = c
            coupled = True
    return BlochMatrix(basis=basis, H=H, coupled=coupled)


def bloch_matrix(k, cutoff, potential: FourierPotential, metric: Metric,
                 max_size: int = MAX_BASIS) -> BlochMatrix:
    return assemble(build_basis(k, cutoff, metric, max_size), potential, metric)


def eigenvalues(matrix, check: bool = True) -> np.ndarray:
    """Ascending spectrum of a Hermitian matrix (``BlochMatrix`` or array).

    LAPACK's divide-and-conquer driver does the work; with ``check`` every
    eigenpair is verified against ``|Hx - lx| <= 1e-10 (1 + |l|)``.
    """
    if isinstance(matrix, BlochMatrix):
        H, coupled = matrix.H, matrix.coupled
    else:
        H = np.asarray(matrix)
        coupled = np.count_nonzero(H - np.diag(np.diagonal(H))) > 0
    if not coupled:
        return np.sort(np.real(np.diagonal(H)).astype(float))
    try:
        if not check:
            return np.linalg.eigvalsh(H)
        w, X = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    res = np.linalg.norm(H @ X - X * w, axis=0)
    bad = res > RESIDUAL_TOL * (1.0 + np.abs(w))
    if np.any(bad):
        raise EigenFailure(f"residual {res[bad].max():.3e} above tolerance")
    return w


def spectrum_at(k, cutoff, potential: FourierPotential, metric: Metric,
                max_size: int = MAX_BASIS, check: bool = False) -> np.ndarray:
    if not potential.coeffs:
        basis = build_basis(k, cutoff, metric, max_size)
        return np.sort(metric.norm2(basis.frequencies))
    return eigenvalues(bloch_matrix(k, cutoff, potential, metric, max_size), check=check)


def uniform_grid(n: int, d: int, shift: float = 0.0) -> np.ndarray:
    """``n^d`` quasi-momenta ``(i + shift) / n`` in lexicographic order."""
    axis = (np.arange(n) + shift) / n
    return np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("BSGAPS_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True, eq=False)
class BandTable:
    """Samples ``values[i, j] = lambda_j(k_grid[i])`` for bands ``j < n_bands``."""

    k_grid: np.ndarray
    values: np.ndarray
    radius: float
    lambda_max: float
    grid_shape: tuple[int, ...] | None = None

    @property
    def n_bands(self) -> int:
        return self.values.shape[1]

    @property
    def certified_max(self) -> float:
        return certified_limit(self.radius)

    def adjacent_variation(self) -> np.ndarray:
        """Per band, the largest change between neighbouring nodes of a periodic grid."""
        if self.grid_shape is None:
            raise InvalidParameter("adjacency needs a regular grid")
        cube = self.values.reshape(*self.grid_shape, self.n_bands)
        out = np.zeros(self.n_bands)
        for axis in range(len(self.grid_shape)):
            diff = np.abs(cube - np.roll(cube, -1, axis=axis))
            out = np.maximum(out, diff.reshape(-1, self.n_bands).max(axis=0))
        return out


def _canonical_k(k: np.ndarray) -> tuple:
    # spectra at k and -k coincide (complex conjugation of the fibre)
    a = np.round(np.mod(k, 1.0), 12) % 1.0
    b = np.round(np.mod(-k, 1.0), 12) % 1.0
    return tuple(min(tuple(a), tuple(b)))


def band_table(k_grid, cutoff, potential: FourierPotential, metric: Metric, lambda_max: float,
               threads: int | None = None, grid_shape=None, max_size: int = MAX_BASIS,
               use_symmetry: bool = True, enforce_certified: bool = True) -> BandTable:
    """Band values on a grid of quasi-momenta, ordered by grid index.

    Bands are kept while some node has ``lambda_j(k) <= lambda_max``.
    """
    k_grid = np.atleast_2d(np.asarray(k_grid, dtype=float))
    if len(k_grid) == 0:
        raise InvalidParameter("empty k grid")
    radius = resolve_cutoff(cutoff, lambda_max)
    if enforce_certified and lambda_max >= certified_limit(radius):
        raise Uncertified(f"lambda_max={lambda_max} needs cutoff radius above "
                          f"{math.sqrt(2 * lambda_max):.4g}, got {radius:.4g}")
    keys = [_canonical_k(k) if use_symmetry else tuple(k) for k in k_grid]
    unique = list(dict.fromkeys(keys))

    def solve(key):
        return spectrum_at(np.asarray(key), radius, potential, metric, max_size)

    threads = threads or default_threads()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            spectra = dict(zip(unique, pool.map(solve, unique)))
    else:
        spectra = {key: solve(key) for key in unique}
    per_k = [spectra[key] for key in keys]
    n_bands = max(int(np.searchsorted(s, lambda_max, side="right")) for s in per_k)
    shortest = min(len(s) for s in per_k)
    if shortest < n_bands:
        raise Uncertified(f"basis holds {shortest} states but {n_bands} bands reach lambda_max")
    values = np.stack([s[:n_bands] for s in per_k])
    if grid_shape is not None:
        grid_shape = tuple(int(g) for g in grid_shape)
    return BandTable(k_grid=k_grid, values=values, radius=radius,
                     lambda_max=float(lambda_max), grid_shape=grid_shape)


def grid_band_table(n: int, cutoff, potential: FourierPotential, metric: Metric,
                    lambda_max: float, shift: float = 0.0, **kw) -> BandTable:
    d = metric.dim
    return band_table(uniform_grid(n, d, shift), cutoff, potential, metric, lambda_max,
                      grid_shape=(n,) * d, **kw)


@dataclass(frozen=True)
class TruncationReport:
    cutoffs: tuple[float, ...]
    changes: tuple[float, ...]  # max |lambda_j change| per consecutive pair

    @property
    def monotone(self) -> bool:
        return all(b <= a + 1e-13 for a, b in zip(self.changes, self.changes[1:]))

    def certified(self, tol: float = 1e-8) -> bool:
        return self.changes[-1] < tol


def truncation_check(k, potential: FourierPotential, metric: Metric, cutoffs: Sequence[float],
                     j_range: Iterable[int] | None = None, lambda_below: float | None = None,
                     max_size: int = MAX_BASIS) -> TruncationReport:
    """Band changes between consecutive cutoffs at one quasi-momentum.

    Bands are ``j_range`` (zero based) or, with ``lambda_below``, those whose
    value at the smallest cutoff lies below that energy.
    """
    cutoffs = [float(c) for c in cutoffs]
    if len(cutoffs) < 2 or any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise InvalidParameter("need at least two ascending cutoffs")
    spectra = [spectrum_at(k, c, potential, metric, max_size) for c in cutoffs]
    if j_range is None:
        if lambda_below is None:
            raise InvalidParameter("give j_range or lambda_below")
        j_range = range(int(np.searchsorted(spectra[0], lambda_below)))
    idx = np.asarray(list(j_range), dtype=int)
    if idx.size and idx.max() >= min(len(s) for s in spectra):
        raise InvalidParameter("band index beyond the smallest basis")
    changes = tuple(float(np.max(np.abs(b[idx] - a[idx]), initial=0.0))
                    for a, b in zip(spectra, spectra[1:]))
    return TruncationReport(tuple(cutoffs), changes)
