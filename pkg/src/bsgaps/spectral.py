"""Band intervals, gaps, overlap functions and the integrated density of states."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bloch import (BandTable, ShellMargin, certified_limit, grid_band_table, resolve_cutoff,
                    spectrum_at)
from .errors import InvalidParameter, Uncertified
from .model import FourierPotential, Metric

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class BandInterval:
    """Range of one band function with the uncertainty of each endpoint."""

    lo: float
    hi: float
    lo_uncertainty: float = 0.0
    hi_uncertainty: float = 0.0

    def contains(self, lam: float) -> bool:
        return self.lo <= lam <= self.hi

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi,
                "loUncertainty": self.lo_uncertainty, "hiUncertainty": self.hi_uncertainty}


@dataclass(frozen=True)
class Gap:
    lo: float
    hi: float
    resolved: bool
    uncertainty: float  # larger of the two bordering endpoint uncertainties
    open_above: bool = False  # upper end clipped by the window

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "width": self.width, "resolved": self.resolved,
                "uncertainty": self.uncertainty, "openAbove": self.open_above}


def _golden_max(f, a: float, b: float, iters: int) -> tuple[float, float]:
    """Maximise a unimodal-ish ``f`` on ``[a, b]``; returns ``(x, f(x))``."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc > fd else (d, fd)


def refine_extremum(k0, band: int, sign: float, step: float, radius: float,
                    potential: FourierPotential, metric: Metric, iters: int = 12) -> tuple[np.ndarray, float]:
    """Coordinate-wise golden search for ``sign * lambda_band`` within ``+-step`` of ``k0``.

    Returns the best point and ``sign * lambda`` there, never worse than ``k0``.
    """
    k = np.asarray(k0, dtype=float).copy()

    def f(x):
        return sign * float(spectrum_at(x, radius, potential, metric)[band])

    best = f(k)
    for axis in range(len(k)):
        def along(t, axis=axis):
            trial = k.copy()
            trial[axis] = t
            return f(trial)

        t, val = _golden_max(along, k[axis] - step, k[axis] + step, iters)
        if val > best:
            best = val
            k[axis] = t
    return k, best


def band_intervals(table: BandTable, refine: bool = False, potential: FourierPotential | None = None,
                   metric: Metric | None = None, endpoints: str = "gap", iters: int = 12) -> list[BandInterval]:
    """Per-band ``[min, max]`` over the grid with adjacent-node uncertainty.

    With ``refine`` a local golden search around the grid extremisers pushes
    endpoints outwards; ``endpoints="gap"`` refines only endpoints that
    border a candidate gap, ``"all"`` refines every one.
    """
    vals = table.values
    lo = vals.min(axis=0)
    hi = vals.max(axis=0)
    if table.grid_shape is not None and len(table.k_grid) > 1:
        u = table.adjacent_variation()
    else:
        u = np.zeros(table.n_bands)
    lo_u = u.copy()
    hi_u = u.copy()
    if refine:
        if potential is None or metric is None:
            raise InvalidParameter("refinement needs the potential and metric")
        if table.grid_shape is None:
            raise InvalidParameter("refinement needs a regular grid")
        step = 1.0 / min(table.grid_shape)
        targets = _gap_endpoints(lo, hi, u) if endpoints == "gap" else \
            {(j, s) for j in range(table.n_bands) for s in (-1, 1)}
        for j, s in sorted(targets):
            idx = int(np.argmax(s * vals[:, j]))
            _, best = refine_extremum(table.k_grid[idx], j, s, step, table.radius, potential, metric, iters)
            if s > 0:
                gain = max(best - hi[j], 0.0)
                hi[j] += gain
                hi_u[j] = max(hi_u[j] - gain, 0.0)
            else:
                gain = max(best + lo[j], 0.0)
                lo[j] -= gain
                lo_u[j] = max(lo_u[j] - gain, 0.0)
    return [BandInterval(float(a), float(b), float(c), float(e)) for a, b, c, e in zip(lo, hi, lo_u, hi_u)]


def _gap_endpoints(lo, hi, u) -> set[tuple[int, int]]:
    """``(band, +1)`` tops and ``(band, -1)`` bottoms that border a gap of the grid ranges."""
    out = set()
    order = np.argsort(lo, kind="stable")
    reach = -math.inf
    top = None
    for j in order:
        if top is not None and lo[j] > reach:
            out.add((int(top), 1))
            out.add((int(j), -1))
        if hi[j] > reach:
            reach, top = hi[j], j
    return out


def detect_gaps(intervals: Sequence[BandInterval], window: tuple[float, float],
                certified_max: float | None = None) -> list[Gap]:
    """Maximal sub-intervals of the window above the lowest band and outside every band."""
    w_lo, w_hi = map(float, window)
    if not w_hi > w_lo:
        raise InvalidParameter(f"empty window {window}")
    if certified_max is not None and w_hi >= certified_max:
        raise Uncertified(f"uncertified window: {w_hi} is not below the certified limit {certified_max:.6g}")
    bands = sorted(intervals, key=lambda b: (b.lo, b.hi))
    gaps = []
    reach, reach_u = -math.inf, 0.0
    for b in bands:
        if reach > -math.inf and b.lo > reach:
            lo, hi = max(reach, w_lo), min(b.lo, w_hi)
            if hi > lo:
                unc = max(reach_u, b.lo_uncertainty)
                gaps.append(Gap(lo, hi, hi - lo > 2 * unc, unc))
        if b.hi > reach:
            reach, reach_u = b.hi, b.hi_uncertainty
    if bands and reach < w_hi:
        lo = max(reach, w_lo)
        gaps.append(Gap(lo, w_hi, w_hi - lo > 2 * reach_u, reach_u, open_above=True))
    return gaps


def overlap_function(intervals: Sequence[BandInterval], lam: float) -> float:
    """Largest ``t`` with ``[lam - t, lam + t]`` inside a single band, 0 outside all bands."""
    best = 0.0
    for b in intervals:
        if b.contains(lam):
            best = max(best, min(lam - b.lo, b.hi - lam))
    return best


def overlap_multiplicity(intervals: Sequence[BandInterval], lam: float) -> int:
    return sum(b.contains(lam) for b in intervals)


# ---------------------------------------------------------------- density of states

@dataclass(frozen=True)
class IDSResult:
    lambdas: tuple[float, ...]
    values: tuple[float, ...]
    coarse: tuple[float, ...]  # same on the half-resolution grid
    grid: int
    radius: float

    @property
    def errors(self) -> tuple[float, ...]:
        return tuple(abs(a - b) for a, b in zip(self.values, self.coarse))


def _counts(table: BandTable, lambdas: np.ndarray) -> np.ndarray:
    # sum over k of #{j : lambda_j(k) < lam}, averaged
    flat = np.sort(table.values.ravel())
    return np.searchsorted(flat, lambdas, side="left") / len(table.k_grid)


def ids_curve(potential: FourierPotential, metric: Metric, lambdas: Sequence[float], grid: int,
              cutoff, threads: int | None = None, estimate_error: bool = True) -> IDSResult:
    """``N(lambda)`` by the midpoint rule on a ``grid^d`` quasi-momentum grid."""
    lams = np.asarray(lambdas, dtype=float)
    top = float(lams.max())
    radius = resolve_cutoff(cutoff, top)
    if top >= certified_limit(radius):
        raise Uncertified(f"lambda={top} is not below the certified limit {certified_limit(radius):.6g}")

    def at(n):
        table = grid_band_table(n, radius, potential, metric, top, shift=0.5, threads=threads)
        return _counts(table, lams)

    fine = at(grid)
    coarse = at(max(grid // 2, 1)) if estimate_error else fine
    return IDSResult(tuple(lams.tolist()), tuple(fine.tolist()), tuple(coarse.tolist()), grid, radius)


def integrated_density_of_states(potential: FourierPotential, metric: Metric, lam: float,
                                 grid: int, cutoff, threads: int | None = None) -> tuple[float, float]:
    """``(N(lam), error estimate)``; the estimate compares with the half-resolution grid."""
    res = ids_curve(potential, metric, [lam], grid, cutoff, threads)
    return res.values[0], res.errors[0]


@dataclass
class ClusterTable:
    lambdas: list[float]
    counts: list[float]
    n: int
    predicted_slope: float
    slope: float | None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _fit_slope(xs, ys) -> float | None:
    pts = [(x, y) for x, y in zip(xs, ys) if y > 0]
    if len(pts) < 2:
        return None
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    return float(np.polyfit(x, y, 1)[0])


def cluster_check(potential: FourierPotential, metric: Metric, lambdas: Sequence[float], n: int,
                  grid: int, cutoff, threads: int | None = None) -> ClusterTable:
    """``N(lam + lam^-n) - N(lam - lam^-n)`` and its log-log slope against ``d/2 - n - 1``."""
    points = []
    for lam in lambdas:
        h = float(lam) ** (-n)
        points += [lam - h, lam + h]
    res = ids_curve(potential, metric, points, grid, cutoff, threads, estimate_error=False)
    vals = res.values
    counts = [vals[2 * i + 1] - vals[2 * i] for i in range(len(lambdas))]
    return ClusterTable([float(x) for x in lambdas], counts, n, metric.dim / 2 - n - 1,
                        _fit_slope(lambdas, counts))


@dataclass
class ZetaRow:
    lam: float
    zeta: float
    scaled: float | None  # zeta * lam^((d-1)/2)
    note: str = ""


def zeta_scaling_check(intervals: Sequence[BandInterval], lambdas: Sequence[float], dim: int,
                       gaps: Sequence[Gap] = ()) -> list[ZetaRow]:
    rows = []
    for lam in lambdas:
        if any(not g.resolved and g.lo <= lam <= g.hi for g in gaps):
            rows.append(ZetaRow(float(lam), 0.0, None, "unresolved region"))
            continue
        z = overlap_function(intervals, lam)
        if z == 0.0:
            rows.append(ZetaRow(float(lam), 0.0, None, "not inside a band"))
            continue
        rows.append(ZetaRow(float(lam), z, z * float(lam) ** ((dim - 1) / 2)))
    return rows


# ---------------------------------------------------------------- report

@dataclass
class SpectralReport:
    band_intervals: list[BandInterval]
    gaps: list[Gap]
    zeta_samples: list[tuple[float, float]]
    m_samples: list[tuple[float, int]]
    ids_samples: list[tuple[float, float]] = field(default_factory=list)
    grid_resolution: int = 0
    cutoff: float = 0.0
    window: tuple[float, float] = (0.0, 0.0)

    @property
    def resolved_gaps(self) -> list[Gap]:
        return [g for g in self.gaps if g.resolved]

    def to_dict(self) -> dict:
        return {"window": list(self.window), "gridResolution": self.grid_resolution, "cutoff": self.cutoff,
                "bandIntervals": [b.to_dict() for b in self.band_intervals],
                "gaps": [g.to_dict() for g in self.gaps],
                "zetaSamples": [list(p) for p in self.zeta_samples],
                "mSamples": [list(p) for p in self.m_samples],
                "idsSamples": [list(p) for p in self.ids_samples]}


def spectral_report(potential: FourierPotential, metric: Metric, window: tuple[float, float], cutoff,
                    grid: int, sample_lambdas: Sequence[float] = (), refine: bool = True,
                    threads: int | None = None) -> SpectralReport:
    """Bands on a ``grid^d`` grid, gaps in ``window`` and overlap samples."""
    w_lo, w_hi = map(float, window)
    radius = resolve_cutoff(cutoff, w_hi)
    limit = certified_limit(radius)
    if w_hi >= limit:
        raise Uncertified(f"uncertified window: {w_hi} is not below the certified limit {limit:.6g}")
    table = grid_band_table(grid, radius, potential, metric, w_hi, threads=threads)
    intervals = band_intervals(table, refine=refine, potential=potential, metric=metric)
    gaps = detect_gaps(intervals, (w_lo, w_hi), limit)
    zs = [(float(x), overlap_function(intervals, x)) for x in sample_lambdas]
    ms = [(float(x), overlap_multiplicity(intervals, x)) for x in sample_lambdas]
    return SpectralReport(intervals, gaps, zs, ms, grid_resolution=grid, cutoff=radius, window=(w_lo, w_hi))


__all__ = ["BandInterval", "Gap", "ShellMargin", "band_intervals", "detect_gaps", "overlap_function",
           "overlap_multiplicity", "ids_curve", "integrated_density_of_states", "cluster_check",
           "zeta_scaling_check", "SpectralReport", "spectral_report", "refine_extremum", "IDSResult",
           "ClusterTable", "ZetaRow"]
