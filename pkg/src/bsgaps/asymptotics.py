"""Eigenvalue asymptotics away from resonances.

On the frequencies ``xi + Theta_M`` the plane-wave matrix splits as
``[[a0, b*], [b, D]]`` with ``a0 = |F xi|^2``.  The eigenvalue that continues
``a0`` solves ``mu = a0 - b* (D - mu)^{-1} b``; iterating that map from
``mu = a0`` contracts quickly when ``D`` stays well away from ``a0``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import InvalidParameter, NotConverged, ResonantDenominator
from .model import FourierPotential, Metric
from .regions import coupling_matrix, theta_set


class ResonanceWarning(UserWarning):
    """The point does not look separated enough for the fixed point to be reliable."""


def _support_radius(potential: FourierPotential) -> float:
    return potential.R if potential.R > 0 else 1.0


def schur_blocks(xi, potential: FourierPotential, metric: Metric, M: int = 3):
    """``(a0, b, D - a0, offsets)`` for the matrix on ``xi + Theta_M``.

    The diagonal of ``D - a0`` is formed as ``2 <xi, G theta> + |F theta|^2``
    so no precision is lost to cancellation at large ``|xi|``.
    """
    d = metric.dim
    xi = np.asarray(xi, dtype=float)
    offsets = np.asarray(theta_set(M, _support_radius(potential), d), dtype=np.int64)
    H = coupling_matrix(offsets, potential)
    H[np.diag_indices(len(offsets))] += 2.0 * (offsets @ metric.G @ xi) + metric.norm2(offsets)
    zero = int(np.nonzero(~offsets.any(axis=1))[0][0])
    rest = np.delete(np.arange(len(offsets)), zero)
    return float(metric.norm2(xi)), H[rest, zero], H[np.ix_(rest, rest)], offsets


@dataclass(frozen=True)
class Separation:
    """How far the rest of the block sits from ``a0``, relative to the coupling."""

    distance: float  # min |spec(D) - a0|
    coupling: float  # |b|
    v: float

    @property
    def separated(self) -> bool:
        # on [a0 - v, a0 + v] the map then contracts by at most 1/4
        return self.distance >= self.v + 2.0 * self.coupling


def schur_separation(xi, potential: FourierPotential, metric: Metric, M: int = 3) -> Separation:
    _, b, D0, _ = schur_blocks(xi, potential, metric, M)
    w = np.linalg.eigvalsh(D0)
    return Separation(float(np.min(np.abs(w))), float(np.linalg.norm(b)), potential.v)


@dataclass
class FixedPointTrace:
    xi: np.ndarray
    mu: list[float]
    converged: bool
    value: float
    iterations: int
    residual: float
    condition: float = 1.0  # largest 2-norm condition number of D - mu_k seen
    a0: float = 0.0
    shift: float = 0.0  # value - a0, computed without cancellation
    shifts: list[float] = field(default_factory=list)

    def contraction_ratios(self, floor: float = 1e-9) -> list[float]:
        """``|mu_{k+1} - mu*| / |mu_k - mu*|`` while the error is above round-off."""
        star = self.shift
        err = [abs(m - star) for m in self.shifts]
        cut = floor * (1.0 + abs(self.shift))
        return [b / a for a, b in zip(err, err[1:]) if a > cut and b > cut]

    def to_dict(self) -> dict:
        return {"value": self.value, "shift": self.shift, "iterations": self.iterations,
                "residual": self.residual, "converged": self.converged,
                "condition": self.condition, "mu": self.mu}


def schur_fixed_point(xi, potential: FourierPotential, metric: Metric, M: int = 3,
                      tol: float | None = None, max_iter: int = 100, warn: bool = True) -> FixedPointTrace:
    xi = np.asarray(xi, dtype=float)
    a0, b, D0, _ = schur_blocks(xi, potential, metric, M)
    if tol is None:
        tol = 1e-12 * (1.0 + abs(a0))
    v = potential.v
    if v == 0 or not np.any(b):
        return FixedPointTrace(xi, [a0], True, a0, 0, 0.0, 1.0, a0, 0.0, [0.0])
    spec = np.linalg.eigvalsh(D0)
    if warn and float(np.min(np.abs(spec))) < v + 2.0 * float(np.linalg.norm(b)):
        warnings.warn(f"xi={xi.tolist()} is close to resonance; fixed point may be slow",
                      ResonanceWarning, stacklevel=2)
    eye = np.eye(len(D0))

    # iterate on the shift s = mu - a0, i.e. s <- -b* (D - a0 - s)^{-1} b
    def step(s: float) -> tuple[float, float]:
        gaps = np.abs(spec - s)
        if not gaps.min() > 1e-12 * (1.0 + abs(a0)):
            raise ResonantDenominator(f"D - mu singular at mu={a0 + s}")
        lu = scipy.linalg.lu_factor(D0 - s * eye)
        x = scipy.linalg.lu_solve(lu, b)
        return -float(np.real(np.vdot(b, x))), float(gaps.max() / gaps.min())

    shifts = [0.0]
    worst = 1.0
    for k in range(max_iter):
        nxt, cond = step(shifts[-1])
        worst = max(worst, cond)
        shifts.append(nxt)
        if abs(nxt - shifts[-2]) <= tol:
            # polish the shift to round-off while steps keep shrinking
            floor = 4 * np.finfo(float).eps * (1.0 + abs(nxt))
            last = abs(nxt - shifts[-2])
            while len(shifts) <= max_iter and last > floor:
                nxt2, cond = step(shifts[-1])
                worst = max(worst, cond)
                gap = abs(nxt2 - shifts[-1])
                if gap >= last:
                    break
                shifts.append(nxt2)
                last = gap
            nxt = shifts[-1]
            resid = abs(nxt - step(nxt)[0])
            if abs(nxt) > v * (1 + 1e-12):
                raise NotConverged(f"fixed point {a0 + nxt} left the window a0 +- v")
            return FixedPointTrace(xi, [a0 + s for s in shifts], True, a0 + nxt, len(shifts) - 1,
                                   resid, worst, a0, nxt, shifts)
    raise NotConverged(f"no convergence after {max_iter} iterations (last step "
                       f"{abs(shifts[-1] - shifts[-2]):.3e})")


def _exact(x):
    """Ints for integral floats so Fraction inputs stay exact."""
    if isinstance(x, (int, Fraction)):
        return x
    x = float(x)
    return int(x) if x.is_integer() else x


def second_order_term(xi, potential: FourierPotential, metric: Metric, M: int = 3):
    """``sum |Vhat(eta)|^2 |F eta|^2 / (4 <xi, G eta>^2 - |F eta|^4)`` over the support.

    Plain Python arithmetic: rational ``xi`` with integral ``G`` and
    coefficients gives an exact :class:`~fractions.Fraction`.
    """
    G = [[_exact(g) for g in row] for row in metric.G]
    xi = [x if isinstance(x, (int, Fraction)) else float(x) for x in xi]
    reach = M * _support_radius(potential)
    total = 0
    for eta, c in sorted(potential.coeffs.items()):
        if sum(e * e for e in eta) > reach * reach + 1e-9:
            continue
        c = complex(c)
        weight = _exact(c.real) ** 2 if c.imag == 0 else abs(c) ** 2
        Geta = [sum(G[a][b] * eta[b] for b in range(len(eta))) for a in range(len(eta))]
        cross = sum(x * g for x, g in zip(xi, Geta))
        f2 = sum(e * g for e, g in zip(eta, Geta))
        den = 4 * cross * cross - f2 * f2
        if den == 0 or abs(float(den)) < 1e-300:
            raise ResonantDenominator(f"denominator vanishes at eta={list(eta)}")
        term = weight * f2
        exact = isinstance(den, (int, Fraction)) and isinstance(term, (int, Fraction))
        total += Fraction(term) / den if exact else term / den
    return total


def g_nonresonant(xi, potential: FourierPotential, metric: Metric, M: int = 3,
                  mode: str = "full", **kw) -> float:
    """Eigenvalue branch through ``|F xi|^2``: fixed point (``full``) or second order (``order2``)."""
    if mode == "full":
        return schur_fixed_point(xi, potential, metric, M, **kw).value
    if mode == "order2":
        xi = np.asarray(xi, dtype=float)
        return float(metric.norm2(xi)) + float(second_order_term(xi, potential, metric, M))
    raise InvalidParameter(f"unknown mode {mode!r}")


@dataclass
class ConvergenceTable:
    rhos: list[float]
    errors: list[float]  # |g_order2 - g_full|
    g_full: list[float]
    skipped: list[tuple[float, str]] = field(default_factory=list)
    slope: float | None = None
    residuals: list[float] = field(default_factory=list)
    shell_changes: list[float] = field(default_factory=list)  # g_full(2M) - g_full(M)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def convergence_study(direction: Sequence[float], rho_list: Sequence[float], potential: FourierPotential,
                      metric: Metric, M: int = 3, compare_double_M: bool = False) -> ConvergenceTable:
    """``|g_order2 - g_full|`` along the ray ``rho * direction / |direction|`` and its log-log slope."""
    u = np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    table = ConvergenceTable([], [], [])
    for rho in rho_list:
        xi = rho * u
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ResonanceWarning)
                full = schur_fixed_point(xi, potential, metric, M)
                if compare_double_M:
                    table.shell_changes.append(
                        schur_fixed_point(xi, potential, metric, 2 * M).shift - full.shift)
            order2 = float(second_order_term(xi, potential, metric, M))
        except (NotConverged, ResonantDenominator) as exc:
            table.skipped.append((float(rho), str(exc)))
            continue
        table.rhos.append(float(rho))
        table.g_full.append(full.value)
        table.errors.append(abs(order2 - full.shift))
    pos = [(r, e) for r, e in zip(table.rhos, table.errors) if e > 0]
    if len(pos) >= 2:
        x = np.log([r for r, _ in pos])
        y = np.log([e for _, e in pos])
        coef = np.polyfit(x, y, 1)
        table.slope = float(coef[0])
        table.residuals = (y - np.polyval(coef, x)).tolist()
    return table
