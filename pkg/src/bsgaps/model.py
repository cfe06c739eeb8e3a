"""Shared domain types: metric, Fourier potential, spectral window, region exponents.

The operator is ``H = -div(G grad) + V`` on the torus ``R^d / (2 pi Z)^d``
with ``V(x) = sum_m Vhat(m) exp(i <m, x>)``.  A plane wave ``exp(i <m + k, x>)``
has kinetic energy ``|F(m + k)|^2`` where ``F`` is the positive square root
of ``G``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import InvalidMetric, InvalidParameter, InvalidPotential

SYMMETRY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Metric:
    """Positive definite ``G`` together with its positive square root ``F``."""

    G: np.ndarray
    F: np.ndarray

    @property
    def dim(self) -> int:
        return self.G.shape[0]

    def norm2(self, xi) -> np.ndarray:
        """``|F xi|^2`` along the last axis."""
        xi = np.asarray(xi, dtype=float)
        return np.einsum("...i,ij,...j->...", xi, self.G, xi)

    def inner(self, a, b) -> np.ndarray:
        """``<a, G b>`` along the last axis."""
        return np.einsum("...i,ij,...j->...", np.asarray(a, float), self.G, np.asarray(b, float))

    @property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self.G, np.eye(self.dim)))


def metric_from_G(G) -> Metric:
    G = np.array(G, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise InvalidMetric(f"G must be square, got shape {G.shape}")
    if G.shape[0] < 1:
        raise InvalidMetric("G must be at least 1x1")
    scale = max(1.0, float(np.max(np.abs(G))))
    if np.max(np.abs(G - G.T)) > SYMMETRY_TOL * scale:
        raise InvalidMetric("G is not symmetric")
    G = 0.5 * (G + G.T)
    w, U = np.linalg.eigh(G)
    if w[0] <= 0.0:
        raise InvalidMetric(f"G is not positive definite: eigenvalue {w[0]:.6g}")
    F = (U * np.sqrt(w)) @ U.T
    F = 0.5 * (F + F.T)
    return Metric(G=G, F=F)


def identity_metric(d: int) -> Metric:
    return metric_from_G(np.eye(d))


def _as_key(m) -> tuple[int, ...]:
    key = tuple(int(round(float(c))) for c in m)
    if any(abs(float(c) - k) > 0 for c, k in zip(m, key)):
        raise InvalidPotential(f"Fourier index {list(m)} is not an integer vector")
    return key


@dataclass(frozen=True, eq=False)
class FourierPotential:
    """Finitely supported, zero-mean, Hermitian-symmetric Fourier coefficients.

    Use :func:`make_potential` to build one; it fills in missing conjugate
    partners and validates the rest.
    """

    dim: int
    coeffs: Mapping[tuple[int, ...], complex]
    R: float = field(init=False)
    v: float = field(init=False)

    def __post_init__(self):
        for m, c in self.coeffs.items():
            if len(m) != self.dim:
                raise InvalidPotential(f"index {m} has wrong dimension (expected {self.dim})")
        zero = (0,) * self.dim
        if abs(self.coeffs.get(zero, 0.0)) > 0.0:
            raise InvalidPotential("Vhat(0) must vanish; use split_mean to remove it")
        for m, c in self.coeffs.items():
            partner = self.coeffs.get(tuple(-x for x in m))
            if partner is None or abs(partner - np.conj(c)) > SYMMETRY_TOL * max(1.0, abs(c)):
                raise InvalidPotential(f"Hermitian symmetry broken at m={list(m)}")
        support = [m for m, c in self.coeffs.items() if c != 0]
        R = max((math.sqrt(sum(x * x for x in m)) for m in support), default=0.0)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "v", float(sum(abs(c) for c in self.coeffs.values())))

    @property
    def support(self) -> list[tuple[int, ...]]:
        return sorted(m for m, c in self.coeffs.items() if c != 0)

    @property
    def is_real(self) -> bool:
        return all(complex(c).imag == 0.0 for c in self.coeffs.values())

    def __call__(self, m) -> complex:
        return self.coeffs.get(tuple(int(x) for x in m), 0.0)

    def evaluate(self, x) -> np.ndarray:
        """Pointwise value of V at positions ``x`` (last axis = coordinates)."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1], dtype=complex)
        for m, c in self.coeffs.items():
            out += c * np.exp(1j * (x @ np.asarray(m, float)))
        return out.real


def make_potential(dim: int, coeffs: Mapping | Iterable, close: bool = True) -> FourierPotential:
    """Build a potential from ``{m: Vhat(m)}``, adding conjugate partners when ``close``.

    An explicitly given partner that disagrees with the conjugate is an error,
    never silently overwritten.
    """
    items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
    table: dict[tuple[int, ...], complex] = {}
    for m, c in items:
        key = _as_key(m)
        c = complex(c)
        if key in table and table[key] != c:
            raise InvalidPotential(f"duplicate coefficient for m={list(key)}")
        table[key] = c
    if close:
        for m, c in list(table.items()):
            neg = tuple(-x for x in m)
            if neg not in table:
                table[neg] = np.conj(c)
    table = {m: (c.real if c.imag == 0 else c) for m, c in table.items() if c != 0}
    return FourierPotential(dim=dim, coeffs=table)


def split_mean(dim: int, coeffs: Mapping) -> tuple[FourierPotential, float]:
    """Separate a constant term: returns the zero-mean potential and the shift."""
    zero = (0,) * dim
    rest = {m: c for m, c in coeffs.items() if tuple(m) != zero}
    shift = complex(coeffs.get(zero, 0.0))
    if shift.imag != 0.0:
        raise InvalidPotential("constant term must be real")
    return make_potential(dim, rest), shift.real


def zero_potential(dim: int) -> FourierPotential:
    return FourierPotential(dim=dim, coeffs={})


def cos_potential(dim: int, amplitude: float = 1.0) -> FourierPotential:
    """``Vhat(+-e_i) = amplitude``, i.e. ``V = 2 * amplitude * sum_i cos(x_i)``."""
    coeffs = {}
    for i in range(dim):
        e = [0] * dim
        e[i] = 1
        coeffs[tuple(e)] = amplitude
    return make_potential(dim, coeffs)


def load_potential(path) -> tuple[FourierPotential, Metric]:
    """Read a potential file ``{"dim", "G", "coeffs": [{"m", "re", "im"}]}``."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidPotential(f"cannot read potential file {path}: {exc}") from exc
    return potential_from_dict(data)


def potential_from_dict(data: dict) -> tuple[FourierPotential, Metric]:
    try:
        dim = int(data["dim"])
        entries = [(e["m"], complex(float(e.get("re", 0.0)), float(e.get("im", 0.0))))
                   for e in data.get("coeffs", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidPotential(f"malformed potential description: {exc}") from exc
    if dim < 1:
        raise InvalidPotential("dim must be positive")
    metric = metric_from_G(data["G"]) if "G" in data else identity_metric(dim)
    if metric.dim != dim:
        raise InvalidPotential("G does not match dim")
    return make_potential(dim, entries), metric


def potential_to_dict(potential: FourierPotential, metric: Metric | None = None) -> dict:
    metric = metric or identity_metric(potential.dim)
    return {
        "dim": potential.dim,
        "G": metric.G.tolist(),
        "coeffs": [{"m": list(m), "re": complex(c).real, "im": complex(c).imag}
                   for m, c in sorted(potential.coeffs.items())],
    }


@dataclass(frozen=True, eq=False)
class SpectralWindow:
    """Energy window ``J = [lam - 20v, lam + 20v]`` around ``lam = rho^2``.

    ``in_wide`` tests ``||F xi|^2 - lam| <= 40 v`` and ``in_narrow`` the same
    with ``20 v``.
    """

    rho: float
    v: float
    metric: Metric

    @property
    def lam(self) -> float:
        return self.rho * self.rho

    @property
    def J(self) -> tuple[float, float]:
        return (self.lam - 20.0 * self.v, self.lam + 20.0 * self.v)

    def offset(self, xi) -> np.ndarray:
        return self.metric.norm2(xi) - self.lam

    def in_wide(self, xi, tol: float = 0.0) -> np.ndarray:
        return np.abs(self.offset(xi)) <= 40.0 * self.v + tol

    def in_narrow(self, xi, tol: float = 0.0) -> np.ndarray:
        return np.abs(self.offset(xi)) <= 20.0 * self.v + tol


def derive_spectral_window(rho: float, potential: FourierPotential,
                           metric: Metric | None = None) -> SpectralWindow:
    if not rho > 0:
        raise InvalidParameter(f"rho must be positive, got {rho}")
    metric = metric or identity_metric(potential.dim)
    return SpectralWindow(rho=float(rho), v=potential.v, metric=metric)


def _beta(d: int) -> int:
    # largest angle exponent n + m + 2l(m + n - l + 1) over pairs of proper
    # subspaces of dims n, m meeting in dimension l
    best = 0
    for n in range(1, d):
        for m in range(1, d):
            for l in range(0, min(n, m) + 1):
                if n + m - l <= d:
                    best = max(best, n + m + 2 * l * (m + n - l + 1))
    return best


@dataclass(frozen=True)
class RegionParameters:
    """Scale exponents for the resonance decomposition at momentum ``rho``.

    ``L[n] = rho ** q[n]`` is the resonance width for ``n``-dimensional
    subspaces, ``K = rho ** p`` the thickening radius.
    """

    dim: int
    rho: float
    R: float
    M: int = 3
    p: float | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidParameter("dim must be positive")
        if not self.rho > 0:
            raise InvalidParameter("rho must be positive")
        if not self.R > 0:
            raise InvalidParameter("support radius must be positive")
        if self.M <= 2:
            raise InvalidParameter("M must exceed 2")
        if self.p is None:
            object.__setattr__(self, "p", 1.0 / (9 * self.dim))
        if not 0 < self.p <= 1.0 / (9 * self.dim):
            raise InvalidParameter("p must lie in (0, 1/(9d)] so that q_d <= 1/3")

    @property
    def q(self) -> np.ndarray:
        return 3.0 * np.arange(self.dim + 1) * self.p

    @property
    def K(self) -> float:
        return self.rho ** self.p

    @property
    def L(self) -> np.ndarray:
        return self.rho ** self.q

    @property
    def beta(self) -> int:
        return _beta(self.dim)

    @property
    def asymptotic_regime(self) -> bool:
        """Whether ``rho^p > R^(2 beta)``; informational only."""
        return self.K > self.R ** (2 * self.beta)

    def with_rho(self, rho: float) -> "RegionParameters":
        return RegionParameters(self.dim, rho, self.R, self.M, self.p)

    def check_chains(self, tol: float = 1e-12) -> bool:
        q, p = self.q, self.p
        return bool(np.all(np.diff(q) >= 3 * p - tol) and q[-1] <= 1.0 / 3 + tol
                    and q[1] >= 3 * p - tol and p > 0)


def region_parameters(dim: int, rho: float, potential: FourierPotential | None = None,
                      R: float | None = None, M: int = 3) -> RegionParameters:
    if R is None:
        R = potential.R if potential is not None and potential.R > 0 else 1.0
    return RegionParameters(dim=dim, rho=rho, R=R, M=M)
