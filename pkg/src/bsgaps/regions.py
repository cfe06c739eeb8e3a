"""Resonance geometry of the spherical layer around ``|F xi|^2 = rho^2``.

A point ``xi`` of the layer is resonant for an integer subspace ``V`` when its
``V``-slice comes within ``L_n`` of the subspace; points resonant for no proper
subspace form the non-resonant set.  Near a resonant point the fibre operator,
restricted to the frequencies that matter, is a quadratic pencil in the
cylindrical radius ``r = |F xi_perp|``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from . import lattice
from .errors import EnumerationTooLarge, InvalidInput, InvalidParameter, NotResonant, OutsideAnnulus
from .model import FourierPotential, Metric, RegionParameters, SpectralWindow

ENUMERATION_CAP = 200_000


# ---------------------------------------------------------------- subspaces

@dataclass(frozen=True)
class IntegerSubspace:
    """A rational subspace, stored as the HNF basis of its integer points."""

    basis: tuple[tuple[int, ...], ...]
    ambient: int

    @classmethod
    def span(cls, vectors, d: int | None = None) -> "IntegerSubspace":
        vectors = [list(v) for v in vectors]
        if d is None:
            if not vectors:
                raise InvalidInput("ambient dimension needed for the zero subspace")
            d = len(vectors[0])
        basis = lattice.saturate(vectors, d) if vectors else []
        return cls(tuple(tuple(r) for r in basis), d)

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def key(self) -> tuple:
        return self.basis

    def __lt__(self, other: "IntegerSubspace") -> bool:
        return self.key < other.key

    @property
    def normals(self) -> list[list[int]]:
        """Integer basis of the Euclidean orthogonal complement."""
        return _normals(self.basis, self.ambient)

    def contains_vector(self, v) -> bool:
        return all(sum(a * int(b) for a, b in zip(n, v)) == 0 for n in self.normals)

    def contains(self, other: "IntegerSubspace") -> bool:
        return all(self.contains_vector(b) for b in other.basis)

    def orthonormal(self) -> np.ndarray:
        """``d x n`` matrix with Euclidean-orthonormal columns spanning the subspace."""
        if self.dim == 0:
            return np.zeros((self.ambient, 0))
        q, _ = np.linalg.qr(np.asarray(self.basis, float).T)
        return q


@lru_cache(maxsize=4096)
def _normals(basis, d):
    if not basis:
        return [[int(i == j) for j in range(d)] for i in range(d)]
    return lattice.integer_kernel([list(b) for b in basis], d)


def theta_set(j: int, R: float, d: int, include_zero: bool = True) -> list[tuple[int, ...]]:
    """Integer points of the closed ball of radius ``j R``, lexicographic."""
    if j < 0:
        raise InvalidParameter("j must be nonnegative")
    if j == 0:
        return [(0,) * d] if include_zero else []
    pts = [tuple(int(x) for x in p) for p in lattice.ball_points(d, j * R)]
    return pts if include_zero else [p for p in pts if any(p)]


@lru_cache(maxsize=32)
def primitive_directions(d: int, r: float) -> np.ndarray:
    """Primitive integer vectors of length ``< r``, one per line, sign-normalised."""
    pts = lattice.ball_points(d, r, strict=True)
    out = []
    for p in pts:
        if not any(p):
            continue
        if math.gcd(*map(int, p)) != 1:
            continue
        if lattice.sign_normalize(p) == tuple(int(x) for x in p):
            out.append(p)
    return np.asarray(out, dtype=np.int64).reshape(-1, d)


def enumerate_subspaces(r: float, n: int, d: int, cap: int = ENUMERATION_CAP) -> list[IntegerSubspace]:
    """All ``n``-dimensional spans of integer vectors shorter than ``r``, sorted by HNF."""
    if not 0 <= n <= d:
        raise InvalidParameter(f"need 0 <= n <= d, got n={n}, d={d}")
    if n == 0:
        return [IntegerSubspace((), d)]
    dirs = [tuple(int(x) for x in p) for p in primitive_directions(d, float(r))]
    level = {IntegerSubspace.span([p], d) for p in dirs}
    for _ in range(1, n):
        if len(level) * len(dirs) > cap:
            raise EnumerationTooLarge(f"{len(level)} x {len(dirs)} spans exceed cap {cap}")
        nxt = set()
        for W in level:
            for p in dirs:
                if not W.contains_vector(p):
                    nxt.add(IntegerSubspace.span(list(W.basis) + [list(p)], d))
        level = nxt
    return sorted(level)


# ---------------------------------------------------------------- decomposition

@dataclass(frozen=True, eq=False)
class Decomposition:
    """``xi = xi_V + xi_perp`` with ``G xi_perp`` orthogonal to ``V``."""

    xi_V: np.ndarray
    xi_perp: np.ndarray
    r: float
    direction: np.ndarray | None  # xi_perp / r, None when xi lies in V


def g_decompose(xi, V: IntegerSubspace, metric: Metric) -> Decomposition:
    xi = np.asarray(xi, dtype=float)
    if V.dim == 0:
        xi_V = np.zeros_like(xi)
    else:
        W = np.asarray(V.basis, float)
        GW = W @ metric.G
        c = np.linalg.solve(GW @ W.T, GW @ xi)
        xi_V = c @ W
    perp = xi - xi_V
    r = math.sqrt(max(float(metric.norm2(perp)), 0.0))
    scale = max(1.0, float(np.linalg.norm(xi)))
    direction = perp / r if r > 1e-13 * scale else None
    return Decomposition(xi_V=xi_V, xi_perp=perp, r=r, direction=direction)


def _max_form_on(V: IntegerSubspace, metric: Metric) -> float:
    """Largest ``|F w|^2`` over Euclidean unit vectors ``w`` of ``V``."""
    Q = V.orthonormal()
    return float(np.linalg.eigvalsh(Q.T @ metric.G @ Q)[-1])


# ---------------------------------------------------------------- classification

@dataclass(frozen=True, eq=False)
class ResonanceLabel:
    resonant: bool
    subspace: IntegerSubspace | None = None
    decomposition: Decomposition | None = None
    tier: int | None = None  # 0: |xi_V| < L_n directly, 1: only through the V-slice
    members: tuple[IntegerSubspace, ...] = ()
    width_ratio: float | None = None  # ||F xi_perp|^2 - rho^2| / L_n^2

    @property
    def overlapping(self) -> bool:
        """Whether two subspaces, neither containing the other, both claim ``xi``."""
        ms = self.members
        return any(not a.contains(b) and not b.contains(a)
                   for i, a in enumerate(ms) for b in ms[i + 1:])

    def to_dict(self) -> dict:
        if not self.resonant:
            return {"label": "NonResonant"}
        dec = self.decomposition
        return {
            "label": "Resonant",
            "subspace": [list(b) for b in self.subspace.basis],
            "dim": self.subspace.dim,
            "tier": self.tier,
            "xi_V": dec.xi_V.tolist(),
            "xi_perp": dec.xi_perp.tolist(),
            "r": dec.r,
            "direction": None if dec.direction is None else dec.direction.tolist(),
            "members": [[list(b) for b in m.basis] for m in self.members],
            "width_ratio": self.width_ratio,
        }


def _annulus_tol(window: SpectralWindow) -> float:
    return 1e-10 * (1.0 + window.lam)


def _xi1_member(V: IntegerSubspace, s_V: float, offset: float, window: SpectralWindow,
                L: float, metric: Metric) -> bool:
    # The slice xi + V keeps xi_perp fixed; a point eta of it has
    # |F eta|^2 = r^2 + |F eta_V|^2 with eta_V ranging over V.  It must land in
    # the layer while |eta_V| < L, i.e. |F eta_V|^2 in [lo, hi] ∩ [0, L^2 s_max).
    lo = s_V - offset - 40.0 * window.v
    hi = s_V - offset + 40.0 * window.v
    return hi >= -_annulus_tol(window) and lo < L * L * _max_form_on(V, metric)


def _candidate_bound(window: SpectralWindow, params: RegionParameters, metric: Metric) -> float:
    Lmax = float(params.L[window.metric.dim - 1])
    return 80.0 * window.v + Lmax * Lmax * float(np.linalg.eigvalsh(metric.G)[-1])


def _extension_filter(xi: np.ndarray, V: IntegerSubspace, C: np.ndarray, metric: Metric,
                      bound: float) -> np.ndarray:
    """Mask of candidates ``p`` with ``p`` outside ``V`` and ``|F xi_W|^2 <= bound`` for ``W = V + p``."""
    B = np.asarray(V.basis, dtype=np.int64)
    M = np.concatenate([np.broadcast_to(B, (len(C),) + B.shape), C[:, None, :]], axis=1)
    # exact independence test on the Euclidean integer Gram matrix
    gram_int = np.einsum("kid,kjd->kij", M, M)
    independent = np.asarray([_int_det(g) != 0 for g in gram_int.tolist()])
    out = np.zeros(len(C), dtype=bool)
    if not independent.any():
        return out
    Mf = M[independent].astype(float)
    MG = Mf @ metric.G
    gram = np.einsum("kid,kjd->kij", MG, Mf)
    rhs = MG @ xi
    coef = np.linalg.solve(gram, rhs[..., None])[..., 0]
    s = np.einsum("ki,ki->k", rhs, coef)
    out[np.nonzero(independent)[0]] = s <= bound
    return out


def _int_det(M: list[list[int]]) -> int:
    return lattice.bareiss_det(M)


def resonance_members(xi, window: SpectralWindow, params: RegionParameters, metric: Metric,
                      cap: int = ENUMERATION_CAP) -> list[IntegerSubspace]:
    """Every proper subspace from the ``6 M R`` family whose slice test accepts ``xi``.

    A subspace can only accept ``xi`` if ``|F xi_V|^2`` stays below a fixed
    bound, and the same then holds for every integer line inside it, so the
    search only combines lines that pass the bound themselves.
    """
    xi = np.asarray(xi, float)
    d = metric.dim
    offset = float(metric.norm2(xi) - window.lam)
    bound = _candidate_bound(window, params, metric) + _annulus_tol(window)
    dirs = primitive_directions(d, 6.0 * params.M * params.R)
    if len(dirs) == 0:
        return []
    Gd = dirs @ metric.G
    s_line = (Gd @ xi) ** 2 / np.einsum("ij,ij->i", Gd, dirs)
    cand = [tuple(int(x) for x in p) for p in dirs[s_line <= bound]]
    members: list[IntegerSubspace] = []
    level = [IntegerSubspace.span([p], d) for p in cand]
    n = 1
    while level and n < d:
        L = float(params.L[n])
        for V in level:
            dec = g_decompose(xi, V, metric)
            s_V = float(metric.norm2(dec.xi_V))
            if _xi1_member(V, s_V, offset, window, L, metric):
                members.append(V)
        if n + 1 >= d:
            break
        if len(level) * len(cand) > cap:
            raise EnumerationTooLarge(f"{len(level)} x {len(cand)} candidate spans exceed cap {cap}")
        nxt = {}
        C = np.asarray(cand, dtype=np.int64)
        for V in level:
            keep = _extension_filter(xi, V, C, metric, bound)
            for p in C[keep]:
                W = IntegerSubspace.span(list(V.basis) + [p.tolist()], d)
                nxt.setdefault(W.key, W)
        level = list(nxt.values())
        n += 1
    return sorted(members, key=lambda V: (-V.dim, V.key))


def classify(xi, window: SpectralWindow, params: RegionParameters, metric: Metric | None = None,
             cap: int = ENUMERATION_CAP) -> ResonanceLabel:
    """Label ``xi`` as non-resonant or resonant for one integer subspace.

    Among all subspaces whose slice test accepts ``xi`` the one of highest
    dimension wins, ties going to the smaller HNF basis.  The whole space is
    never a candidate.
    """
    metric = metric or window.metric
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (metric.dim,):
        raise InvalidInput(f"xi must have {metric.dim} components")
    if not window.in_wide(xi, tol=_annulus_tol(window)):
        raise OutsideAnnulus(f"||F xi|^2 - lambda| = {abs(float(window.offset(xi))):.6g} "
                             f"exceeds {40 * window.v:.6g}")
    members = resonance_members(xi, window, params, metric, cap)
    if not members:
        return ResonanceLabel(resonant=False)
    V = members[0]
    dec = g_decompose(xi, V, metric)
    L = float(params.L[V.dim])
    tier = 0 if float(np.linalg.norm(dec.xi_V)) < L else 1
    width = abs(dec.r ** 2 - window.lam) / (L * L)
    return ResonanceLabel(True, V, dec, tier, tuple(members), width)


# ---------------------------------------------------------------- sampling

def sample_shell(metric: Metric, lam: float, width: float, n: int, rng) -> np.ndarray:
    """Uniform samples of ``{xi : ||F xi|^2 - lam| <= width}``."""
    d = metric.dim
    u = rng.standard_normal((n, d))
    u /= np.linalg.norm(u, axis=1)[:, None]
    a = math.sqrt(max(lam - width, 0.0))
    b = math.sqrt(lam + width)
    U = rng.random(n)
    if a == b:
        t = np.full(n, a)
    elif a == 0.0:
        t = b * U ** (1.0 / d)
    else:
        # t^d uniform on [a^d, b^d], written to survive a ~ b ~ 1e6
        t = a * np.exp(np.log1p(U * math.expm1(d * math.log(b / a))) / d)
    nu = u * t[:, None]
    return np.linalg.solve(metric.F, nu.T).T


def shell_volume(metric: Metric, lam: float, width: float) -> float:
    d = metric.dim
    a = math.sqrt(max(lam - width, 0.0))
    b = math.sqrt(lam + width)
    unit = math.pi ** (d / 2) / math.gamma(d / 2 + 1) / float(np.linalg.det(metric.F))
    if a == 0.0:
        return unit * b ** d
    return unit * a ** d * math.expm1(d * math.log(b / a))


@dataclass
class PartitionReport:
    samples: int
    classified: int
    resonant: int
    overlaps: int
    xi0_violations: int  # resonant samples with |xi_V| >= 2 L_n
    max_projection_ratio: float  # max |xi_V| / L_n over resonant samples
    max_width_ratio: float  # max ||F xi_perp|^2 - rho^2| / L_n^2
    by_dimension: dict = field(default_factory=dict)

    @property
    def overlap_rate(self) -> float:
        return self.overlaps / self.samples if self.samples else 0.0

    @property
    def total(self) -> bool:
        return self.classified == self.samples

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["overlap_rate"] = self.overlap_rate
        out["total"] = self.total
        return out


def partition_diagnostics(window: SpectralWindow, params: RegionParameters, metric: Metric | None,
                          sample_count: int, seed: int, threads: int = 1) -> PartitionReport:
    metric = metric or window.metric
    rng = np.random.default_rng(seed)
    pts = sample_shell(metric, window.lam, 40.0 * window.v, sample_count, rng)

    def run(xi):
        try:
            return classify(xi, window, params, metric)
        except OutsideAnnulus:
            return None

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            labels = list(pool.map(run, pts))
    else:
        labels = [run(xi) for xi in pts]
    rep = PartitionReport(sample_count, 0, 0, 0, 0, 0.0, 0.0, {})
    for lab in labels:
        if lab is None:
            continue
        rep.classified += 1
        if lab.overlapping:
            rep.overlaps += 1
        if not lab.resonant:
            rep.by_dimension[0] = rep.by_dimension.get(0, 0) + 1
            continue
        rep.resonant += 1
        n = lab.subspace.dim
        rep.by_dimension[n] = rep.by_dimension.get(n, 0) + 1
        ratio = float(np.linalg.norm(lab.decomposition.xi_V)) / float(params.L[n])
        rep.max_projection_ratio = max(rep.max_projection_ratio, ratio)
        rep.max_width_ratio = max(rep.max_width_ratio, lab.width_ratio)
        if ratio >= 2.0:
            rep.xi0_violations += 1
    return rep


# ---------------------------------------------------------------- pencil

def _shell_distance(z0: np.ndarray, A: np.ndarray, lo: float, hi: float) -> float:
    """Euclidean distance from ``z0`` to ``{z : lo <= z^T A z <= hi}`` (``A`` positive)."""
    q = float(z0 @ A @ z0)
    if hi < 0:
        return math.inf
    if q > hi:
        return _ellipsoid_distance(z0, A, hi)
    if lo > 0 and q < lo:
        return _ellipsoid_distance(z0, A, lo)
    return 0.0


def _ellipsoid_distance(z0, A, c) -> float:
    # closest point of z^T A z = c is (I + tA)^{-1} z0 for the root t of
    # f(t) = sum a_i y_i^2 / (1 + t a_i)^2 = c
    if c <= 0:
        return float(np.linalg.norm(z0))  # degenerate shell: the origin only
    a, U = np.linalg.eigh(A)
    y = U.T @ z0
    f = lambda t: float(np.sum(a * y * y / (1 + t * a) ** 2))
    q = f(0.0)
    if q > c:
        lo_t, hi_t = 0.0, 1.0
        while f(hi_t) > c:
            hi_t *= 2.0
    else:
        amax = a[-1]
        top = np.isclose(a, amax)
        if np.all(np.abs(y[top]) < 1e-14 * (1 + np.linalg.norm(y))):
            rest = ~top
            w = y[rest] / (1 - a[rest] / amax)
            s2 = (c - float(np.sum(a[rest] * w * w))) / amax
            if s2 >= 0:
                return math.sqrt(float(np.sum((w - y[rest]) ** 2)) + s2)
        # bisect geometrically in u = 1 + t amax in (0, 1] so the pole at u = 0 is never hit
        scale = 1.0 - a / amax
        g = lambda u: float(np.sum(a * y * y / (u + (1 - u) * scale) ** 2))
        lo_u, hi_u = 1e-300, 1.0
        for _ in range(200):
            mid = math.sqrt(lo_u * hi_u)
            if g(mid) > c:
                lo_u = mid
            else:
                hi_u = mid
        u = math.sqrt(lo_u * hi_u)
        w = y / (u + (1 - u) * scale)
        return float(np.linalg.norm(w - y))
    for _ in range(200):
        mid = 0.5 * (lo_t + hi_t)
        if f(mid) > c:
            lo_t = mid
        else:
            hi_t = mid
    t = 0.5 * (lo_t + hi_t)
    w = y / (1 + t * a)
    return float(np.linalg.norm(w - y))


@dataclass(frozen=True, eq=False)
class PencilDecomposition:
    """The restricted operator written as ``r^2 I + r A + B``.

    ``offsets[i]`` is the integer vector ``eta_i - xi``; ``psi[i]`` indexes the
    coset of ``offsets[i]`` modulo the subspace, class 0 being the subspace
    itself.
    """

    xi: np.ndarray
    subspace: IntegerSubspace
    offsets: np.ndarray
    psi: np.ndarray
    representatives: tuple[tuple[int, ...], ...]
    r: float
    A: np.ndarray  # diagonal entries
    B: np.ndarray
    upsilon3_size: int

    @property
    def points(self) -> np.ndarray:
        return self.xi + self.offsets

    def matrix(self, r: float | None = None, shift: float = 0.0) -> np.ndarray:
        """``(r^2 - shift) I + r A + B``; the shift keeps large-momentum spectra well scaled."""
        r = self.r if r is None else r
        return (r * r - shift) * np.eye(len(self.A)) + r * np.diag(self.A) + self.B

    def spectrum(self, r: float | None = None, shift: float = 0.0) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix(r, shift))


def coupling_matrix(offsets: np.ndarray, potential: FourierPotential) -> np.ndarray:
    n = len(offsets)
    dtype = float if potential.is_real else complex
    Vm = np.zeros((n, n), dtype=dtype)
    index = {tuple(int(x) for x in o): i for i, o in enumerate(offsets)}
    for i, o in enumerate(offsets):
        for m, c in potential.coeffs.items():
            j = index.get(tuple(int(a) - b for a, b in zip(o, m)))
            if j is not None:
                Vm[i, j] = c
    return Vm


def direct_matrix(xi, offsets: np.ndarray, potential: FourierPotential, metric: Metric,
                  shift: float = 0.0) -> np.ndarray:
    """Plane-wave matrix on the frequencies ``xi + offsets`` minus ``shift``, assembled from scratch."""
    xi = np.asarray(xi, float)
    H = coupling_matrix(offsets, potential)
    diag = (float(metric.norm2(xi)) - shift) + 2.0 * (offsets @ metric.G @ xi) + metric.norm2(offsets)
    H[np.diag_indices(len(offsets))] += diag
    return H


def pencil_decompose(xi, window: SpectralWindow, params: RegionParameters,
                     potential: FourierPotential, metric: Metric | None = None,
                     V: IntegerSubspace | None = None, cutoff: float | None = None,
                     label: ResonanceLabel | None = None) -> PencilDecomposition:
    """Pencil form of the operator on the frequencies attached to a resonant ``xi``.

    The frequency set is the lattice slice ``xi + (V ∩ Z^d)`` within distance
    ``K`` (inside ``V``) of the layer, thickened by the ball of radius ``M R``
    and optionally clipped to ``|F eta| <= cutoff``.
    """
    metric = metric or window.metric
    xi = np.asarray(xi, dtype=float)
    label = label or classify(xi, window, params, metric)
    if not label.resonant:
        raise NotResonant("xi is not resonant")
    if V is not None and V.key != label.subspace.key:
        raise InvalidInput("xi is labelled resonant for a different subspace")
    V = label.subspace
    d = metric.dim
    dec = label.decomposition
    r = dec.r
    if dec.direction is None:
        raise InvalidInput("xi lies in the resonant subspace; no radial direction")
    Q = V.orthonormal()
    AV = Q.T @ metric.G @ Q
    lo = window.lam - 40.0 * window.v - r * r
    hi = window.lam + 40.0 * window.v - r * r
    K = params.K
    reach = math.sqrt(max(hi, 0.0) / float(np.linalg.eigvalsh(AV)[0])) + K
    basis = [list(b) for b in V.basis]
    slice_offsets = []
    for c in lattice.enumerate_ball(basis, reach, center=-dec.xi_V):
        mu = np.asarray(c, dtype=np.int64) @ np.asarray(basis, dtype=np.int64)
        z0 = Q.T @ (dec.xi_V + mu)
        if _shell_distance(z0, AV, lo, hi) < K:
            slice_offsets.append(mu)
    theta = np.asarray(theta_set(params.M, params.R, d), dtype=np.int64)
    offs = {tuple(int(x) for x in mu + t) for mu in slice_offsets for t in theta}
    offsets = np.asarray(sorted(offs), dtype=np.int64).reshape(-1, d)
    if cutoff is not None:
        offsets = offsets[metric.norm2(xi + offsets) <= cutoff * cutoff * (1 + 1e-12)]

    normals = np.asarray(V.normals, dtype=np.int64).reshape(-1, d)
    reps: dict[tuple, tuple] = {}
    for t in sorted(map(tuple, theta.tolist()), key=lambda t: (sum(x * x for x in t), t)):
        reps.setdefault(tuple((normals @ np.asarray(t)).tolist()), t)
    zero_key = (0,) * len(normals)
    order = [zero_key] + sorted((k for k in reps if k != zero_key),
                                key=lambda k: (sum(x * x for x in reps[k]), reps[k]))
    class_of = {k: j for j, k in enumerate(order)}
    psi = np.asarray([class_of[tuple((normals @ o).tolist())] for o in offsets], dtype=int)

    # A: 2 <F xi', F(eta - xi)>;  B: |F eta_V|^2 + |F (eta - xi)_perp|^2 + couplings
    A = 2.0 * (offsets @ metric.G @ dec.direction)
    diag = np.empty(len(offsets))
    for i, o in enumerate(offsets):
        part = g_decompose(o.astype(float), V, metric)
        eta_V = dec.xi_V + part.xi_V
        diag[i] = float(metric.norm2(eta_V)) + float(metric.norm2(part.xi_perp))
    B = coupling_matrix(offsets, potential)
    B[np.diag_indices(len(offsets))] += diag
    return PencilDecomposition(xi=xi, subspace=V, offsets=offsets, psi=psi,
                               representatives=tuple(reps[k] for k in order), r=r,
                               A=A, B=B, upsilon3_size=len(slice_offsets))


# ---------------------------------------------------------------- volumes

@dataclass
class VolumeReport:
    delta: float
    samples: int
    vol_A: float
    err_A: float
    vol_B: float | None
    vol_D: float | None
    vol_intersection: float | None
    err_intersection: float | None
    shift: list | None
    ratio_A: float  # vol_A / (rho^(d-2) delta)
    ratio_intersection: float | None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def volume_estimates(window: SpectralWindow, params: RegionParameters, metric: Metric | None,
                     delta: float, sample_count: int, seed: int,
                     g_function: Callable[[np.ndarray], float] | None = None,
                     shift: Sequence[float] | None = None, split: bool = False) -> VolumeReport:
    """Monte-Carlo volumes of ``{|g(xi) - lambda| <= delta}`` and its pieces.

    ``g_function`` (called per point) replaces ``|F xi|^2`` on non-resonant
    points; resonant points always use ``|F xi|^2``.  The split into resonant
    and non-resonant parts runs the classifier per hit and is off by default.
    """
    metric = metric or window.metric
    d = metric.dim
    lam, v = window.lam, window.v
    if delta <= 0:
        raise InvalidParameter("delta must be positive")
    width = max(40.0 * v, 2.0 * delta)
    rng = np.random.default_rng(seed)
    pts = sample_shell(metric, lam, width, sample_count, rng)
    total = shell_volume(metric, lam, width)
    ambient = max(20.0 * v, delta)

    def level_set(x: np.ndarray) -> np.ndarray:
        free = metric.norm2(x)
        inside = np.abs(free - lam) <= ambient
        g = free.copy()
        if g_function is not None and split:
            for i in np.nonzero(inside)[0]:
                if not _resonant(x[i]):
                    g[i] = g_function(x[i])
        elif g_function is not None:
            for i in np.nonzero(inside)[0]:
                g[i] = g_function(x[i])
        return inside & (np.abs(g - lam) <= delta)

    cache: dict = {}

    def _resonant(x) -> bool:
        key = tuple(x)
        if key not in cache:
            try:
                cache[key] = classify(x, window, params, metric).resonant
            except OutsideAnnulus:
                cache[key] = False
        return cache[key]

    hit = level_set(pts)
    p = hit.mean()
    vol_A = total * p
    err_A = total * math.sqrt(max(p * (1 - p), 0.0) / sample_count)
    vol_B = vol_D = None
    if split:
        res = np.array([_resonant(x) for x in pts[hit]], dtype=bool)
        vol_D = total * res.sum() / sample_count
        vol_B = vol_A - vol_D
    vol_int = err_int = ratio_int = None
    if shift is not None:
        a = np.asarray(shift, float)
        both = hit & level_set(pts - a)
        if split:
            both[both] = [not _resonant(x) and not _resonant(x - a) for x in pts[both]]
        q = both.mean()
        vol_int = total * q
        err_int = total * math.sqrt(max(q * (1 - q), 0.0) / sample_count)
        rho = window.rho
        pred = delta * delta * rho ** (d - 3) + delta * rho ** (-d)
        ratio_int = vol_int / pred
    return VolumeReport(delta=delta, samples=sample_count, vol_A=vol_A, err_A=err_A,
                        vol_B=vol_B, vol_D=vol_D, vol_intersection=vol_int,
                        err_intersection=err_int, shift=None if shift is None else list(map(float, shift)),
                        ratio_A=vol_A / (window.rho ** (d - 2) * delta),
                        ratio_intersection=ratio_int)


def pencil_identity_error(pencil: PencilDecomposition, potential: FourierPotential, metric: Metric,
                          shift: float | None = None) -> float:
    """Max eigenvalue deviation between the pencil and the directly assembled matrix.

    Both sides are shifted by the same integer near ``r^2`` (default) so the
    comparison is not swamped by round-off at large momentum.
    """
    if shift is None:
        shift = float(round(pencil.r * pencil.r))
    a = pencil.spectrum(shift=shift)
    b = np.linalg.eigvalsh(direct_matrix(pencil.xi, pencil.offsets, potential, metric, shift))
    return float(np.max(np.abs(a - b)))
