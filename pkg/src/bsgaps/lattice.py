"""Integer lattice geometry.

Exact integer/rational arithmetic is used for Gram determinants, kernels and
Hermite normal forms; floats only for angles, norms and the pruning bounds of
the short-vector enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.linalg import subspace_angles

from .errors import DependentInput, InternalError, InvalidArity, InvalidInput
from .model import Metric

IntVec = tuple[int, ...]


def _is_integral(vectors) -> bool:
    return all(float(x).is_integer() for v in vectors for x in v)


def _to_int(vectors) -> list[list[int]]:
    return [[int(round(float(x))) for x in v] for v in vectors]


def bareiss_det(M: Sequence[Sequence[int]]) -> int:
    """Exact determinant of an integer matrix (fraction-free elimination)."""
    A = [list(map(int, row)) for row in M]
    n = len(A)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if A[i][k] != 0), None)
            if swap is None:
                return 0
            A[k], A[swap] = A[swap], A[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


def gram_det(vectors) -> int | float:
    """``det(M^T M)`` for columns ``vectors``; exact when inputs are integral."""
    if _is_integral(vectors):
        V = _to_int(vectors)
        G = [[sum(a * b for a, b in zip(u, w)) for w in V] for u in V]
        return bareiss_det(G)
    M = np.asarray(vectors, dtype=float)
    return max(float(np.linalg.det(M @ M.T)), 0.0)


def wedge_norm(vectors) -> float:
    """Norm of ``v_1 ^ ... ^ v_k``: the k-volume spanned by the vectors."""
    vectors = [list(v) for v in vectors]
    if not vectors:
        raise InvalidArity("wedge_norm needs at least one vector")
    d = len(vectors[0])
    if any(len(v) != d for v in vectors):
        raise InvalidArity("vectors have different lengths")
    if len(vectors) > d:
        raise InvalidArity(f"{len(vectors)} vectors in dimension {d}")
    return math.sqrt(gram_det(vectors))


def sign_normalize(v) -> IntVec:
    v = tuple(int(x) for x in v)
    for x in v:
        if x != 0:
            return v if x > 0 else tuple(-y for y in v)
    return v


def norm(v) -> float:
    return math.sqrt(sum(float(x) * float(x) for x in v))


# ---------------------------------------------------------------- exact algebra

def rational_nullspace(M: Sequence[Sequence]) -> list[list[Fraction]]:
    """Basis of ``{t : M t = 0}`` over the rationals, from the reduced row echelon form."""
    rows = [[Fraction(x) for x in r] for r in M]
    ncols = len(rows[0]) if rows else 0
    pivots = []
    r = 0
    for c in range(ncols):
        pr = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        piv = rows[r][c]
        rows[r] = [x / piv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        t = [Fraction(0)] * ncols
        t[f] = Fraction(1)
        for i, c in enumerate(pivots):
            t[c] = -rows[i][f]
        basis.append(t)
    return basis


def clear_denominators(t: Sequence[Fraction]) -> list[int]:
    lcm = 1
    for x in t:
        lcm = lcm * Fraction(x).denominator // math.gcd(lcm, Fraction(x).denominator)
    ints = [int(Fraction(x) * lcm) for x in t]
    g = 0
    for x in ints:
        g = math.gcd(g, x)
    return [x // g for x in ints] if g > 1 else ints


def integer_kernel(A: Sequence[Sequence[int]], ncols: int | None = None) -> list[list[int]]:
    """Lattice basis of ``{x in Z^n : A x = 0}``.

    Column operations with a unimodular tracker reduce ``A`` to echelon form;
    the tracker columns that end up multiplying zero columns span the kernel.
    """
    A = [list(map(int, r)) for r in A]
    n = ncols if ncols is not None else (len(A[0]) if A else 0)
    U = [[int(i == j) for j in range(n)] for i in range(n)]  # columns of U

    def colop(j, k, a, b, c, d):
        # (col_j, col_k) <- (a col_j + b col_k, c col_j + d col_k)
        for row in A:
            x, y = row[j], row[k]
            row[j], row[k] = a * x + b * y, c * x + d * y
        for row in U:
            x, y = row[j], row[k]
            row[j], row[k] = a * x + b * y, c * x + d * y

    piv = 0
    for row in A:
        if piv >= n:
            break
        for k in range(piv + 1, n):
            x, y = row[piv], row[k]
            if y == 0:
                continue
            g, s, t = _xgcd(x, y)
            # [s t; -y/g x/g] has determinant 1
            colop(piv, k, s, t, -y // g, x // g)
        if row[piv] != 0:
            piv += 1
    return [[U[i][j] for i in range(n)] for j in range(piv, n)]


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def hnf(rows: Sequence[Sequence[int]]) -> list[list[int]]:
    """Row Hermite normal form; zero rows dropped.

    Pivots are positive and entries above each pivot are reduced into
    ``[0, pivot)``, so the result is a canonical basis of the row lattice.
    """
    A = [list(map(int, r)) for r in rows if any(r)]
    if not A:
        return []
    ncols = len(A[0])
    r = 0
    for c in range(ncols):
        if r >= len(A):
            break
        for i in range(r + 1, len(A)):
            while A[i][c] != 0:
                if A[r][c] == 0 or abs(A[i][c]) < abs(A[r][c]):
                    A[r], A[i] = A[i], A[r]
                    continue
                q = A[i][c] // A[r][c]
                A[i] = [x - q * y for x, y in zip(A[i], A[r])]
        if A[r][c] == 0:
            continue
        if A[r][c] < 0:
            A[r] = [-x for x in A[r]]
        for i in range(r):
            q = A[i][c] // A[r][c]
            if q:
                A[i] = [x - q * y for x, y in zip(A[i], A[r])]
        r += 1
    return [row for row in A[:r] if any(row)]


def saturate(vectors: Sequence[Sequence[int]], d: int | None = None) -> list[list[int]]:
    """Canonical (HNF) basis of ``span(vectors) ∩ Z^d``."""
    vectors = _to_int(vectors)
    if d is None:
        d = len(vectors[0])
    vectors = [v for v in vectors if any(v)]
    if not vectors:
        return []
    complement = integer_kernel(vectors, d)
    if not complement:
        return [[int(i == j) for j in range(d)] for i in range(d)]
    return hnf(integer_kernel(complement, d))


def rank(vectors) -> int:
    return len(hnf(_to_int(vectors))) if _is_integral(vectors) else int(np.linalg.matrix_rank(np.asarray(vectors, float)))


def in_lattice(basis: Sequence[Sequence[int]], v: Sequence[int]) -> bool:
    """Whether ``v`` is an integer combination of ``basis``."""
    M = [[b[i] for b in basis] + [-int(v[i])] for i in range(len(v))]
    for t in rational_nullspace(M):
        if t[-1] != 0:
            c = [x / t[-1] for x in t[:-1]]
            return all(x.denominator == 1 for x in c)
    return False


# ---------------------------------------------------------------- enumeration

def enumerate_ball(basis, radius: float, center=None, tol: float = 1e-9) -> list[tuple[int, ...]]:
    """Coefficient vectors ``c`` with ``|sum_i c_i b_i - center| <= radius``.

    Fincke-Pohst depth-first search on the triangular factor of the basis.
    The float pruning is padded by ``tol`` so callers should refilter exactly.
    """
    B = np.asarray(basis, dtype=float)
    k, d = B.shape
    t = np.zeros(d) if center is None else np.asarray(center, float)
    Q, Rm = np.linalg.qr(B.T)
    y = Q.T @ t
    off = t - Q @ y
    budget = radius * radius - float(off @ off) + tol * (1.0 + radius * radius)
    if budget < 0:
        return []
    out: list[tuple[int, ...]] = []
    c = [0] * k

    def search(i: int, rem: float):
        res = y[i] - sum(Rm[i, j] * c[j] for j in range(i + 1, k))
        rii = Rm[i, i]
        half = math.sqrt(max(rem, 0.0))
        lo = math.ceil((res - half) / rii) if rii > 0 else math.ceil((res + half) / rii)
        hi = math.floor((res + half) / rii) if rii > 0 else math.floor((res - half) / rii)
        for ci in range(lo, hi + 1):
            c[i] = ci
            r = rem - (rii * ci - res) ** 2
            if r < 0:
                continue
            if i == 0:
                out.append(tuple(c))
            else:
                search(i - 1, r)
        c[i] = 0

    search(k - 1, budget)
    return out


def ball_points(d: int, radius: float, strict: bool = False) -> np.ndarray:
    """All integer points with ``|m| <= radius`` (``<`` when strict), lexicographic."""
    n = int(math.floor(radius))
    axis = np.arange(-n, n + 1)
    grid = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    r2 = np.sum(grid * grid, axis=1)
    keep = r2 < radius * radius if strict else r2 <= radius * radius + 1e-9
    return grid[keep]


# ---------------------------------------------------------------- lattices

@dataclass(frozen=True)
class IntegerLattice:
    """Lattice spanned by independent integer vectors (rows of ``basis``)."""

    basis: tuple[IntVec, ...]

    def __post_init__(self):
        basis = tuple(tuple(int(x) for x in b) for b in self.basis)
        object.__setattr__(self, "basis", basis)
        if not basis:
            raise InvalidInput("lattice needs at least one basis vector")
        if gram_det(basis) == 0:
            raise InvalidInput("lattice basis is linearly dependent")

    @classmethod
    def standard(cls, d: int) -> "IntegerLattice":
        return cls(tuple(tuple(int(i == j) for j in range(d)) for i in range(d)))

    @property
    def rank(self) -> int:
        return len(self.basis)

    @property
    def dim(self) -> int:
        return len(self.basis[0])

    @property
    def cell_volume(self) -> float:
        return wedge_norm(self.basis)

    def __contains__(self, v) -> bool:
        return in_lattice(self.basis, v)


def _orthogonal_sublattice(lattice: IntegerLattice, nus) -> list[list[int]]:
    nus = _to_int(nus)
    for nu in nus:
        if len(nu) != lattice.dim or nu not in lattice:
            raise InvalidInput(f"{nu} is not a vector of the lattice")
    if nus and gram_det(nus) == 0:
        raise InvalidInput("constraint vectors are linearly dependent")
    E = [list(b) for b in lattice.basis]
    A = [[sum(a * b for a, b in zip(eta, nu)) for eta in E] for nu in nus]
    coeffs = integer_kernel(A, len(E)) if nus else [[int(i == j) for j in range(len(E))] for i in range(len(E))]
    return [[sum(c * e[i] for c, e in zip(cv, E)) for i in range(lattice.dim)] for cv in coeffs]


def _sorted_short(basis: list[list[int]], radius: float) -> list[IntVec]:
    """Nonzero lattice vectors up to sign within ``radius``, by (length, lex)."""
    found = set()
    for c in enumerate_ball(basis, radius):
        v = [sum(ci * b[i] for ci, b in zip(c, basis)) for i in range(len(basis[0]))]
        if any(v) and sum(x * x for x in v) <= radius * radius + 1e-9:
            found.add(sign_normalize(v))
    return sorted(found, key=lambda v: (sum(x * x for x in v), v))


def minkowski_bound(lattice: IntegerLattice, nus) -> float:
    """``2^n |Gamma| prod |nu_j|`` bound on the shortest orthogonal vector."""
    return 2 ** lattice.rank * lattice.cell_volume * math.prod(norm(nu) for nu in nus)


def shortest_orthogonal_vector(lattice: IntegerLattice, nus) -> IntVec:
    """Shortest nonzero lattice vector orthogonal to all of ``nus``.

    ``nus`` must be ``rank - 1`` independent lattice vectors.  Ties are broken
    lexicographically after sign normalisation.
    """
    if len(nus) != lattice.rank - 1:
        raise InvalidArity(f"need {lattice.rank - 1} constraint vectors, got {len(nus)}")
    sub = _orthogonal_sublattice(lattice, nus)
    bound = minkowski_bound(lattice, nus)
    start = min(norm(b) for b in sub)
    if start > bound * (1 + 1e-12):
        raise InternalError("orthogonal sublattice generator exceeds the Minkowski bound")
    short = _sorted_short(sub, start)
    if not short:
        raise InternalError("no orthogonal lattice vector within bound")
    return short[0]


def orthogonal_sublattice_basis(lattice: IntegerLattice, nus) -> tuple[list[IntVec], float]:
    """Successive minima of ``{theta in Gamma : theta ⊥ nus}``.

    Returns the vectors and the measured constant
    ``prod |theta_l| / (|Gamma| prod |nu_j|)``.
    """
    if len(nus) >= lattice.rank:
        raise InvalidArity("need fewer constraints than the lattice rank")
    sub = _orthogonal_sublattice(lattice, nus)
    k = len(sub)
    radius = min(norm(b) for b in sub)
    while True:
        chosen: list[IntVec] = []
        for v in _sorted_short(sub, radius):
            if gram_det(chosen + [v]) != 0:
                chosen.append(v)
                if len(chosen) == k:
                    break
        if len(chosen) == k:
            break
        radius *= 2
    ratio = math.prod(norm(t) for t in chosen) / (
        lattice.cell_volume * math.prod(norm(nu) for nu in nus))
    return chosen, ratio


# ---------------------------------------------------------------- angles

def _check_independent(vectors, what: str):
    if gram_det(vectors) == 0:
        raise DependentInput(f"{what} are linearly dependent")


def angle_vector_subspace(mu, thetas, metric: Metric | None = None) -> float:
    """Angle between ``mu`` and ``span(thetas)``; with a metric, between ``F mu`` and ``F span``."""
    thetas = [list(t) for t in thetas]
    _check_independent(thetas + [list(mu)], "mu and thetas")
    A = np.asarray(thetas, float).T
    b = np.asarray(mu, float)[:, None]
    if metric is not None:
        A, b = metric.F @ A, metric.F @ b
    return float(subspace_angles(b, A)[0])


def distance_vector_subspace(mu, thetas) -> float:
    """Euclidean distance from ``mu`` to ``span(thetas)`` as a ratio of wedge norms."""
    thetas = [list(t) for t in thetas]
    num = gram_det(thetas + [list(mu)])
    if num == 0:
        raise DependentInput("mu lies in the span of thetas")
    return math.sqrt(num / gram_det(thetas))


def subspace_angle(v1, v2, check_bound: bool = True) -> float:
    """Smallest principal angle between two spans whose union is independent.

    Also checks ``sin(angle) >= |v1 ^ v2| / (|v1| |v2|)`` and raises
    :class:`InternalError` if the computed angle ever violates it.
    """
    v1 = [list(v) for v in v1]
    v2 = [list(v) for v in v2]
    _check_independent(v1 + v2, "the union of both sets")
    alpha = float(np.min(subspace_angles(np.asarray(v1, float).T, np.asarray(v2, float).T)))
    if check_bound:
        lower = wedge_norm(v1 + v2) / (wedge_norm(v1) * wedge_norm(v2))
        if math.sin(alpha) < lower * (1 - 1e-9) - 1e-12:
            raise InternalError(f"sin(angle)={math.sin(alpha)} below exterior bound {lower}")
    return alpha


def intersect_integer_subspaces(v1, v2) -> list[IntVec]:
    """Saturated integer basis (HNF) of ``span(v1) ∩ span(v2)``; empty if trivial."""
    v1 = _to_int(v1)
    v2 = _to_int(v2)
    d = len(v1[0])
    M = [[a[i] for a in v1] + [-b[i] for b in v2] for i in range(d)]
    thetas = []
    for t in rational_nullspace(M):
        coeffs = t[: len(v1)]
        w = [sum(c * a[i] for c, a in zip(coeffs, v1)) for i in range(d)]
        thetas.append(clear_denominators(w))
    if not thetas:
        return []
    return [tuple(r) for r in saturate(thetas, d)]


def intersection_bound_ratios(v1, v2) -> list[float]:
    """``|theta_j| / R^(m + n - l + 1)`` for the intersection basis, ``R`` the largest input norm."""
    basis = intersect_integer_subspaces(v1, v2)
    R = max(norm(v) for v in list(v1) + list(v2))
    expo = len(v1) + len(v2) - len(basis) + 1
    return [norm(t) / R ** expo for t in basis]


# ---------------------------------------------------------------- verification harness

def _cofactor_direction(nus: list[list[int]], d: int) -> list[int]:
    """Primitive integer vector orthogonal to ``d - 1`` independent vectors (signed minors)."""
    c = []
    for i in range(d):
        minor = [[nu[j] for j in range(d) if j != i] for nu in nus]
        c.append((-1) ** i * bareiss_det(minor))
    g = 0
    for x in c:
        g = math.gcd(g, x)
    return [x // g for x in c]


def _line_oracle(lattice: IntegerLattice, nus) -> IntVec:
    """Shortest lattice vector on the line orthogonal to ``nus`` (full-rank lattices only)."""
    kappa = _cofactor_direction([list(nu) for nu in nus], lattice.dim)
    t = 1
    while not in_lattice(lattice.basis, [t * x for x in kappa]):
        t += 1
    return sign_normalize([t * x for x in kappa])


@dataclass
class LatticeCheckReport:
    trials: int
    seed: int
    dim: int
    radius: float
    bound_violations: int = 0
    oracle_mismatches: int = 0
    worst_bound_ratio: float = 0.0  # max |theta| / (2^n |Gamma| prod |nu|)
    worst_sublattice_constant: float = 0.0
    min_distance_scaled: float = math.inf  # min distance * R^n
    angle_bound_failures: int = 0
    min_angle_product: float | None = None  # d = 2: min sin(angle) |theta| |mu|
    worst_intersection_ratio: float = 0.0

    @property
    def passed(self) -> bool:
        return (self.bound_violations == 0 and self.oracle_mismatches == 0 and self.angle_bound_failures == 0
                and (self.min_angle_product is None or self.min_angle_product >= 1 - 1e-9))

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["passed"] = self.passed
        if out["min_distance_scaled"] == math.inf:
            out["min_distance_scaled"] = None
        return out


def _random_lattice(rng, d: int) -> IntegerLattice:
    if rng.random() < 0.5:
        return IntegerLattice.standard(d)
    while True:
        B = rng.integers(-2, 3, size=(d, d))
        det = abs(bareiss_det(B.tolist()))
        if 0 < det <= 4:
            return IntegerLattice(tuple(map(tuple, B.tolist())))


def _random_lattice_vectors(rng, lattice: IntegerLattice, count: int, radius: float, tries: int = 2000):
    basis = np.asarray(lattice.basis)
    out: list[list[int]] = []
    for _ in range(tries):
        v = (rng.integers(-3, 4, size=lattice.rank) @ basis).tolist()
        if any(v) and norm(v) <= radius and gram_det(out + [v]) != 0:
            out.append(v)
            if len(out) == count:
                return out
    return None


def min_angle_product(radius: float) -> float:
    """Exhaustive ``min sin(angle(mu, theta)) |theta| |mu|`` over independent pairs in ``B(radius)`` of Z^2."""
    pts = [tuple(p) for p in ball_points(2, radius).tolist() if any(p)]
    prim = sorted({sign_normalize(p) for p in pts if math.gcd(*p) == 1})
    best = math.inf
    for i, mu in enumerate(prim):
        for theta in prim[i + 1:]:
            a = angle_vector_subspace(mu, [theta])
            best = min(best, math.sin(a) * norm(mu) * norm(theta))
    return best


def lattice_check(dim: int, radius: float, trials: int, seed: int, angle_radius: float | None = None) -> LatticeCheckReport:
    """Seeded instances in dimensions ``2..dim`` with constraint vectors in ``B(radius)``.

    Each instance checks the shortest orthogonal vector against its bound and
    against the cofactor line route, the successive-minima constant, the
    distance and exterior-angle bounds, and the intersection basis sizes.
    """
    if dim < 2 or radius < 1 or trials < 0:
        raise InvalidInput("need dim >= 2, radius >= 1 and trials >= 0")
    rng = np.random.default_rng(seed)
    rep = LatticeCheckReport(trials, seed, dim, radius)
    done = 0
    while done < trials:
        d = int(rng.integers(2, dim + 1))
        lattice = _random_lattice(rng, d)
        nus = _random_lattice_vectors(rng, lattice, d - 1, radius)
        if nus is None:
            continue
        done += 1
        theta = shortest_orthogonal_vector(lattice, nus)
        bound = minkowski_bound(lattice, nus)
        rep.worst_bound_ratio = max(rep.worst_bound_ratio, norm(theta) / bound)
        if norm(theta) > bound * (1 + 1e-12):
            rep.bound_violations += 1
        if theta != _line_oracle(lattice, nus):
            rep.oracle_mismatches += 1
        if d >= 3:
            _, C = orthogonal_sublattice_basis(lattice, nus[: d - 2])
            rep.worst_sublattice_constant = max(rep.worst_sublattice_constant, C)
        mu = _random_lattice_vectors(rng, IntegerLattice.standard(d), 1, radius)
        if mu is not None and gram_det(nus + mu) != 0:
            dist = distance_vector_subspace(mu[0], nus)
            rep.min_distance_scaled = min(rep.min_distance_scaled, dist * radius ** len(nus))
            try:
                subspace_angle(nus[:1], [mu[0]] + nus[1:])
            except InternalError:
                rep.angle_bound_failures += 1
            if d >= 3:
                ratios = intersection_bound_ratios(nus, [mu[0]] + nus[:1])
                if ratios:
                    rep.worst_intersection_ratio = max(rep.worst_intersection_ratio, max(ratios))
    if angle_radius is not None:
        rep.min_angle_product = min_angle_product(angle_radius)
    return rep
