"""Independent reference computations used only by the tests.

Nothing here imports the package's numerical routines: eigenvalues come from
a cyclic Jacobi sweep, lattice facts from brute-force enumeration.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction


def jacobi_eigenvalues(A, tol: float = 1e-14, max_sweeps: int = 100) -> list[float]:
    """Ascending eigenvalues of a real symmetric matrix by cyclic Jacobi rotations."""
    n = len(A)
    a = [[float(x) for x in row] for row in A]
    for _ in range(max_sweeps):
        off = math.sqrt(sum(a[i][j] ** 2 for i in range(n) for j in range(n) if i != j))
        scale = math.sqrt(sum(a[i][i] ** 2 for i in range(n))) + off
        if off <= tol * max(scale, 1.0):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p][q] == 0.0:
                    continue
                theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp, akq = a[k][p], a[k][q]
                    a[k][p] = c * akp - s * akq
                    a[k][q] = s * akp + c * akq
                for k in range(n):
                    apk, aqk = a[p][k], a[q][k]
                    a[p][k] = c * apk - s * aqk
                    a[q][k] = s * apk + c * aqk
    return sorted(a[i][i] for i in range(n))


def integer_points(d: int, radius: float):
    """All integer vectors of Euclidean length at most ``radius``."""
    n = int(math.floor(radius))
    for p in itertools.product(range(-n, n + 1), repeat=d):
        if sum(x * x for x in p) <= radius * radius + 1e-9:
            yield p


def dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def sign_normal(v):
    for x in v:
        if x != 0:
            return tuple(v) if x > 0 else tuple(-y for y in v)
    return tuple(v)


def det(M) -> Fraction:
    """Exact determinant by Fraction Gaussian elimination."""
    A = [[Fraction(x) for x in row] for row in M]
    n = len(A)
    out = Fraction(1)
    for i in range(n):
        piv = next((r for r in range(i, n) if A[r][i] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != i:
            A[i], A[piv] = A[piv], A[i]
            out = -out
        out *= A[i][i]
        for r in range(i + 1, n):
            f = A[r][i] / A[i][i]
            for c in range(i, n):
                A[r][c] -= f * A[i][c]
    return out


def gram(vectors):
    return [[dot(u, v) for v in vectors] for u in vectors]


def brute_shortest_orthogonal(nus, d: int, radius: float, lattice_basis=None):
    """Shortest nonzero lattice vector orthogonal to ``nus`` among points of ``B(radius)``."""
    best = None
    for p in integer_points(d, radius):
        if not any(p) or any(dot(p, nu) for nu in nus):
            continue
        if lattice_basis is not None and not in_span_integer(lattice_basis, p):
            continue
        key = (dot(p, p), sign_normal(p))
        if best is None or key < best:
            best = key
    return None if best is None else best[1]


def in_span_integer(basis, v) -> bool:
    """Whether ``v`` is an integer combination of a square full-rank ``basis`` (Cramer's rule)."""
    n = len(basis)
    cols = [list(col) for col in zip(*basis)]  # cols[i][j] = basis[j][i]
    D = det(cols)
    for j in range(n):
        Mj = [row[:] for row in cols]
        for i in range(n):
            Mj[i][j] = v[i]
        if (det(Mj) / D).denominator != 1:
            return False
    return True


def free_band_values(k, radius: float, count: int, G=None):
    """Lowest ``count`` values of ``|F(m + k)|^2`` over integer ``m`` in a box."""
    d = len(k)
    n = int(math.ceil(radius)) + 1
    vals = []
    for m in itertools.product(range(-n, n + 1), repeat=d):
        x = [mi + ki for mi, ki in zip(m, k)]
        if G is None:
            vals.append(sum(t * t for t in x))
        else:
            vals.append(sum(x[i] * G[i][j] * x[j] for i in range(d) for j in range(d)))
    return sorted(vals)[:count]


def two_by_two_eigenvalues(a, b, c):
    """Eigenvalues of ``[[a, b], [b, c]]`` in closed form."""
    mid = (a + c) / 2
    rad = math.sqrt(((a - c) / 2) ** 2 + b * b)
    return mid - rad, mid + rad
