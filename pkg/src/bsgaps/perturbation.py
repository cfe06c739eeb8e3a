"""Finite-dimensional checks of the projection reduction bounds.

Two statements are exercised on random matrices:

* adding a perturbation ``A`` that lives on the last block of a block
  tridiagonal chain moves ``mu_l`` by at most
  ``4^n a^(2n+1) prod_j (a_j - 2a)^-2``, with ``a = |V| + |A|``;
* cutting the couplings between a family of chains and the far-away rest
  ``Q`` moves the eigenvalues inside a window ``J`` by at most
  ``max_m (6v)^(2 j_m + 1) prod_j (a_j^m - 6v)^-2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import GenerationFailed, InadmissibleInstance, InvalidParameter

EIG_TOL = 1e-9


def _norm(M: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvalsh(M)), initial=0.0)) if M.size else 0.0


def _dist_to_set(x: float, values: np.ndarray) -> float:
    return float(np.min(np.abs(values - x))) if len(values) else math.inf


def _interval_distance(values: np.ndarray, lo: float, hi: float) -> float:
    if not len(values):
        return math.inf
    below = lo - values
    above = values - hi
    return float(np.min(np.maximum(below, above)))


@dataclass(frozen=True, eq=False)
class PerturbationInstance:
    """``H0`` diagonal, ``V`` block tridiagonal for ``blocks``, ``A`` on the last block."""

    H0: np.ndarray  # diagonal entries
    V: np.ndarray
    A: np.ndarray
    blocks: tuple[tuple[int, ...], ...]
    l: int  # zero-based eigenvalue index
    attempts: int = 1

    def __post_init__(self):
        N = len(self.H0)
        if sorted(i for b in self.blocks for i in b) != list(range(N)):
            raise InvalidParameter("blocks must partition the index set")
        if not 0 <= self.l < N:
            raise InvalidParameter(f"index l={self.l} out of range for N={N}")

    @property
    def N(self) -> int:
        return len(self.H0)

    @property
    def n(self) -> int:
        return len(self.blocks) - 1

    @property
    def a(self) -> float:
        return _norm(self.V) + _norm(self.A)

    @property
    def mu(self) -> float:
        return float(np.linalg.eigvalsh(np.diag(self.H0) + self.V)[self.l])

    @property
    def aj(self) -> list[float]:
        mu = self.mu
        return [_dist_to_set(mu, self.H0[list(b)]) for b in self.blocks[1:]]

    @property
    def admissible(self) -> bool:
        a = self.a
        return all(x > 4 * a for x in self.aj)

    def structure_violation(self) -> float:
        """Largest entry of ``V`` between non-adjacent blocks or of ``A`` off the last block."""
        worst = 0.0
        for j, bj in enumerate(self.blocks):
            for k, bk in enumerate(self.blocks):
                if abs(j - k) > 1:
                    worst = max(worst, float(np.max(np.abs(self.V[np.ix_(bj, bk)]), initial=0.0)))
        last = list(self.blocks[-1])
        mask = np.ones_like(self.A, dtype=bool)
        mask[np.ix_(last, last)] = False
        return max(worst, float(np.max(np.abs(self.A[mask]), initial=0.0)))


def lemma1_formula(a: float, aj: Sequence[float]) -> float:
    """``4^n a^(2n+1) prod_j (a_j - 2a)^-2`` with ``n = len(aj)``."""
    if any(x <= 2 * a for x in aj):
        raise InadmissibleInstance(f"a_j={min(aj):.6g} <= 2a={2 * a:.6g}")
    n = len(aj)
    return 4.0 ** n * a ** (2 * n + 1) * math.prod((x - 2 * a) ** -2 for x in aj)


def lemma1_bound(inst: PerturbationInstance) -> float:
    return lemma1_formula(inst.a, inst.aj)


@dataclass(frozen=True)
class Lemma1Report:
    mu: float
    mu_hat: float
    gap: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.gap <= self.bound + EIG_TOL

    @property
    def ratio(self) -> float:
        return self.gap / self.bound if self.bound > 0 else (0.0 if self.gap == 0 else math.inf)


def verify_lemma1(inst: PerturbationInstance) -> Lemma1Report:
    if not inst.admissible:
        raise InadmissibleInstance("need a_j > 4a for every j >= 1")
    H = np.diag(inst.H0) + inst.V
    mu = float(np.linalg.eigvalsh(H)[inst.l])
    mu_hat = float(np.linalg.eigvalsh(H + inst.A)[inst.l])
    return Lemma1Report(mu, mu_hat, abs(mu_hat - mu), lemma1_bound(inst))


def _random_symmetric(rng, n: int) -> np.ndarray:
    X = rng.standard_normal((n, n))
    return (X + X.T) / 2


def _split(rng, N: int, parts: int) -> list[int]:
    cuts = np.sort(rng.choice(np.arange(1, N), size=parts - 1, replace=False)) if parts > 1 else []
    edges = [0, *cuts, N]
    return [int(b - a) for a, b in zip(edges, edges[1:])]


def random_instance(seed: int, dims: int, block_count: int, coupling_scale: float,
                    gap_scale: float, max_attempts: int = 1000) -> PerturbationInstance:
    """Seeded admissible instance of size ``dims`` with ``block_count`` blocks.

    Block 0 sits in ``[-1, 1]``; block ``j`` sits at distance about
    ``j * gap_scale`` on either side.  ``V`` is block tridiagonal with norm
    up to ``coupling_scale`` and ``A`` lives on the last block.
    """
    if dims < block_count or block_count < 1 or coupling_scale < 0 or gap_scale <= 0:
        raise InvalidParameter("need dims >= block_count >= 1, coupling_scale >= 0, gap_scale > 0")
    rng = np.random.default_rng(seed)
    for attempt in range(1, max_attempts + 1):
        sizes = _split(rng, dims, block_count)
        edges = np.cumsum([0, *sizes])
        blocks = tuple(tuple(range(int(a), int(b))) for a, b in zip(edges, edges[1:]))
        H0 = np.empty(dims)
        H0[list(blocks[0])] = rng.uniform(-1, 1, sizes[0])
        for j, b in enumerate(blocks[1:], start=1):
            mag = gap_scale * rng.uniform(j, j + 1, len(b))
            H0[list(b)] = mag * rng.choice([-1.0, 1.0], len(b))
        mask = np.zeros((dims, dims), dtype=bool)
        for j, b in enumerate(blocks):
            for k in (j - 1, j, j + 1):
                if 0 <= k < len(blocks):
                    mask[np.ix_(b, blocks[k])] = True
        V = np.where(mask, _random_symmetric(rng, dims), 0.0)
        if coupling_scale > 0 and np.any(V):
            V *= coupling_scale * rng.uniform(0.2, 1.0) / _norm(V)
        else:
            V[:] = 0.0
        last = list(blocks[-1])
        A = np.zeros((dims, dims))
        if coupling_scale > 0:
            blockA = _random_symmetric(rng, len(last))
            A[np.ix_(last, last)] = blockA * coupling_scale * rng.uniform(0.1, 1.0) / max(_norm(blockA), 1e-300)
        spec = np.linalg.eigvalsh(np.diag(H0) + V)
        near = np.nonzero(np.abs(spec) <= 1.0 + coupling_scale)[0]
        if len(near) == 0:
            continue
        l = int(rng.choice(near))
        inst = PerturbationInstance(H0, V, A, blocks, l, attempt)
        if inst.admissible:
            return inst
    raise GenerationFailed(f"no admissible instance after {max_attempts} attempts")


# ---------------------------------------------------------------- chains and Q

@dataclass(frozen=True, eq=False)
class ChainInstance:
    """A family of chains ``P^m = sum_j P^m_j`` plus the remainder ``Q``."""

    H0: np.ndarray
    V: np.ndarray
    chains: tuple[tuple[tuple[int, ...], ...], ...]  # chains[m][j] = index block P^m_j
    window: tuple[float, float]

    @property
    def N(self) -> int:
        return len(self.H0)

    @property
    def family_indices(self) -> list[int]:
        return sorted(i for chain in self.chains for b in chain for i in b)

    @property
    def Q(self) -> list[int]:
        used = set(self.family_indices)
        return [i for i in range(self.N) if i not in used]

    @property
    def v(self) -> float:
        return _norm(self.V)

    def margins(self) -> tuple[float, list[list[float]]]:
        """Distance of ``spec(Q H0 Q)`` to ``J`` and the ``a_j^m`` for ``j >= 1``."""
        lo, hi = self.window
        q = _interval_distance(self.H0[self.Q], lo, hi)
        a = [[_interval_distance(self.H0[list(b)], lo, hi) for b in chain[1:]] for chain in self.chains]
        return q, a

    def structure_violation(self) -> float:
        worst = 0.0

        def block(I, K):
            return float(np.max(np.abs(self.V[np.ix_(I, K)]), initial=0.0)) if I and K else 0.0

        flat = [sorted(i for b in chain for i in b) for chain in self.chains]
        for m in range(len(flat)):
            for k in range(len(flat)):
                if m != k:
                    worst = max(worst, block(flat[m], flat[k]))
        Q = self.Q
        for chain in self.chains:
            for j, bj in enumerate(chain):
                for k, bk in enumerate(chain):
                    if abs(j - k) > 1:
                        worst = max(worst, block(list(bj), list(bk)))
                if j < len(chain) - 1:
                    worst = max(worst, block(list(bj), Q))
        return worst


@dataclass
class Lemma2Report:
    inside: list[int]  # indices r with mu_r(H) in J
    gaps: list[float]
    bound: float
    intruders: list[float]  # other eigenvalues of H~ inside [l1 + 2v, l2 - 2v]
    index_shift: int
    shift_mismatch: float  # max |mu_j(sum P H P) - mu_{j+l}(H~)| over mu_j in J

    @property
    def worst_gap(self) -> float:
        return max(self.gaps, default=0.0)

    @property
    def passed(self) -> bool:
        return (self.worst_gap <= self.bound + EIG_TOL and not self.intruders
                and self.shift_mismatch <= EIG_TOL)


def lemma2_bound(inst: ChainInstance) -> float:
    v = inst.v
    _, a = inst.margins()
    terms = [(6 * v) ** (2 * len(aj) + 1) * math.prod((x - 6 * v) ** -2 for x in aj) for aj in a]
    return max(terms, default=0.0)


def verify_lemma2(inst: ChainInstance) -> Lemma2Report:
    v = inst.v
    lo, hi = inst.window
    q_margin, a = inst.margins()
    if not q_margin > 6 * v:
        raise InadmissibleInstance(f"spectrum of Q H0 Q only {q_margin:.6g} from J (need > 6v)")
    if any(not x > 16 * v for aj in a for x in aj):
        raise InadmissibleInstance("some a_j^m does not exceed 16v")
    if inst.structure_violation() > 0:
        raise InadmissibleInstance("coupling pattern breaks the chain structure")
    H = np.diag(inst.H0) + inst.V
    fam = inst.family_indices
    Q = inst.Q
    S = np.zeros_like(H)
    for chain in inst.chains:
        idx = sorted(i for b in chain for i in b)
        S[np.ix_(idx, idx)] = H[np.ix_(idx, idx)]
    Ht = S.copy()
    Ht[Q, Q] = inst.H0[Q]
    mu = np.linalg.eigvalsh(H)
    mut = np.linalg.eigvalsh(Ht)
    inside = [int(r) for r in np.nonzero((mu >= lo) & (mu <= hi))[0]]
    gaps = [abs(float(mut[r] - mu[r])) for r in inside]
    others = np.delete(mut, inside)
    intruders = [float(x) for x in others if lo + 2 * v <= x <= hi - 2 * v]
    shift = int(np.sum(inst.H0[Q] < lo))
    s = np.linalg.eigvalsh(S[np.ix_(fam, fam)]) if fam else np.zeros(0)
    mismatch = 0.0
    for j, x in enumerate(s):
        if lo <= x <= hi:
            mismatch = max(mismatch, abs(float(x - mut[j + shift])))
    return Lemma2Report(inside, gaps, lemma2_bound(inst), intruders, shift, mismatch)


def random_chain_instance(seed: int, chain_count: int = 3, max_chain: int = 2, max_block: int = 3,
                          q_size: int = 6, coupling_scale: float = 0.05, window: float = 1.0,
                          gap_scale: float = 1.0, max_attempts: int = 1000) -> ChainInstance:
    """Seeded instance meeting the 6v / 16v margins around ``J = [-window, window]``."""
    rng = np.random.default_rng(seed)
    v = coupling_scale
    for _ in range(max_attempts):
        chains = []
        H0: list[float] = []
        for _ in range(chain_count):
            chain = []
            for j in range(int(rng.integers(0, max_chain + 1)) + 1):
                size = int(rng.integers(1, max_block + 1))
                start = len(H0)
                if j == 0:
                    H0.extend(rng.uniform(-window, window, size))
                else:
                    far = window + 16 * v + gap_scale * rng.uniform(j, j + 1, size)
                    H0.extend(far * rng.choice([-1.0, 1.0], size))
                chain.append(tuple(range(start, start + size)))
            chains.append(tuple(chain))
        qstart = len(H0)
        far = window + 6 * v + gap_scale * rng.uniform(0.5, 3.0, q_size)
        H0.extend(far * rng.choice([-1.0, 1.0], q_size))
        N = len(H0)
        Q = list(range(qstart, N))
        mask = np.zeros((N, N), dtype=bool)
        mask[np.ix_(Q, Q)] = True
        for chain in chains:
            for j, bj in enumerate(chain):
                for k in (j - 1, j, j + 1):
                    if 0 <= k < len(chain):
                        mask[np.ix_(bj, chain[k])] = True
            mask[np.ix_(chain[-1], Q)] = True
            mask[np.ix_(Q, chain[-1])] = True
        V = np.where(mask, _random_symmetric(rng, N), 0.0)
        if v > 0 and np.any(V):
            V *= v * rng.uniform(0.3, 1.0) / _norm(V)
        else:
            V[:] = 0.0
        inst = ChainInstance(np.asarray(H0), V, tuple(chains), (-window, window))
        q_margin, a = inst.margins()
        vv = inst.v
        if q_margin > 6 * vv and all(x > 16 * vv for aj in a for x in aj):
            return inst
    raise GenerationFailed(f"no instance meeting the margins after {max_attempts} attempts")


# ---------------------------------------------------------------- harness

@dataclass
class HarnessSummary:
    trials: int
    violations: int
    worst_ratio: float
    ratio_histogram: dict
    chain_trials: int = 0
    chain_violations: int = 0
    chain_worst_ratio: float = 0.0
    attempts_histogram: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "violations": self.violations + self.chain_violations,
            "worstRatio": self.worst_ratio,
            "lemma1": {"trials": self.trials, "violations": self.violations,
                       "worstRatio": self.worst_ratio, "ratioHistogram": self.ratio_histogram,
                       "attemptsHistogram": self.attempts_histogram},
            "chains": {"trials": self.chain_trials, "violations": self.chain_violations,
                       "worstRatio": self.chain_worst_ratio},
            "histograms": {"log10Ratio": self.ratio_histogram, "attempts": self.attempts_histogram},
        }


def _log_bin(ratio: float) -> str:
    if ratio <= 0:
        return "zero"
    return str(int(math.floor(math.log10(ratio))))


def run_harness(trials: int, seed: int, max_dim: int = 40, max_blocks: int = 5,
                chain_trials: int | None = None) -> HarnessSummary:
    """Random admissible block instances (``N <= max_dim``, up to ``max_blocks`` blocks) plus chain instances."""
    master = np.random.default_rng(seed)
    hist: dict[str, int] = {}
    attempts: dict[str, int] = {}
    violations = 0
    worst = 0.0
    for _ in range(trials):
        sub = int(master.integers(2 ** 31))
        blocks = int(master.integers(1, max_blocks + 1))
        dims = int(master.integers(max(blocks, 2), max_dim + 1))
        coupling = float(master.uniform(0.05, 1.0))
        gap = coupling * float(master.uniform(6.0, 20.0))
        inst = random_instance(sub, dims, blocks, coupling, gap)
        rep = verify_lemma1(inst)
        violations += not rep.passed
        worst = max(worst, rep.ratio)
        hist[_log_bin(rep.ratio)] = hist.get(_log_bin(rep.ratio), 0) + 1
        attempts[str(inst.attempts)] = attempts.get(str(inst.attempts), 0) + 1
    summary = HarnessSummary(trials, violations, worst, dict(sorted(hist.items())),
                             attempts_histogram=dict(sorted(attempts.items(), key=lambda kv: int(kv[0]))))
    n_chain = trials // 5 if chain_trials is None else chain_trials
    for _ in range(n_chain):
        inst = random_chain_instance(int(master.integers(2 ** 31)),
                                     coupling_scale=float(master.uniform(0.01, 0.1)))
        rep = verify_lemma2(inst)
        summary.chain_trials += 1
        summary.chain_violations += not rep.passed
        if rep.bound > 0:
            summary.chain_worst_ratio = max(summary.chain_worst_ratio, rep.worst_gap / rep.bound)
    return summary


def shrink_probe(inst: PerturbationInstance, factors: Sequence[float] = (1.0, 0.5, 0.25, 0.125)) -> list[float]:
    """Measured ``|mu_hat_l - mu_l|`` as ``A`` is scaled down."""
    H = np.diag(inst.H0) + inst.V
    mu = float(np.linalg.eigvalsh(H)[inst.l])
    return [abs(float(np.linalg.eigvalsh(H + t * inst.A)[inst.l]) - mu) for t in factors]
