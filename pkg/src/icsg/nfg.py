"""Stage games: zero-sum matrix games and bimatrix equilibria."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import CapExceededError, IcsgError, PivotingError

NE_CAP = 10
NE_TOL = 1e-9
DEDUPE_TOL = 1e-8


@dataclass(frozen=True)
class BimatrixGame:
    payoff1: np.ndarray
    payoff2: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.payoff1, dtype=float)
        b = np.asarray(self.payoff2, dtype=float)
        if a.ndim != 2 or a.shape != b.shape or 0 in a.shape:
            raise ValueError("bimatrix payoffs must be non-empty matrices of equal shape")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("bimatrix payoffs must be finite")
        object.__setattr__(self, "payoff1", a)
        object.__setattr__(self, "payoff2", b)

    @property
    def shape(self):
        return self.payoff1.shape


@dataclass(frozen=True)
class MixedProfile:
    x: np.ndarray
    y: np.ndarray
    u1: float
    u2: float

    @property
    def welfare(self):
        return self.u1 + self.u2

    @classmethod
    def of(cls, game: BimatrixGame, x, y) -> "MixedProfile":
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        return cls(x, y, float(x @ game.payoff1 @ y), float(x @ game.payoff2 @ y))


# ---------------------------------------------------------------------------
# zero-sum: dense tableau simplex

def _simplex_max(A: np.ndarray, max_pivots: int):
    """max 1'y  s.t.  A y <= 1, y >= 0  for A > 0, starting from the slack basis.

    Returns (t, y_tilde, x_tilde) where x_tilde are the dual prices.
    Largest-coefficient pivoting, switching to Bland's rule after a run of
    degenerate pivots.
    """
    l, m = A.shape
    T = np.zeros((l + 1, m + l + 1))
    T[:l, :m] = A
    T[:l, m:m + l] = np.eye(l)
    T[:l, -1] = 1.0
    T[l, :m] = -1.0
    basis = list(range(m, m + l))
    bland = False
    stall = 0
    for _ in range(max_pivots):
        cost = T[l, :-1]
        if bland:
            cand = np.flatnonzero(cost < -1e-12)
            if cand.size == 0:
                break
            col = int(cand[0])
        else:
            col = int(np.argmin(cost))
            if cost[col] >= -1e-12:
                break
        column = T[:l, col]
        ok = column > 1e-12
        if not ok.any():
            raise IcsgError("matrix game LP unbounded; payoffs must be shifted positive")
        ratios = np.full(l, np.inf)
        ratios[ok] = T[:l, -1][ok] / column[ok]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + 1e-12 * max(1.0, best))
        row = int(min(ties, key=lambda r: basis[r]))
        if best <= 1e-14:
            stall += 1
            if stall > 2 * (l + m):
                bland = True
        else:
            stall = 0
        T[row] /= T[row, col]
        for r in range(l + 1):
            if r != row and T[r, col] != 0.0:
                T[r] -= T[r, col] * T[row]
        basis[row] = col
    else:
        raise PivotingError(f"simplex did not terminate within {max_pivots} pivots")
    y = np.zeros(m)
    for r, b in enumerate(basis):
        if b < m:
            y[b] = T[r, -1]
    x = T[l, m:m + l].copy()
    return T[l, -1], y, x


def _normalise(p):
    p = np.clip(p, 0.0, None)
    s = p.sum()
    return p / s


def _pure_saddle(Z):
    row_min = Z.min(axis=1)
    col_max = Z.max(axis=0)
    i = int(np.argmax(row_min))
    j = int(np.argmin(col_max))
    if row_min[i] == col_max[j]:
        return float(Z[i, j]), i, j
    return None


def solve_matrix(payoff) -> tuple[float, np.ndarray, np.ndarray]:
    """Value and optimal mixed strategies of a zero-sum game.

    The row player maximises.  Games with a pure saddle point are answered
    directly; everything else goes through the LP.
    """
    Z = np.asarray(payoff, dtype=float)
    if Z.ndim != 2 or 0 in Z.shape:
        raise ValueError("payoff must be a non-empty matrix")
    if not np.all(np.isfinite(Z)):
        raise ValueError("payoff entries must be finite")
    l, m = Z.shape
    saddle = _pure_saddle(Z)
    if saddle is not None:
        v, i, j = saddle
        x, y = np.zeros(l), np.zeros(m)
        x[i] = y[j] = 1.0
        return float(v), x, y
    shift = 1.0 - Z.min()
    t, yt, xt = _simplex_max(Z + shift, max_pivots=50 * (l + m) ** 2 + 100)
    x, y = _normalise(xt), _normalise(yt)
    return float(1.0 / t - shift), x, y


# ---------------------------------------------------------------------------
# bimatrix: extreme equilibria by support/label enumeration

def _vertices(A: np.ndarray, epsilon: float) -> list[np.ndarray]:
    """Mixed strategies of the row player that are extreme points of its
    best-response polyhedron against the opponent payoff ``A`` (rows x cols).

    For a row support I and an equally large set K of opponent columns made
    indifferent, the linear system x_I' A[I,K] = v, sum(x_I) = 1 is solved;
    singular systems are skipped.
    """
    l, m = A.shape
    out: list[np.ndarray] = []
    for k in range(1, min(l, m) + 1):
        for I in itertools.combinations(range(l), k):
            sub = A[list(I)]
            for K in itertools.combinations(range(m), k):
                M = np.zeros((k + 1, k + 1))
                M[:k, :k] = sub[:, list(K)].T
                M[:k, k] = -1.0
                M[k, :k] = 1.0
                rhs = np.zeros(k + 1)
                rhs[k] = 1.0
                try:
                    sol = np.linalg.solve(M, rhs)
                except np.linalg.LinAlgError:
                    continue
                if not np.all(np.isfinite(sol)) or np.linalg.cond(M) > 1e12:
                    continue
                xs, v = sol[:k], sol[k]
                if xs.min() < -NE_TOL:
                    continue
                x = np.zeros(l)
                x[list(I)] = np.clip(xs, 0.0, None)
                x /= x.sum()
                if (x @ A).max() > v + epsilon + NE_TOL:
                    continue
                if not any(np.max(np.abs(x - q)) <= DEDUPE_TOL for q in out):
                    out.append(x)
    return out


def best_response_gaps(game: BimatrixGame, x, y) -> tuple[float, float]:
    """How much each player gains from their best pure response."""
    u1 = x @ game.payoff1 @ y
    u2 = x @ game.payoff2 @ y
    return float((game.payoff1 @ y).max() - u1), float((x @ game.payoff2).max() - u2)


def enumerate_ne(game: BimatrixGame, epsilon: float = 0.0, cap: int = NE_CAP) -> list[MixedProfile]:
    """Extreme (epsilon-)Nash equilibria of a bimatrix game.

    Candidate strategies for each player are the vertices of their
    best-response polyhedra; every pair passing the epsilon best-response
    test is kept.  With epsilon = 0 this is exactly the set of extreme
    equilibria, degenerate games included.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    l, m = game.shape
    if l > cap or m > cap:
        raise CapExceededError(f"bimatrix game {l}x{m} exceeds the {cap}x{cap} cap")
    xs = _vertices(game.payoff2, epsilon)
    ys = _vertices(game.payoff1.T, epsilon)
    found: list[MixedProfile] = []
    for x in xs:
        for y in ys:
            g1, g2 = best_response_gaps(game, x, y)
            if g1 > epsilon + NE_TOL or g2 > epsilon + NE_TOL:
                continue
            if any(np.max(np.abs(x - p.x)) <= DEDUPE_TOL and np.max(np.abs(y - p.y)) <= DEDUPE_TOL
                   for p in found):
                continue
            found.append(MixedProfile.of(game, x, y))
    return found


def _better(a: MixedProfile, b: MixedProfile, tol=1e-9) -> bool:
    if abs(a.welfare - b.welfare) > tol:
        return a.welfare > b.welfare
    if abs(a.u1 - b.u1) > tol:
        return a.u1 > b.u1
    for p, q in itertools.chain(zip(a.x, b.x), zip(a.y, b.y)):
        if abs(p - q) > DEDUPE_TOL:
            return p > q
    return False


def select_swne(candidates: list[MixedProfile]) -> MixedProfile:
    """Highest welfare; ties go to higher u1, then to the profile that puts
    more weight on earlier actions (lexicographically larger x, then y)."""
    if not candidates:
        raise ValueError("no candidates to select from")
    best = candidates[0]
    for c in candidates[1:]:
        if _better(c, best):
            best = c
    return best
