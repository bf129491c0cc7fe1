"""Mean-variance portfolio optimization over the simplex.

Two entry points: the textbook closed form w* = inv(Sigma) (mu - rf 1) / Z,
which ignores the long-only constraint, and a long-only quadratic program

    min  0.5 w' Sigma w - lam mu' w   s.t.  sum w = 1, w >= 0

solved by exhaustive active-set enumeration: every subset of assets pinned
to zero defines an equality-constrained subproblem with a closed-form
solution, and at portfolio sizes (M <= ~15) trying all 2^M - 1 subsets is
exact, certifiable via KKT, and faster than tuning an iterative solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .data import MarketFrame

RIDGE_EPS = 1e-8
MIN_EIG_FLOOR = 1e-10
ZERO_NORMALIZER_TOL = 1e-12
NEGATIVE_WEIGHT_TOL = 1e-10


class WindowTooShortError(ValueError):
    pass


class SingularCovarianceError(np.linalg.LinAlgError):
    pass


class ZeroNormalizerError(ValueError):
    pass


class NonConvergenceError(RuntimeError):
    def __init__(self, subsets_tried: int):
        super().__init__(f"no feasible active set among {subsets_tried} candidates")
        self.subsets_tried = subsets_tried


@dataclass(frozen=True)
class MomentEstimate:
    mu: np.ndarray  # (M,) expected daily simple returns
    cov: np.ndarray  # (M, M)
    lookback: int

    def __post_init__(self):
        self.mu.setflags(write=False)
        self.cov.setflags(write=False)


@dataclass(frozen=True)
class MptSolution:
    weights: np.ndarray
    expected_return: float
    variance: float
    active_set: tuple[int, ...]  # indices pinned at the w_i = 0 bound
    nu: float  # multiplier of the budget constraint

    def __post_init__(self):
        self.weights.setflags(write=False)


def estimate_moments(frame: MarketFrame, t: int, lookback: int) -> MomentEstimate:
    """Sample mean/covariance of daily close-to-close simple returns over the
    ``lookback`` days ending at day index ``t`` (no lookahead)."""
    if lookback < 2:
        raise WindowTooShortError("lookback must be at least 2 returns")
    if t < lookback:
        raise WindowTooShortError(f"day index {t} has only {t} trailing returns, need {lookback}")
    closes = frame.closes[:, t - lookback : t + 1]
    rets = closes[:, 1:] / closes[:, :-1] - 1.0  # (M, lookback)
    mu = rets.mean(axis=1)
    cov = np.cov(rets, ddof=1)
    cov = np.atleast_2d(cov)
    eigvals = np.linalg.eigvalsh(cov)
    if eigvals.min() < MIN_EIG_FLOOR:
        cov = cov + RIDGE_EPS * np.eye(cov.shape[0])
    return MomentEstimate(mu=mu, cov=cov, lookback=lookback)


def solve_closed_form(mu: np.ndarray, cov: np.ndarray, r_f: float = 0.0) -> np.ndarray:
    """Sum-normalized tangency-style weights; entries may be negative."""
    mu = np.asarray(mu, dtype=float)
    cov = np.asarray(cov, dtype=float)
    excess = mu - r_f
    try:
        x = np.linalg.solve(cov, excess)
    except np.linalg.LinAlgError as err:
        raise SingularCovarianceError(str(err)) from None
    z = float(x.sum())
    if abs(z) < ZERO_NORMALIZER_TOL:
        raise ZeroNormalizerError(f"normalizer {z} too close to zero")
    return x / z


def _equality_qp(cov_ff: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, float]:
    """Minimize 0.5 w'Cw - target'w subject to sum w = 1 on the free set.

    Solved via the Schur complement of the bordered KKT system:
    w = C^-1 (target - nu 1) with nu = (1' C^-1 target - 1) / (1' C^-1 1).
    """
    x1 = np.linalg.solve(cov_ff, target)
    x2 = np.linalg.solve(cov_ff, np.ones(len(target)))
    denom = float(x2.sum())
    if abs(denom) < 1e-300:
        raise np.linalg.LinAlgError("degenerate budget direction")
    nu = (float(x1.sum()) - 1.0) / denom
    return x1 - nu * x2, nu


def solve_constrained(mu: np.ndarray, cov: np.ndarray, lam: float = 1.0) -> MptSolution:
    """Exact long-only minimizer of 0.5 w'Sigma w - lam mu'w on the simplex."""
    mu = np.asarray(mu, dtype=float)
    cov = np.asarray(cov, dtype=float)
    if lam < 0.0:
        raise ValueError("risk-aversion trade-off lam must be >= 0")
    m = len(mu)
    if cov.shape != (m, m):
        raise ValueError(f"cov shape {cov.shape} does not match {m} assets")

    target = lam * mu
    best: tuple[float, np.ndarray, tuple[int, ...], float] | None = None
    tried = 0
    indices = range(m)
    for k_active in range(m):  # number of assets pinned to zero
        for active in combinations(indices, k_active):
            free = [i for i in indices if i not in active]
            tried += 1
            cov_ff = cov[np.ix_(free, free)]
            try:
                w_free, nu = _equality_qp(cov_ff, target[free])
            except np.linalg.LinAlgError:
                continue
            if w_free.min() < -NEGATIVE_WEIGHT_TOL:
                continue
            w = np.zeros(m)
            w[free] = np.maximum(w_free, 0.0)
            w /= w.sum()
            objective = 0.5 * float(w @ cov @ w) - float(target @ w)
            if best is None or objective < best[0]:
                best = (objective, w, tuple(active), nu)
    if best is None:
        raise NonConvergenceError(tried)
    _, w, active, nu = best
    return MptSolution(
        weights=w,
        expected_return=float(mu @ w),
        variance=float(w @ cov @ w),
        active_set=active,
        nu=nu,
    )
