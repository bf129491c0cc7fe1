"""Risk and performance statistics over per-step net return series.

Conventions: ratios are per-step (not annualized) except Calmar, which
annualizes at 365 periods per year (daily crypto bars, no weekend gaps).
Drawdown, VaR, and CVaR are reported as negative fractions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

PERIODS_PER_YEAR = 365


class ZeroDispersionError(ValueError):
    pass


class NoDownsideError(ValueError):
    pass


class TooFewSamplesError(ValueError):
    pass


class ZeroDrawdownError(ValueError):
    pass


def _as_series(returns, min_len: int = 1) -> np.ndarray:
    r = np.asarray(returns, dtype=float)
    if r.ndim != 1:
        raise ValueError("return series must be one-dimensional")
    if len(r) < min_len:
        raise TooFewSamplesError(f"need at least {min_len} returns, got {len(r)}")
    if not np.isfinite(r).all():
        raise ValueError("non-finite return")
    return r


def sharpe(returns, r_f: float = 0.0) -> float:
    """Mean excess return over sample standard deviation (ddof=1)."""
    r = _as_series(returns, min_len=2)
    excess = r - r_f
    sigma = excess.std(ddof=1)
    if sigma == 0.0:
        raise ZeroDispersionError("returns have zero dispersion")
    return float(excess.mean() / sigma)


def sortino(returns, r_f: float = 0.0) -> float:
    """Mean excess return over downside deviation.

    The downside deviation is the root mean square of min(r - MAR, 0) taken
    over the FULL series length (above-target steps contribute zeros), with
    the minimum acceptable return MAR = r_f.
    """
    r = _as_series(returns, min_len=2)
    shortfall = np.minimum(r - r_f, 0.0)
    if not (r < r_f).any():
        raise NoDownsideError("no return below the minimum acceptable return")
    downside = math.sqrt(float((shortfall**2).mean()))
    return float((r - r_f).mean() / downside)


def max_drawdown(values) -> float:
    """Worst peak-to-trough fraction of a value path; 0 for monotone growth."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or len(v) == 0:
        raise ValueError("value path must be a nonempty 1-D array")
    if (v <= 0.0).any():
        raise ValueError("value path must be positive")
    peaks = np.maximum.accumulate(v)
    return float((v / peaks - 1.0).min())


def var_cvar(returns, alpha: float = 0.95) -> tuple[float, float]:
    """Empirical lower-tail quantile of returns and the mean of the tail.

    Uses the "lower" order-statistic rule, so both numbers are actual
    observed returns (negative in any interesting series).
    """
    if not 0.5 < alpha < 1.0:
        raise ValueError("alpha must lie in (0.5, 1)")
    min_len = int(math.ceil(1.0 / (1.0 - alpha)))
    r = _as_series(returns, min_len=min_len)
    var = float(np.quantile(r, 1.0 - alpha, method="lower"))
    cvar = float(r[r <= var].mean())
    return var, cvar


def calmar(returns, periods_per_year: int = PERIODS_PER_YEAR) -> float:
    """Annualized (geometric) return divided by |max drawdown|."""
    r = _as_series(returns, min_len=1)
    growth = np.cumprod(1.0 + r)
    if (growth <= 0.0).any():
        raise ValueError("returns imply a non-positive portfolio value")
    path = np.concatenate(([1.0], growth))
    mdd = max_drawdown(path)
    if mdd == 0.0:
        raise ZeroDrawdownError("no drawdown on this path")
    annualized = float(growth[-1]) ** (periods_per_year / len(r)) - 1.0
    return annualized / abs(mdd)


def utility(returns, lam: float = 1.0) -> float:
    """Mean-variance utility: sample mean minus lam/2 times sample variance."""
    r = _as_series(returns, min_len=2)
    return float(r.mean() - 0.5 * lam * r.var(ddof=1))


@dataclass(frozen=True)
class MetricsReport:
    final_portfolio_value: float
    mean_log_return: float
    standard_deviation: float
    sharpe_ratio: float
    sortino_ratio: float
    maximum_drawdown: float
    var_95: float
    cvar_95: float
    calmar_ratio: float
    utility: float
    avg_weights: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "final_portfolio_value": self.final_portfolio_value,
            "mean_log_return": self.mean_log_return,
            "standard_deviation": self.standard_deviation,
            "sharpe_ratio": self.sharpe_ratio,
            "sortino_ratio": self.sortino_ratio,
            "maximum_drawdown": self.maximum_drawdown,
            "var_95": self.var_95,
            "cvar_95": self.cvar_95,
            "calmar_ratio": self.calmar_ratio,
            "utility": self.utility,
            "avg_weights": dict(self.avg_weights),
        }


def build_report(net_returns, values, weight_rows, component_names,
                 r_f: float = 0.0, lam: float = 1.0) -> MetricsReport:
    """Assemble the full report from a backtest trace.

    ``values`` is the value path including the starting value; degenerate
    metrics (no dispersion, no losing day, ...) are reported as NaN rather
    than aborting the report.
    """
    r = _as_series(net_returns, min_len=2)
    v = np.asarray(values, dtype=float)
    w = np.asarray(weight_rows, dtype=float)
    if w.shape != (len(r), len(component_names)):
        raise ValueError("weight rows do not match returns/components")

    def guarded(fn, *args):
        try:
            return fn(*args)
        except ValueError:
            return float("nan")

    try:
        var95, cvar95 = var_cvar(r)
    except ValueError:
        var95 = cvar95 = float("nan")
    return MetricsReport(
        final_portfolio_value=float(v[-1] / v[0]),
        mean_log_return=float(np.log1p(r).mean()),
        standard_deviation=float(r.std(ddof=1)),
        sharpe_ratio=guarded(sharpe, r, r_f),
        sortino_ratio=guarded(sortino, r, r_f),
        maximum_drawdown=max_drawdown(v),
        var_95=var95,
        cvar_95=cvar95,
        calmar_ratio=guarded(calmar, r),
        utility=utility(r, lam),
        avg_weights={name: float(w[:, i].mean()) for i, name in enumerate(component_names)},
    )
