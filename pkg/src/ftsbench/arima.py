"""ARIMA(p, d, q) estimation by conditional sum of squares.

The mean equation is

    y(t) = c + phi_1 y(t-1) + ... + phi_p y(t-p)
             - theta_1 e(t-1) - ... - theta_q e(t-q) + e(t)

applied to the ``d``-times differenced series. Note the minus sign on the MA
terms: a positive ``theta`` damps the previous shock. Pre-sample residuals are
zero and the recursion starts at ``t = p`` (0-based), so ``n - p`` residuals
enter the objective.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .numerics import minimize_simplex
from .series import ReturnSeries, difference

logger = logging.getLogger(__name__)

CRITERIA = ("aic", "bic", "mse")


class ArimaError(ValueError):
    """Raised when an ARIMA model cannot be fitted or evaluated."""


@dataclass(frozen=True, order=True)
class ArimaOrder:
    p: int
    d: int
    q: int

    def __post_init__(self):
        if min(self.p, self.d, self.q) < 0:
            raise ValueError(f"negative order {self}")

    def __str__(self) -> str:
        return f"({self.p},{self.d},{self.q})"


@dataclass(frozen=True)
class ArimaFit:
    order: ArimaOrder
    c: float
    phi: np.ndarray
    theta: np.ndarray
    sigma2: float
    residuals: np.ndarray
    loglik: float
    aic: float
    bic: float
    mse: float
    n_eff: int
    converged: bool = True
    stationary: bool = True
    invertible: bool = True
    warnings: tuple[str, ...] = field(default=())

    @property
    def n_params(self) -> int:
        return self.order.p + self.order.q + 2

    def criterion(self, name: str) -> float:
        if name not in CRITERIA:
            raise ValueError(f"unknown criterion {name!r}")
        return float(getattr(self, name))

    def summary(self) -> dict:
        return {
            "order": [self.order.p, self.order.d, self.order.q],
            "c": self.c,
            "phi": [float(v) for v in self.phi],
            "theta": [float(v) for v in self.theta],
            "sigma2": self.sigma2,
            "loglik": self.loglik,
            "aic": self.aic,
            "bic": self.bic,
            "mse": self.mse,
            "stationary": self.stationary,
            "invertible": self.invertible,
        }


def _values(series) -> np.ndarray:
    if isinstance(series, ReturnSeries):
        return series.values
    return np.asarray(series, dtype=np.float64)


def _unpack(params, p: int, q: int):
    params = np.asarray(params, dtype=np.float64)
    if params.shape != (1 + p + q,):
        raise ValueError(f"expected {1 + p + q} parameters, got {params.shape}")
    return params[0], params[1 : 1 + p], params[1 + p :]


def arma_residuals(y, c: float, phi, theta) -> np.ndarray:
    """Residuals e(t) for t = p..n-1 with zero pre-sample residuals."""
    y = np.asarray(y, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    p, n = len(phi), len(y)
    e0 = y[p:] - c
    for i in range(1, p + 1):
        e0 = e0 - phi[i - 1] * y[p - i : n - i]
    if len(theta) == 0:
        return e0
    with np.errstate(over="ignore", invalid="ignore"):
        return lfilter([1.0], np.concatenate([[1.0], -theta]), e0)


def _invertible_fast(theta: np.ndarray) -> bool:
    q = len(theta)
    if q == 0:
        return True
    if q == 1:
        return abs(theta[0]) < 1.0
    return _roots_outside_unit_circle(theta)


def arima_css_objective(params, series, p: int, q: int) -> float:
    """Conditional sum of squared residuals for packed ``[c, phi..., theta...]``."""
    y = _values(series)
    if len(y) <= p + q:
        raise ArimaError(f"series of length {len(y)} too short for p={p}, q={q}")
    c, phi, theta = _unpack(params, p, q)
    resid = arma_residuals(y, c, phi, theta)
    with np.errstate(over="ignore", invalid="ignore"):
        css = float(np.dot(resid, resid))
    if not np.isfinite(css):
        raise ArimaError("non-finite residual: MA recursion diverged")
    return css


def _lagmat(x: np.ndarray, lags: int, start: int) -> np.ndarray:
    n = len(x)
    return np.column_stack([x[start - i : n - i] for i in range(1, lags + 1)])


def _initial_params(y: np.ndarray, p: int, q: int) -> np.ndarray:
    """Hannan-Rissanen style least-squares seed for the simplex search."""
    n = len(y)
    if q == 0:
        if p == 0:
            return np.array([y.mean()])
        X = np.column_stack([np.ones(n - p), _lagmat(y, p, p)])
        beta, *_ = np.linalg.lstsq(X, y[p:], rcond=None)
        return beta
    m = int(min(max(p + q + 5, int(round(math.log(n) ** 2))), n // 4))
    X = np.column_stack([np.ones(n - m), _lagmat(y, m, m)])
    beta, *_ = np.linalg.lstsq(X, y[m:], rcond=None)
    e = np.zeros(n)
    e[m:] = y[m:] - X @ beta
    start = m + max(p, q)
    cols = [np.ones(n - start)]
    if p:
        cols.append(_lagmat(y, p, start))
    cols.append(_lagmat(e, q, start))
    beta2, *_ = np.linalg.lstsq(np.column_stack(cols), y[start:], rcond=None)
    params = beta2.copy()
    params[1 + p :] = np.clip(-beta2[1 + p :], -0.95, 0.95)
    return params


def _roots_outside_unit_circle(coefs) -> bool:
    coefs = np.asarray(coefs, dtype=np.float64)
    if len(coefs) == 0 or not np.any(coefs):
        return True
    # 1 - a_1 z - ... - a_k z^k
    poly = np.concatenate([[1.0], -coefs])[::-1]
    return bool(np.all(np.abs(np.roots(poly)) > 1.0))


def information_criteria(loglik: float, k: int, n: int) -> tuple[float, float]:
    """AIC = 2k - 2 lnL and BIC = k ln(n) - 2 lnL."""
    return 2.0 * k - 2.0 * loglik, k * math.log(n) - 2.0 * loglik


def fit_arima(
    series,
    order: ArimaOrder,
    enforce_stationarity: bool = False,
    max_iter: int = 5000,
    n_cond: int | None = None,
) -> ArimaFit:
    """Fit ARIMA by CSS: difference, seed by least squares, polish by simplex.

    The variance is ``sigma2 = CSS / n_eff`` with ``n_eff = len(diffed) - p``;
    the Gaussian log-likelihood follows from it, and AIC/BIC count
    ``k = p + q + 2`` parameters (intercept and variance included).

    The MA polynomial is kept invertible during the search. ``n_cond`` sets how
    many leading observations of the undifferenced series only condition the
    recursion instead of entering the sum of squares (default ``p + d``).
    Comparing orders by AIC/BIC needs a shared ``n_cond``, otherwise larger
    ``p`` wins simply by scoring fewer observations.
    """
    p, d, q = order.p, order.d, order.q
    y = difference(_values(series), d)
    if len(y) < p + q + 2:
        raise ArimaError(f"series too short for order {order}: {len(y)} points")
    skip = p if n_cond is None else n_cond - d
    if skip < p:
        raise ArimaError(f"n_cond={n_cond} smaller than p + d for order {order}")
    if len(y) - skip < p + q + 2:
        raise ArimaError(f"too few observations left after conditioning on {n_cond}")
    scale = float(np.var(y))
    if not np.isfinite(scale) or scale <= 1e-14 * max(1.0, float(np.mean(y * y))):
        raise ArimaError("degenerate variance: series is constant after differencing")

    n_eff = len(y) - skip
    norm = n_eff * scale
    cut = skip - p

    def objective(x):
        c, phi, theta = x[0], x[1 : 1 + p], x[1 + p :]
        if not _invertible_fast(theta):
            return np.inf
        resid = arma_residuals(y, c, phi, theta)[cut:]
        with np.errstate(over="ignore", invalid="ignore"):
            val = float(np.dot(resid, resid)) / norm
        return val if np.isfinite(val) else np.inf

    x0 = _initial_params(y, p, q)
    if not np.isfinite(objective(x0)):
        x0 = np.concatenate([[y.mean()], np.zeros(p + q)])
    steps = np.concatenate([[0.1 * math.sqrt(scale)], np.full(p + q, 0.05)])
    result = minimize_simplex(
        objective, x0, max_iter=max_iter, f_tol=1e-12, x_tol=1e-7, step=steps
    )
    # one restart from the optimum refreshes a possibly collapsed simplex
    result = minimize_simplex(
        objective, result.x_star, max_iter=max_iter, f_tol=1e-12, x_tol=1e-7, step=steps / 10
    )
    if not np.isfinite(result.f_star):
        raise ArimaError(f"optimizer failed for order {order}")

    c, phi, theta = _unpack(result.x_star, p, q)
    resid = arma_residuals(y, c, phi, theta)[cut:]
    css = float(np.dot(resid, resid))
    sigma2 = css / n_eff
    if sigma2 <= 0:
        raise ArimaError("degenerate variance: zero residual variance")
    loglik = -0.5 * n_eff * (math.log(2.0 * math.pi * sigma2) + 1.0)
    k = p + q + 2
    aic, bic = information_criteria(loglik, k, n_eff)

    stationary = _roots_outside_unit_circle(phi)
    invertible = _roots_outside_unit_circle(theta)
    notes = []
    if not stationary:
        if enforce_stationarity:
            raise ArimaError(f"non-stationary AR polynomial for order {order}")
        notes.append("explosive AR roots")
    if not invertible:
        notes.append("non-invertible MA roots")
    if not result.converged:
        notes.append("simplex did not converge")
    return ArimaFit(
        order=order,
        c=float(c),
        phi=phi.copy(),
        theta=theta.copy(),
        sigma2=sigma2,
        residuals=resid,
        loglik=loglik,
        aic=aic,
        bic=bic,
        mse=float(np.mean(resid**2)),
        n_eff=n_eff,
        converged=result.converged,
        stationary=stationary,
        invertible=invertible,
        warnings=tuple(notes),
    )


def select_order(
    series,
    p_max: int = 5,
    d_max: int = 1,
    q_max: int = 5,
    criterion: str = "aic",
    orders=None,
    n_cond: int | None = None,
) -> tuple[ArimaOrder, dict[ArimaOrder, ArimaFit]]:
    """Grid-search ARIMA orders and return the criterion-minimizing one.

    Ties go to the smaller ``p + q``, then the smaller ``p``. Cells that fail to
    fit are logged and skipped. ``orders`` overrides the rectangular grid.
    Every cell is scored on the same observations: the first ``n_cond``
    points (default ``max(p + d)`` over the grid) only condition the
    recursions. Pass ``n_cond`` explicitly to compare results across grids.
    """
    if criterion not in CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}")
    if p_max < 0 or q_max < 0 or d_max not in (0, 1):
        raise ValueError("need p_max, q_max >= 0 and d_max in {0, 1}")
    if orders is None:
        orders = [
            ArimaOrder(p, d, q)
            for d, p, q in itertools.product(range(d_max + 1), range(p_max + 1), range(q_max + 1))
        ]
    needed = max(o.p + o.d for o in orders)
    if n_cond is None:
        n_cond = needed
    elif n_cond < needed:
        raise ValueError(f"n_cond={n_cond} smaller than the grid's largest p + d ({needed})")
    fits: dict[ArimaOrder, ArimaFit] = {}
    for order in orders:
        try:
            fits[order] = fit_arima(series, order, n_cond=n_cond)
        except ArimaError as exc:
            logger.info("order %s skipped: %s", order, exc)
    if not fits:
        raise ArimaError("every grid cell failed to fit")
    best = min(fits, key=lambda o: (fits[o].criterion(criterion), o.p + o.q, o.p, o.d))
    return best, fits


def _one_step_path(fit: ArimaFit, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One-step predictions and residuals of the differenced series from t = p."""
    p, q = fit.order.p, fit.order.q
    resid = arma_residuals(w, fit.c, fit.phi, fit.theta)
    preds = w[p:] - resid
    return preds, resid


def forecast_one_step(fit: ArimaFit, history, test_len: int) -> np.ndarray:
    """Walk-forward one-step forecasts of the last ``test_len`` points of ``history``.

    Parameters stay fixed; residuals are updated from the realized values.
    Forecasts are returned on the scale of ``history`` (levels when d > 0).
    """
    y = _values(history)
    if test_len < 1 or test_len >= len(y):
        raise ArimaError(f"test_len must lie in [1, {len(y) - 1}], got {test_len}")
    d = fit.order.d
    w = difference(y, d)
    if test_len > len(w) - fit.order.p:
        raise ArimaError("history too short for the requested test span")
    preds_w, _ = _one_step_path(fit, w)
    preds_w = preds_w[-test_len:]
    # y_t - w_t only involves past levels, so it converts a forecast of w_t to y_t
    offset = y[-test_len:] - w[-test_len:]
    return preds_w + offset


def forecast_multi_step(fit: ArimaFit, history, horizon: int) -> np.ndarray:
    """Iterated forecasts beyond the end of ``history`` with future shocks set to 0."""
    if horizon < 1:
        raise ArimaError("horizon must be >= 1")
    y = _values(history)
    p, d, q = fit.order.p, fit.order.d, fit.order.q
    w = difference(y, d)
    if len(w) < max(p, 1):
        raise ArimaError("history too short for forecasting")
    resid = arma_residuals(w, fit.c, fit.phi, fit.theta)
    w_hist = list(w[-p:]) if p else []
    e_hist = list(resid[-q:]) if q else []
    if len(e_hist) < q:
        e_hist = [0.0] * (q - len(e_hist)) + e_hist
    tails = [float(np.diff(y, n=k)[-1]) for k in range(d)]
    out = np.empty(horizon)
    for h in range(horizon):
        val = fit.c
        for i in range(1, p + 1):
            val += fit.phi[i - 1] * w_hist[-i]
        for j in range(1, q + 1):
            val -= fit.theta[j - 1] * e_hist[-j]
        if p:
            w_hist.append(val)
        if q:
            e_hist.append(0.0)
        level = val
        for k in range(d - 1, -1, -1):
            level = tails[k] + level
            tails[k] = level
        out[h] = level
    return out
