"""GARCH(1,1) with Gaussian innovations.

    r_t = mu + e_t,   e_t = sigma_t z_t,
    sigma_t^2 = alpha0 + alpha1 e_{t-1}^2 + beta1 sigma_{t-1}^2

Estimation maximizes the Gaussian likelihood over an unconstrained
reparameterization that keeps alpha0 > 0, alpha1, beta1 > 0 and
alpha1 + beta1 < 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .numerics import minimize_simplex
from .series import ReturnSeries

LOG_2PI = math.log(2.0 * math.pi)


class GarchError(ValueError):
    pass


@dataclass(frozen=True)
class GarchParams:
    mu: float
    alpha0: float
    alpha1: float
    beta1: float

    def is_valid(self, stationary: bool = False) -> bool:
        vals = (self.mu, self.alpha0, self.alpha1, self.beta1)
        if not all(math.isfinite(v) for v in vals):
            return False
        if self.alpha0 <= 0 or self.alpha1 < 0 or self.beta1 < 0:
            return False
        return not stationary or self.persistence < 1.0

    def validate(self, stationary: bool = False) -> None:
        if not self.is_valid(stationary):
            raise GarchError(f"invalid GARCH parameters {self}")

    @property
    def persistence(self) -> float:
        return self.alpha1 + self.beta1

    @property
    def unconditional_variance(self) -> float:
        if self.persistence >= 1.0:
            return math.inf
        return self.alpha0 / (1.0 - self.persistence)


@dataclass(frozen=True)
class GarchFit:
    params: GarchParams
    sigma2_path: np.ndarray
    residuals: np.ndarray
    loglik: float
    start_loglik: float
    converged: bool
    iterations: int

    def summary(self) -> dict:
        return {
            "mu": self.params.mu,
            "alpha0": self.params.alpha0,
            "alpha1": self.params.alpha1,
            "beta1": self.params.beta1,
            "persistence": self.params.persistence,
            "loglik": self.loglik,
            "start_loglik": self.start_loglik,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class GarchForecast:
    mean: np.ndarray
    variance: np.ndarray


def _values(series) -> np.ndarray:
    if isinstance(series, ReturnSeries):
        return series.values
    return np.asarray(series, dtype=np.float64)


def default_sigma2_init(params: GarchParams, returns) -> float:
    """Backcast: mean squared deviation of the returns from ``mu``."""
    eps = _values(returns) - params.mu
    return float(np.mean(eps * eps))


def garch_filter(params: GarchParams, returns, sigma2_init: float) -> np.ndarray:
    """Conditional variance path; ``sigma2[0] = sigma2_init``."""
    params.validate()
    if not (sigma2_init > 0 and math.isfinite(sigma2_init)):
        raise GarchError(f"sigma2_init must be positive, got {sigma2_init}")
    r = _values(returns)
    n = len(r)
    out = np.empty(n)
    if n == 0:
        return out
    out[0] = sigma2_init
    if n > 1:
        eps2 = (r[:-1] - params.mu) ** 2
        drive = params.alpha0 + params.alpha1 * eps2
        out[1:], _ = lfilter(
            [1.0], [1.0, -params.beta1], drive, zi=[params.beta1 * sigma2_init]
        )
    if not np.all(np.isfinite(out)):
        raise GarchError("non-finite conditional variance")
    return out


def garch_log_likelihood(params: GarchParams, returns, sigma2_init: float | None = None) -> float:
    """Gaussian log-likelihood; invalid parameters give ``-inf``."""
    r = _values(returns)
    if len(r) == 0:
        raise GarchError("empty return series")
    if not params.is_valid():
        return -math.inf
    if sigma2_init is None:
        sigma2_init = default_sigma2_init(params, r)
    if not sigma2_init > 0:
        return -math.inf
    try:
        s2 = garch_filter(params, r, sigma2_init)
    except GarchError:
        return -math.inf
    eps = r - params.mu
    return float(-0.5 * np.sum(LOG_2PI + np.log(s2) + eps * eps / s2))


def to_unconstrained(params: GarchParams) -> np.ndarray:
    """(mu, alpha0, alpha1, beta1) -> (mu, log alpha0, logit-style a, b)."""
    params.validate(stationary=True)
    rest = 1.0 - params.alpha1 - params.beta1
    return np.array(
        [
            params.mu,
            math.log(params.alpha0),
            math.log(params.alpha1 / rest),
            math.log(params.beta1 / rest),
        ]
    )


def from_unconstrained(x) -> GarchParams:
    mu, log_a0, a, b = (float(v) for v in x)
    top = max(a, b, 0.0)
    ea, eb, e0 = math.exp(a - top), math.exp(b - top), math.exp(-top)
    denom = e0 + ea + eb
    return GarchParams(mu, math.exp(log_a0), ea / denom, eb / denom)


def fit_garch(series, max_iter: int = 4000, start: GarchParams | None = None) -> GarchFit:
    """Maximum-likelihood GARCH(1,1) fit by simplex search.

    The search runs on returns standardized by their sample standard deviation
    and maps back, which keeps the simplex well scaled for daily returns. The
    default start is mu = mean, alpha0 = 0.1 * variance, alpha1 = 0.1,
    beta1 = 0.8.
    """
    r = _values(series)
    if len(r) < 2:
        raise GarchError("need at least 2 returns")
    mean, var = float(np.mean(r)), float(np.var(r))
    if not var > 1e-14 * max(1.0, mean * mean):
        raise GarchError("zero-variance series")
    scale = math.sqrt(var)
    z = (r - mean) / scale

    if start is None:
        start = GarchParams(mean, 0.1 * var, 0.1, 0.8)
    start_std = GarchParams(
        (start.mu - mean) / scale, start.alpha0 / var, start.alpha1, start.beta1
    )

    def objective(x):
        try:
            params = from_unconstrained(x)
        except OverflowError:
            return math.inf
        return -garch_log_likelihood(params, z)

    x0 = to_unconstrained(start_std)
    steps = np.array([0.05, 0.5, 0.5, 0.5])
    res = minimize_simplex(objective, x0, max_iter=max_iter, f_tol=1e-9, x_tol=1e-7, step=steps)
    res = minimize_simplex(
        objective, res.x_star, max_iter=max_iter, f_tol=1e-10, x_tol=1e-8, step=steps / 5
    )
    if not math.isfinite(res.f_star):
        raise GarchError("optimizer failed")
    p = from_unconstrained(res.x_star)
    params = GarchParams(mean + scale * p.mu, var * p.alpha0, p.alpha1, p.beta1)
    sigma2_init = default_sigma2_init(params, r)
    path = garch_filter(params, r, sigma2_init)
    return GarchFit(
        params=params,
        sigma2_path=path,
        residuals=r - params.mu,
        loglik=garch_log_likelihood(params, r),
        start_loglik=garch_log_likelihood(start, r),
        converged=res.converged,
        iterations=res.iterations,
    )


def forecast_garch(fit: GarchFit, horizon: int) -> GarchForecast:
    """Mean and variance forecasts 1..horizon steps past the end of the sample."""
    if horizon < 1:
        raise GarchError("horizon must be >= 1")
    p = fit.params
    var = np.empty(horizon)
    var[0] = p.alpha0 + p.alpha1 * fit.residuals[-1] ** 2 + p.beta1 * fit.sigma2_path[-1]
    for h in range(1, horizon):
        var[h] = p.alpha0 + p.persistence * var[h - 1]
    return GarchForecast(np.full(horizon, p.mu), var)


def one_step_variance(fit: GarchFit, history, test_len: int) -> np.ndarray:
    """Walk-forward one-step variance forecasts for the last ``test_len`` points.

    Parameters and the variance initialization are those of the fit; the
    recursion simply runs on through the realized test returns.
    """
    r = _values(history)
    if test_len < 1 or test_len >= len(r):
        raise GarchError(f"test_len must lie in [1, {len(r) - 1}]")
    path = garch_filter(fit.params, r, float(fit.sigma2_path[0]))
    return path[-test_len:]


def qlike(variance_forecast, returns, mu: float) -> float:
    """QLIKE loss ``mean(log h + e^2 / h)`` of variance forecasts ``h``."""
    h = np.asarray(variance_forecast, dtype=np.float64)
    e2 = (np.asarray(returns, dtype=np.float64) - mu) ** 2
    return float(np.mean(np.log(h) + e2 / h))
