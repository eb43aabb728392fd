"""Order search on a simulated ARMA(2,1) series, then one-step forecasts.

Run with ``python demos/01_arima_order_search.py``.
"""

import numpy as np

from ftsbench.arima import forecast_multi_step, forecast_one_step, select_order
from ftsbench.series import rmse
from ftsbench.synth import gen_arma

# y_t = 0.5 y_{t-1} - 0.3 y_{t-2} - 0.4 e_{t-1} + e_t
y = gen_arma(1200, phi=[0.5, -0.3], theta=[0.4], seed=3)
train, test = y[:900], y[900:]

# a small grid keeps the demo fast; every cell is scored on the same points
best, fits = select_order(train, p_max=3, d_max=0, q_max=2)
print("top five orders by AIC")
for order, fit in sorted(fits.items(), key=lambda kv: kv[1].aic)[:5]:
    print(f"  {order}  aic {fit.aic:9.2f}  bic {fit.bic:9.2f}")

fit = fits[best]
print(f"\nselected {best}: phi {np.round(fit.phi, 3)}, theta {np.round(fit.theta, 3)}, sigma2 {fit.sigma2:.3f}")

# one-step-ahead forecasts reuse the realized history, as in a walk-forward test
preds = forecast_one_step(fit, y, len(test))
naive = np.full(len(test), train.mean())
print(f"test rmse: model {rmse(preds, test):.4f}, train mean {rmse(naive, test):.4f}")

# multi-step forecasts decay towards the unconditional mean
print("ten-step path:", np.round(forecast_multi_step(fit, train, 10), 3))
