"""Fit GARCH(1,1) to a simulated return path and forecast its variance."""

import numpy as np

from ftsbench.garch import fit_garch, forecast_garch
from ftsbench.synth import gen_garch

r, true_sigma2 = gen_garch(4000, alpha0=0.05, alpha1=0.10, beta1=0.85, mu=0.02, seed=11, return_sigma2=True)
fit = fit_garch(r)
p = fit.params
print(f"mu {p.mu:.4f}  alpha0 {p.alpha0:.4f}  alpha1 {p.alpha1:.4f}  beta1 {p.beta1:.4f}")
print(f"persistence {p.persistence:.4f} (true 0.95)")
print(f"log-likelihood {fit.loglik:.1f}, up from {fit.start_loglik:.1f} at the start point")

# the filtered variance tracks the simulated one closely once the start-up effect fades
corr = np.corrcoef(fit.sigma2_path[100:], true_sigma2[100:])[0, 1]
print(f"correlation of filtered and true variance: {corr:.3f}")

fc = forecast_garch(fit, 250)
print("variance forecast at horizons 1, 10, 100, 250:", np.round(fc.variance[[0, 9, 99, 249]], 4))
print(f"unconditional variance {p.alpha0 / (1 - p.persistence):.4f}")
