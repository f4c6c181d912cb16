"""Jump-diffusion Monte Carlo and the truncation-level weak error.

Small jumps below a level eps are cut from the driver (optionally replaced
by a Brownian term with the matched variance Sigma(eps) tau).  With common
random numbers across levels, the weak error |P_t f - P^eps_t f| of a smooth
payoff decays like eps^{2 - alpha}, here measured against the exact spectral
reference of the constant-coefficient model.
"""

import numpy as np

import levysde as lv

PERIOD = 8 * np.pi

model = lv.SdeModel(
    sigma=lv.coefficient_preset("constant", value=1.0),
    drift=lv.coefficient_preset("constant", value=0.0),
    measure=lv.StableMeasure.normalized(1.5),
    sigma_lower_bound=0.5,
)
payoff = lv.bump_payoff(center=0.0, width=2.0, period=PERIOD)

est = lv.mc_semigroup(
    payoff, model, 0.0, 1.0,
    lv.SimScheme(eps=0.1, tau=1.0, gaussian_compensation=True, paths=200_000, seed=7),
)
ref = lv.spectral_reference(model, payoff, 0.0, 1.0)
print(f"MC semigroup estimate:  {est.mean:.5f} +- {est.stderr:.5f}")
print(f"spectral reference:     {ref:.5f}   "
      f"(|z| = {abs(est.mean - ref) / est.stderr:.2f} standard errors)")

print("\nweak-error sweep (no compensation: the eps^{0.5} truncation bias):")
scheme = lv.SimScheme(eps=0.4, tau=1.0, gaussian_compensation=False, paths=300_000, seed=17)
table = lv.weak_error_table(model, payoff, 0.0, 1.0, [0.4, 0.2, 0.1, 0.05], scheme)
for e, err, se in table.rows:
    print(f"  eps = {e:4.2f}: error = {err:.5f} +- {se:.5f}")
print(f"fitted slope: {table.fit.slope:.3f}  (2 - alpha = 0.5)")

print("\nsame sweep with Gaussian compensation (smooth payoff):")
scheme_g = lv.SimScheme(eps=0.4, tau=1.0, gaussian_compensation=True, paths=300_000, seed=17)
table_g = lv.weak_error_table(model, payoff, 0.0, 1.0, [0.4, 0.2, 0.1, 0.05], scheme_g)
for e, err, se in table_g.rows:
    print(f"  eps = {e:4.2f}: error = {err:.6f} +- {se:.6f}")
print(f"noise dominated: {table_g.noise_dominated}  "
      "(compensation removes the quadratic bias entirely for smooth payoffs)")

print("\nexact-stable marginal check (Chambers-Mallows-Stuck sampler):")
X = lv.terminal_samples(
    model, 0.0, 1.0,
    lv.SimScheme(eps=0.1, tau=1.0, gaussian_compensation=False, paths=200_000, seed=3),
    mode="exact-stable",
)
q25, q75 = np.quantile(X, [0.25, 0.75])
print(f"  sample median {np.median(X):.4f}, interquartile range {q75 - q25:.4f}")
