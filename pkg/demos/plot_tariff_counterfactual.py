"""
What does a tariff do to prices and welfare?
============================================

A proportional tariff shifts the supply curve. With the elasticities in hand,
the price change, the consumer-surplus loss and the tariff revenue follow from
short polynomials in the tariff rate.
"""
###############################################################################
# The pass-through ``c`` is the share of the tariff borne by consumers.

import numpy as np

from wrightiv import TariffScenario, apply_tariff, optimal_tariff, pass_through
from wrightiv.counterfactual import quadratic_stationary_point

for a1, b1 in ((-1.0, 1.0), (-3.0, 27.0), (0.0, 1.0), (-2.0, 0.0)):
    print(f"alpha1={a1:5.1f} beta1={b1:5.1f}  c = {pass_through(a1, b1):.3f}")

###############################################################################
# A 20% tariff with unit elasticities: prices rise by 10%, quantity falls by
# 10%, and revenue slightly outweighs the consumer loss.

out = apply_tariff(TariffScenario(tau=0.2, alpha1=-1.0, beta1=1.0))
for name in ("delta_p", "delta_y", "cs_change_ratio", "revenue_ratio", "welfare_sum"):
    print(f"{name:>16} {getattr(out, name): .4f}")

###############################################################################
# When supply is much more elastic than demand the quadratic truncation of the
# welfare sum has an interior maximum. The grid search lands next to it.

grid = np.round(np.arange(0, 5001) * 1e-4, 12)
curve = optimal_tariff(-3.0, 27.0, grid, revenue_terms="quadratic")
tau_hat, _ = quadratic_stationary_point(-3.0, 27.0)
print(f"grid argmax {curve.argmax_tau:.4f}, calculus {tau_hat:.4f}, "
      f"welfare gain {curve.argmax_value:.5f}")

###############################################################################
# With unit elasticities the same truncation is convex, so the welfare sum
# keeps growing across the grid and there is no interior optimum to report.

curve = optimal_tariff(-1.0, 1.0, grid)
print(f"argmax {curve.argmax_tau}, interior stationary point: {curve.stationary_tau}")
print(curve.to_csv().splitlines()[0])
