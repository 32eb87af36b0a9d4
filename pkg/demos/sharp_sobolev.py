"""
Sharp fractional Sobolev ratio for zonal functions on the sphere: the
conformal bubbles sit at ratio one, everything else above it.
"""
import numpy as np

from gjms_lab.sobolev import ZonalFunction, beckner_ratio, extremal_zonal

n, g = 3, 0.75
for t in (0.0, 0.3, 0.6, 0.9):
    print(f"bubble t={t:.1f}: ratio {beckner_ratio(extremal_zonal(n, g, t), g):.12f}")

rng = np.random.default_rng(1)
ratios = [beckner_ratio(ZonalFunction(n, rng.standard_normal(6) / (1 + np.arange(6))), g)
          for _ in range(10)]
print("random zonal data: min ratio %.6f, max %.6f" % (min(ratios), max(ratios)))
