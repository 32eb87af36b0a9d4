"""
Scattering eigenvalues on the geodesic ball against the Gamma-ratio symbol,
then the extension identities for random boundary data.
"""
import numpy as np

from gjms_lab.boundary import ModelGeometry
from gjms_lab.constants import GammaParams, spectral_constants
from gjms_lab.energy import BoundaryData, extension_residual
from gjms_lab.extension import gjms_multiplier, scattering_eigenvalue

n, g = 5, 2.3
p = GammaParams(n, g)
c = spectral_constants(p)[0]

print(" l   c_gamma S        symbol        ratio")
for l in range(6):
    geom = ModelGeometry("ball_geodesic", n, l)
    cS = c * scattering_eigenvalue(geom, n / 2 + g)
    m = gjms_multiplier(geom, g)
    print(f"{l:2d}  {cS: .8e}  {m: .8e}  {cS / m:.12f}")
print("2^-gamma =", 2.0 ** -g)

rng = np.random.default_rng(7)
worst = 0.0
for l in range(6):
    r = extension_residual(ModelGeometry("ball_geodesic", n, l), p, BoundaryData.random(p, rng))
    worst = max(worst, r.max())
print(f"worst extension residual for l <= 5: {worst:.2e}")
