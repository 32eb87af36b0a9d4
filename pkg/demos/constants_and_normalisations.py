"""
Ladder and trace constants for a few orders, and the two normalisations of
the trace constants side by side.

Run with ``python demos/constants_and_normalisations.py``.
"""
from gjms_lab.constants import GammaParams, ladder_constants, trace_constants
from gjms_lab.constants import trace_constants_alternates

for n, g in [(3, 0.75), (5, 2.3), (8, 3.5)]:
    p = GammaParams(n, g)
    print(f"n = {n}, gamma = {g}  (floor {p.floor_g}, k = {p.k})")
    for j in range(p.floor_g + 1):
        b, b_sh, pi, c, d = ladder_constants(p, j)
        sigma, varsigma = trace_constants(p, j)
        alt = trace_constants_alternates(p, j)
        print(f"  j={j}  b={b: .6g}  b_sh={b_sh: .6g}  pi={pi: .6g}")
        print(f"        sigma={sigma: .6g}  sigma_pi={alt['sigma_pi']: .6g}  "
              f"ratio={alt['sigma_pi'] / sigma:.6g}")

# the printed Gamma forms are the product forms over 4^floor(gamma)
p = GammaParams(8, 3.5)
print("4^floor(gamma) =", 4 ** p.floor_g)
