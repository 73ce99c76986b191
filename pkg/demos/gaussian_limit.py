"""Characteristic functions of fluctuation operators in the kink state.

For tangent fields the error to exp(-omega(F^2)/2) falls by about 4 when
2J is quadrupled; the variant exp(-omega(F^2)) does not converge."""
import numpy as np

from xxzlab import coherent
from xxzlab.kinkmath import make_params

rng = np.random.default_rng(2003)
base = make_params(1, 1.25, 0.5, (0, 1))
field = coherent.random_tangent_field(base, rng)
print(" 2J   exact          limit     err(limit)  err(variant)")
for tj in (2, 8, 32, 128):
    res = coherent.characteristic_function(base.replace(two_j=tj), field)
    print(f"{tj:3d}  {res.exact.real:+.6f}{res.exact.imag:+.1e}j  {res.gaussian_limit:.6f}  "
          f"{abs(res.exact - res.gaussian_limit):.2e}    {abs(res.exact - res.gaussian_stated):.2e}")
