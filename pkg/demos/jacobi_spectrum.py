"""One-particle Jacobi operator: zero mode, gap, bound states and how the
bound-state count depends on the window used to discriminate them."""
import numpy as np

from xxzlab import jacobi
from xxzlab.kinkmath import make_params

p = make_params(1, 1.25, 0.5, (-200, 200))
rep = jacobi.spectral_report(p, k=8)
print(f"delta=1.25 r=0.5 half-width 200: gap {rep.gap:.8f}, continuum edge {rep.continuum_edge}")
print(f"  isolated states {rep.n_isolated}, lowest continuum eigenvalue "
      f"{jacobi.lowest_continuum_eigenvalue(rep):.6f}")

print("\nDirichlet truncation residual of the zero mode (decays like q^L):")
for L in (10, 20, 30, 40):
    print(f"  L={L:3d}  {jacobi.zero_mode_residual(make_params(1, 1.25, 0.5, (-L, L)), 'dirichlet'):.2e}")

print("\nbound-state count over 1/delta at r=0.5:")
for L in (20, 60, 200):
    cells = jacobi.phase_diagram(np.linspace(0.1, 0.9, 9), [0.5], (-L, L))
    print(f"  half-width {L:3d}: " + " ".join(str(c.n_isolated) for c in cells))
