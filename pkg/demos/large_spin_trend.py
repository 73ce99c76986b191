"""Sector gap over J against the Jacobi gap on a six-site window, together
with the strong-convergence residual of one boson at the kink centre."""
from xxzlab import harness
from xxzlab.kinkmath import make_params

rows = harness.conjecture_trend([1, 2, 3, 4, 5], 1.25, 0.5, (-2, 3))
print(" 2J    M    gap/J      gamma~     |diff|")
for r in rows:
    print(f"{r.two_j:3d} {r.M:4g}  {r.gap_over_j:.6f}  {r.gamma_tilde:.6f}  {r.difference:.4f}")

ps = [make_params(tj, 1.25, 0.5, (-6, 7)) for tj in (4, 8, 16, 32)]
res = harness.strong_convergence_residual(ps, {0: 1})
print("\n 2J  residual  bound")
for r in res:
    print(f"{r.two_j:3d}  {r.residual:.4f}   {r.bound:.4f}")
print(f"fitted exponent {harness.fit_power([r.two_j for r in res], [r.residual for r in res]):.3f}")
