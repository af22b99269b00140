"""Transformation kernel K(x, y) by successive approximation.

For q - p = c constant the kernel has the closed form
c x I_1(z) / z with z = sqrt(c (x^2 - y^2)); the Picard solve reproduces it
at second order. If p = q on [0, x0] the kernel vanishes on the triangle
below x0, which is the mechanism behind one-endpoint uniqueness.
"""

import numpy as np
from scipy.special import i1

from tfdlab import CoefficientField, make_uniform_grid, solve_kernel
from tfdlab.goursat import kernel_pde_residual

c = 2.0
print("closed-form check, q - p = 2:")
for n in (50, 100, 200, 400):
    g = make_uniform_grid(1.0, n)
    K = solve_kernel(CoefficientField.constant(0.0, g), CoefficientField.constant(c, g, "q"))
    X, Y = np.meshgrid(g.nodes, g.nodes, indexing="ij")
    z = np.sqrt(np.maximum(c * (X**2 - Y**2), 0))
    ref = np.where(z > 0, c * X * i1(z) / np.where(z > 0, z, 1), c * X / 2)
    err = np.abs(K.lower() - ref)[Y <= X].max()
    print(f"  N={n:4d}  sweeps={K.iterations:2d}  max error {err:.2e}  PDE residual {kernel_pde_residual(K):.2e}")

g = make_uniform_grid(1.0, 200)
p = CoefficientField.from_function(lambda x: 1 + x, g, "p")
q = CoefficientField.from_function(lambda x: 1 + x + 10 * np.maximum(x - 0.5, 0) ** 2, g, "q")
K = solve_kernel(p, q)
print("\np = q on [0, 0.5]:")
print(f"  max|K| below x = 0.5: {K.sup_on_subtriangle(g.index_of(0.5)):.1e}")
print(f"  max|K| overall:       {np.abs(K.lower()).max():.3f}")
# the column y = 0 stays zero up to min(2 * 0.5, ell), here the whole interval
print(f"  max|K(x, 0)| on [0, 1]: {np.abs(K.boundary_column).max():.1e}")
