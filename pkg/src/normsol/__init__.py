"""Mass-constrained variational solver for nonlinear scalar field equations.

Computes and certifies normalized solutions of -Delta u = f(u) - mu*u with
prescribed L^2 mass in block-radial antisymmetric symmetry classes, and maps
the ground-energy curve m -> E_m (threshold mass, monotonicity, subadditivity,
Pohozaev certification).
"""

__version__ = "0.1.0"
