"""Numerical verification lab for the geometry of Kahler fibrations.

Modules: symplin (symplectic linear algebra), kns (bounded-domain charts),
wedge (exterior powers), higgs (flat degree-k bundles), wpcurv (canonical
metric and curvature bounds), fibration (relative Kahler models on torus
fibers), geodesics (matrix and convex geodesics, Legendre duality),
projbundle (projectivized-bundle forms), cli (verification harness).
"""

__version__ = "0.1.0"
