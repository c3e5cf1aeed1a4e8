"""Balanced random walks in time-dependent random environments.

Subpackages and modules:

``env``        jump ranges, probability vectors, seeded environment generators
``geometry``   convex-hull volumes, polar bodies, ellipticity functionals
``walk``       quenched walk simulation, n-step kernels, CLT statistics
``invariant``  periodized space-time chain and its stationary measure
``parabolic``  discrete parabolic operator, Dirichlet solver, ABP checks
``ctime``      continuous-time walks, slowed process, zero-range environments
``cli``        batch experiment runner (``rwre`` command)
"""

__version__ = "0.1.0"
