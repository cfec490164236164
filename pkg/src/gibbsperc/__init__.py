"""Boolean ell-percolation of Gibbs point processes.

Submodules: ``potential`` (pair potentials), ``bounds`` (explicit region
boundaries), ``sampler`` (grand-canonical MCMC), ``percolation`` (clusters and
crossing estimates), ``contour2d`` (planar contour geometry), ``branching``
(dominating Galton-Watson process) and ``cli``.
"""
__version__ = "0.1.0"
