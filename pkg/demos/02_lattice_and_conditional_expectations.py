"""
Quadrature lattice and conditional expectations
===============================================

Conditional expectations on the lattice are exact finite sums, so the
tower property and moment identities hold to rounding error rather than
Monte Carlo error.  This script walks through the basic operations and
then confirms the lattice distribution against sampled paths.
"""

import numpy as np

from fgncontrol import (
    condexp,
    expectation,
    fgn_covariance,
    lattice_for_hurst,
    noise_value,
    sample_paths,
    white_value,
)

lat = lattice_for_hurst(0.7, depth=3, order=3)
print("nodes per level:", [lat.level_size(n) for n in range(4)])

# eta_0, eta_1, ... are the independent coordinates; xi_0, xi_1, ... the
# correlated increments rebuilt from them through the whitening basis
eta0 = white_value(lat, 0)
xi1 = noise_value(lat, 1)

# moments come out as exact quadrature sums
print("E[eta_0]     =", expectation(eta0))
print("E[eta_0^2]   =", expectation(eta0 * eta0))
print("E[xi_1^2]    =", expectation(xi1 * xi1))
print("E[xi_0 xi_1] =", expectation(noise_value(lat, 0) * xi1),
      " target", fgn_covariance(0.7, 2).sigma[0, 1])

# condexp projects a deep value onto an earlier level; the tower
# property composes projections exactly
deep = xi1 * xi1 * eta0
once = condexp(deep, 0)
twice = condexp(condexp(deep, 1), 0)
print("tower property gap:", np.max(np.abs(once.values - twice.values)))

# conditioning on everything up to the value's own level changes nothing
same = condexp(xi1, xi1.level)
print("projection onto own level is identity:",
      np.array_equal(same.values, xi1.values))

# sampled paths follow the same law: compare the sample covariance of
# the correlated increments with the model covariance
paths = sample_paths(lat.basis, horizon=3, count=200_000, seed=11)
sample_cov = paths.xi.T @ paths.xi / paths.xi.shape[0]
target = fgn_covariance(0.7, 3).sigma
print("max sample covariance error:", np.max(np.abs(sample_cov - target)))
