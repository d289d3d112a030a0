"""
Whitening correlated Gaussian increments
========================================

Stationary increments with long-range dependence have a covariance
matrix determined by a single index h in (0, 1).  This script builds
that matrix, factors it into a lower-triangular basis, and checks that
the factor maps independent coordinates onto the correlated ones.
"""

import numpy as np

from fgncontrol import fgn_covariance, whiten

# the covariance of increments at lag d is
#   0.5 * (|d+1|^(2h) + |d-1|^(2h) - 2|d|^(2h))
# positive lag-1 correlation for h > 1/2, negative for h < 1/2
for h in (0.3, 0.5, 0.7):
    cov = fgn_covariance(h, size=5)
    print(f"h = {h}: lag-1 correlation = {cov.sigma[0, 1]:+.6f}")

cov = fgn_covariance(0.7, size=5)
basis = whiten(cov)

# b is lower triangular with positive diagonal and satisfies b b^T = sigma
print("\nlower-triangular factor b:")
print(np.array_str(basis.b_mat, precision=4, suppress_small=True))
print("reconstruction error:", np.max(np.abs(basis.b_mat @ basis.b_mat.T - cov.sigma)))

# a = b^{-1} recovers the independent coordinates from the correlated ones
print("inversion error:", np.max(np.abs(basis.a_mat @ basis.b_mat - np.eye(cov.size))))

# c holds the strictly lower part of a: the weights that past correlated
# increments contribute when expressing the current independent one
print("c is strictly lower:", np.allclose(np.triu(basis.c_mat), 0.0))

# at h = 1/2 the increments are already independent and everything
# collapses to the identity
flat = whiten(fgn_covariance(0.5, size=5))
print("\nh = 1/2 factor is identity:", np.array_equal(flat.b_mat, np.eye(5)))
