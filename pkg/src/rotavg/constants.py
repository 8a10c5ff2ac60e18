"""Numerical tolerances shared across the package."""

#: Bound on ||R^T R - I||_F for a matrix to count as a rotation.
ORTHO_TOL = 1e-9
#: Bound on |det(R) - 1| for a matrix to count as a rotation.
DET_TOL = 1e-9
#: Slack for exact algebraic identities evaluated in double precision.
IDENTITY_TOL = 1e-12
#: Looser rotation check applied to blocks parsed from text files.
FILE_TOL = 1e-6
#: Absolute accuracy promised for smallest-eigenvalue computations.
EIG_TOL = 1e-8
#: Above this block count, smallest eigenvalues come from an iterative solver.
DENSE_EIG_MAX_N = 500
#: Added to the SUM shift so that mu*I + R_tilde stays PSD despite eigensolver error.
MU_MARGIN = 1e-6
