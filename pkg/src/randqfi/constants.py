"""Numerical tolerances shared across the package.

All values assume double precision and matrix dimensions up to 2**12.
"""

#: Max |rho_ij - conj(rho_ji)| for a density matrix.
HERMITIAN_ATOL = 1e-12
#: |Tr rho - 1|.
TRACE_ATOL = 1e-10
#: Smallest eigenvalue allowed for a positive semidefinite matrix.
PSD_ATOL = 1e-10
#: Squared-norm tolerance for pure states.
NORM_ATOL = 1e-12
#: Max |(U^dag U - I)_ij| for a unitary.
UNITARY_ATOL = 1e-10
#: Hermiticity tolerance accepted by the eigensolver.
EIG_HERMITIAN_ATOL = 1e-9
#: Pairs with p + p' below this are dropped from the QFI spectral sum.
QFI_EIGEN_CUTOFF = 1e-12
#: Eigenvalues below this are dropped when a state is propagated as vectors.
RANK_CUTOFF = 1e-14
#: Probability vectors must sum to one within this (exact Born mode).
PROBABILITY_ATOL = 1e-9
#: Largest supported register.
MAX_QUBITS = 12
