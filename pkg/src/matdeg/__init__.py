"""Approximate degrees, tridiagonal witness matrices and oracle-model estimators
for entries of functions of sparse Hermitian matrices."""

from .approxdeg import BestApprox, DualWeights, approx_degree, best_approx, dual_weights, val
from .estimators import (EstimateReport, PolySpec, contour_estimate, contour_parameters,
                         dense_entry, exact_entry, poly_norm_l1_scaled, poly_norm_l2_scaled,
                         walk_estimate)
from .funcspace import (ChebPoly, ParityParts, TargetFunction, cheb_fit, eval_function,
                        eval_poly, parity_split, parse_function)
from .hardness import (clock_hamiltonian, forrelation_identity_check, forrelation_instance,
                       forrelation_unitaries, parity_graph)
from .sparsemat import (OracleAccess, QueryCounter, SparseHermitian, column_l1, embed_tridiag,
                        entry_oracle, max_abs, position_oracle)
from .tridiag import (EigenDecomp, SymSpectrum, TridiagMatrix, eigen, entry_1n_closed,
                      entry_2n1_closed, entry_f, inverse_entry, reconstruct)
from .witness import (WitnessCertificate, build_even_witness, build_odd_witness,
                      certify_lower_bound, nff_matrix, periodic_witness_points)

__version__ = "0.1.0"
