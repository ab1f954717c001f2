#pragma once

#include "kdqcm/collision.hpp"
#include "kdqcm/kdq_types.hpp"
#include "kdqcm/linalg.hpp"
#include "kdqcm/model.hpp"

namespace kdqcm {

/// Kirkwood-Dirac quasiprobabilities Tr[U^dag P_fin U P_in rho] for one
/// collision starting from rho_S (x) (ancilla part selected by the quantity).
///
/// Entries are ordered by initial index (major) then final index, each
/// ascending in the descending-eigenvalue indexing of eig_hermitian; for USA
/// the index pairs (s, a) are compared lexicographically.
///
/// W, Q, WS and QS need a resonant configuration and throw ModeMismatch
/// otherwise. In Exact mode they are flagged as an exact-mode extension, and
/// a validity warning is attached once the pulse area exceeds pi/6.
KdqDistribution kdq_distribution(Quantity quantity, const ComplexMatrix& rho_s,
                                 const CollisionModel& model, int collision_index = 1);
KdqDistribution kdq_distribution(Quantity quantity, const ComplexMatrix& rho_s,
                                 const ModelConfig& cfg);

/// Sum a USA distribution over the indices of the other subsystem, giving the
/// US (keep = S) or UA (keep = A) distribution.
KdqDistribution marginalize_usa(const KdqDistribution& d, const CollisionModel& model, Subsystem keep);

/// Merge USA entries that share (E_in, E_fin), i.e. use the degenerate
/// eigenspace projectors of H_S + H_A.
KdqDistribution group_by_energy(const KdqDistribution& d, double rel_tol = 1e-9);

MomentSet moments(const KdqDistribution& d);

/// Mean of the quantity from a single trace, without building the distribution.
std::complex<double> average_via_trace(Quantity quantity, const ComplexMatrix& rho_s,
                                       const CollisionModel& model);

/// Non-positivity functionals. Rejects W / WS, whose entries do not sum to 1.
NonPositivityReport nonpositivity(const KdqDistribution& d);

/// Real part of a mean that must be real; throws NumericFailure if the
/// imaginary part exceeds tol.
double real_part_checked(std::complex<double> z, double tol);

}  // namespace kdqcm
