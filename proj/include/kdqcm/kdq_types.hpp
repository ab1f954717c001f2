#pragma once

#include <complex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kdqcm {

/// Stochastic quantities with a Kirkwood-Dirac distribution.
///   US, UA, USA  internal-energy changes of S, A and the bare S+A energy
///   W, Q         coherent work / incoherent heat resolved on the ancilla (value -u_A)
///   WS, QS       the same resolved on the system (value u_S)
enum class Quantity { US, UA, USA, W, Q, WS, QS };

std::string_view to_string(Quantity q);
std::optional<Quantity> quantity_from_string(std::string_view name);

/// True for W and WS, whose quasiprobabilities sum to zero.
bool is_work_type(Quantity q);

/// Eigenvalue indices of the measured observables, -1 where unused.
struct TransitionLabel {
  Quantity quantity = Quantity::US;
  int s_in = -1;
  int a_in = -1;
  int s_fin = -1;
  int a_fin = -1;
};

struct KdqEntry {
  TransitionLabel label;
  double e_in = 0.0;   // energy of the initial eigenspace
  double e_fin = 0.0;  // energy of the final eigenspace
  double value = 0.0;  // stochastic instance
  std::complex<double> quasiprob;
};

struct KdqDistribution {
  Quantity quantity = Quantity::US;
  int collision_index = 1;
  /// USA only: entries merged over degenerate levels of H_S + H_A; the
  /// s_in / s_fin labels then index the distinct levels (descending).
  bool grouped = false;
  std::vector<KdqEntry> entries;
  std::vector<std::string> warnings;

  std::complex<double> total() const;
};

struct MomentSet {
  std::complex<double> mean;
  std::complex<double> second_moment;
  std::complex<double> variance;
};

struct NonPositivityReport {
  double n_q = 0.0;
  double n_re = 0.0;
  double n_im = 0.0;
};

}  // namespace kdqcm
