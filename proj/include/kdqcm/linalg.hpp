#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include <Eigen/Dense>

namespace kdqcm {

using Complex = std::complex<double>;

/// Dense square complex matrix. Carries states, Hamiltonians, projectors and
/// unitaries; dimensions here are 2 or 4 in practice.
class ComplexMatrix {
 public:
  ComplexMatrix() : ComplexMatrix(1) {}
  explicit ComplexMatrix(std::size_t dim);
  explicit ComplexMatrix(Eigen::MatrixXcd m);
  ComplexMatrix(std::initializer_list<std::initializer_list<Complex>> rows);

  static ComplexMatrix identity(std::size_t dim);
  static ComplexMatrix diagonal(const std::vector<double>& diag);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }

  Complex operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  Complex& operator()(std::size_t i, std::size_t j) { return m_(i, j); }

  const Eigen::MatrixXcd& mat() const noexcept { return m_; }

  ComplexMatrix adjoint() const;
  Complex trace() const { return m_.trace(); }
  double frobenius_norm() const { return m_.norm(); }
  double max_abs() const;

  ComplexMatrix& operator+=(const ComplexMatrix& o);
  ComplexMatrix& operator-=(const ComplexMatrix& o);
  ComplexMatrix& operator*=(Complex s);

  friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
  friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
  friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);
  friend ComplexMatrix operator*(ComplexMatrix a, Complex s) { return a *= s; }
  friend ComplexMatrix operator*(Complex s, ComplexMatrix a) { return a *= s; }
  friend ComplexMatrix operator*(ComplexMatrix a, double s) { return a *= Complex(s, 0.0); }
  friend ComplexMatrix operator*(double s, ComplexMatrix a) { return a *= Complex(s, 0.0); }
  friend ComplexMatrix operator-(const ComplexMatrix& a) { return a * -1.0; }

  friend bool operator==(const ComplexMatrix& a, const ComplexMatrix& b) {
    return a.m_.rows() == b.m_.rows() && a.m_ == b.m_;
  }

 private:
  Eigen::MatrixXcd m_;
};

// Predicates. Tolerances are relative to the matrix scale where that matters,
// so SI-unit Hamiltonians and unit-trace states are judged alike.
bool is_hermitian(const ComplexMatrix& m, double tol = 1e-10);
bool is_unitary(const ComplexMatrix& m, double tol = 1e-10);
bool is_psd(const ComplexMatrix& m, double tol = 1e-10);
bool trace_one(const ComplexMatrix& m, double tol = 1e-10);
bool is_density_matrix(const ComplexMatrix& m, double tol = 1e-10);

/// Smallest eigenvalue of the Hermitian part of m.
double min_eigenvalue(const ComplexMatrix& m);

inline constexpr double kDefaultDegeneracyTol = 1e-9;

struct SpectralDecomposition {
  std::vector<double> eigenvalues;          // descending
  std::vector<ComplexMatrix> projectors;    // one per distinct eigenvalue

  std::size_t size() const noexcept { return eigenvalues.size(); }
  ComplexMatrix reconstruct() const;
};

enum class Subsystem { S, A };

struct Dims {
  std::size_t s = 2;
  std::size_t a = 2;
};

ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix partial_trace(const ComplexMatrix& m, Subsystem keep, Dims dims = {});

/// Grouped spectral decomposition of a Hermitian matrix. Eigenvalues closer
/// than degeneracy_tol times the spectral range share one projector.
SpectralDecomposition eig_hermitian(const ComplexMatrix& m,
                                    double degeneracy_tol = kDefaultDegeneracyTol);

/// exp(-i h t / hbar) through the eigenbasis of h.
ComplexMatrix unitary_from_hamiltonian(const ComplexMatrix& h, double t, double hbar = 1.0);

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b);
double commutator_norm(const ComplexMatrix& a, const ComplexMatrix& b);

/// Half the trace norm of a - b.
double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b);

namespace pauli {
ComplexMatrix identity();
ComplexMatrix x();
ComplexMatrix y();
ComplexMatrix z();
ComplexMatrix plus();   // |0><1|
ComplexMatrix minus();  // |1><0|
}  // namespace pauli

}  // namespace kdqcm
