#include "kdqcm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kdqcm/error.hpp"

namespace kdqcm {

namespace {

void require_same_dim(const ComplexMatrix& a, const ComplexMatrix& b, const char* op) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::DimensionMismatch, std::string(op) + ": dimension mismatch (" +
                                                  std::to_string(a.dim()) + " vs " +
                                                  std::to_string(b.dim()) + ")");
  }
}

double scale_of(const ComplexMatrix& m) {
  return std::max(m.max_abs(), std::numeric_limits<double>::min());
}

Eigen::MatrixXcd hermitian_part(const ComplexMatrix& m) {
  return 0.5 * (m.mat() + m.mat().adjoint());
}

}  // namespace

ComplexMatrix::ComplexMatrix(std::size_t dim) {
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "ComplexMatrix: dimension must be >= 1");
  m_ = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
}

ComplexMatrix::ComplexMatrix(Eigen::MatrixXcd m) : m_(std::move(m)) {
  if (m_.rows() == 0 || m_.rows() != m_.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "ComplexMatrix: matrix must be square and non-empty");
  }
}

ComplexMatrix::ComplexMatrix(std::initializer_list<std::initializer_list<Complex>> rows)
    : ComplexMatrix(rows.size()) {
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    if (row.size() != rows.size()) {
      throw Error(ErrorCode::DimensionMismatch, "ComplexMatrix: ragged initializer");
    }
    Eigen::Index j = 0;
    for (const auto& v : row) m_(i, j++) = v;
    ++i;
  }
}

ComplexMatrix ComplexMatrix::identity(std::size_t dim) {
  ComplexMatrix out(dim);
  out.m_.setIdentity();
  return out;
}

ComplexMatrix ComplexMatrix::diagonal(const std::vector<double>& diag) {
  ComplexMatrix out(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) out(i, i) = diag[i];
  return out;
}

ComplexMatrix ComplexMatrix::adjoint() const { return ComplexMatrix(Eigen::MatrixXcd(m_.adjoint())); }

double ComplexMatrix::max_abs() const { return m_.cwiseAbs().maxCoeff(); }

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& o) {
  require_same_dim(*this, o, "operator+");
  m_ += o.m_;
  return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& o) {
  require_same_dim(*this, o, "operator-");
  m_ -= o.m_;
  return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(Complex s) {
  m_ *= s;
  return *this;
}

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_same_dim(a, b, "operator*");
  return ComplexMatrix(Eigen::MatrixXcd(a.m_ * b.m_));
}

bool is_hermitian(const ComplexMatrix& m, double tol) {
  const double dev = (m.mat() - m.mat().adjoint()).cwiseAbs().maxCoeff();
  return dev <= tol * scale_of(m);
}

bool is_unitary(const ComplexMatrix& m, double tol) {
  const auto n = m.mat().rows();
  const double dev = (m.mat().adjoint() * m.mat() - Eigen::MatrixXcd::Identity(n, n))
                         .cwiseAbs()
                         .maxCoeff();
  return dev <= tol;
}

double min_eigenvalue(const ComplexMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(hermitian_part(m),
                                                         Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

bool is_psd(const ComplexMatrix& m, double tol) {
  return is_hermitian(m, tol) && min_eigenvalue(m) >= -tol * std::max(1.0, m.max_abs());
}

bool trace_one(const ComplexMatrix& m, double tol) { return std::abs(m.trace() - 1.0) <= tol; }

bool is_density_matrix(const ComplexMatrix& m, double tol) {
  return is_hermitian(m, tol) && trace_one(m, tol) && is_psd(m, tol);
}

ComplexMatrix SpectralDecomposition::reconstruct() const {
  if (projectors.empty()) throw Error(ErrorCode::InvalidArgument, "empty spectral decomposition");
  ComplexMatrix out(projectors.front().dim());
  for (std::size_t k = 0; k < size(); ++k) out += eigenvalues[k] * projectors[k];
  return out;
}

ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b) {
  const auto da = a.mat().rows();
  const auto db = b.mat().rows();
  Eigen::MatrixXcd out(da * db, da * db);
  for (Eigen::Index i = 0; i < da; ++i)
    for (Eigen::Index j = 0; j < da; ++j) out.block(i * db, j * db, db, db) = a.mat()(i, j) * b.mat();
  return ComplexMatrix(std::move(out));
}

ComplexMatrix partial_trace(const ComplexMatrix& m, Subsystem keep, Dims dims) {
  if (dims.s == 0 || dims.a == 0 || m.dim() != dims.s * dims.a) {
    throw Error(ErrorCode::DimensionMismatch,
                "partial_trace: matrix of dimension " + std::to_string(m.dim()) +
                    " does not factor as " + std::to_string(dims.s) + "x" + std::to_string(dims.a));
  }
  const std::size_t ds = dims.s;
  const std::size_t da = dims.a;
  if (keep == Subsystem::S) {
    ComplexMatrix out(ds);
    for (std::size_t i = 0; i < ds; ++i)
      for (std::size_t j = 0; j < ds; ++j)
        for (std::size_t k = 0; k < da; ++k) out(i, j) += m(i * da + k, j * da + k);
    return out;
  }
  ComplexMatrix out(da);
  for (std::size_t i = 0; i < da; ++i)
    for (std::size_t j = 0; j < da; ++j)
      for (std::size_t k = 0; k < ds; ++k) out(i, j) += m(k * da + i, k * da + j);
  return out;
}

SpectralDecomposition eig_hermitian(const ComplexMatrix& m, double degeneracy_tol) {
  if (!is_hermitian(m, 1e-10)) {
    throw Error(ErrorCode::InvalidArgument, "eig_hermitian: input is not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(hermitian_part(m));
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::NumericFailure, "eig_hermitian: eigensolver did not converge");
  }
  const auto& vals = solver.eigenvalues();
  const auto& vecs = solver.eigenvectors();
  const Eigen::Index n = vals.size();

  const double range = vals(n - 1) - vals(0);
  const double scale = range > 0.0 ? range : std::max(std::abs(vals(0)), std::abs(vals(n - 1)));
  const double merge_below = degeneracy_tol * scale;

  SpectralDecomposition out;
  // Walk from the largest eigenvalue down so the output is descending.
  Eigen::Index i = n - 1;
  while (i >= 0) {
    Eigen::Index j = i;
    double sum = 0.0;
    Eigen::MatrixXcd proj = Eigen::MatrixXcd::Zero(n, n);
    while (j >= 0 && vals(i) - vals(j) <= merge_below) {
      proj += vecs.col(j) * vecs.col(j).adjoint();
      sum += vals(j);
      --j;
    }
    out.eigenvalues.push_back(sum / static_cast<double>(i - j));
    out.projectors.emplace_back(std::move(proj));
    i = j;
  }
  return out;
}

ComplexMatrix unitary_from_hamiltonian(const ComplexMatrix& h, double t, double hbar) {
  if (!is_hermitian(h, 1e-10)) {
    throw Error(ErrorCode::InvalidArgument, "unitary_from_hamiltonian: Hamiltonian is not Hermitian");
  }
  if (!(hbar > 0.0)) throw Error(ErrorCode::InvalidArgument, "unitary_from_hamiltonian: hbar must be > 0");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(hermitian_part(h));
  const auto& vals = solver.eigenvalues();
  const auto& vecs = solver.eigenvectors();
  Eigen::VectorXcd phases(vals.size());
  for (Eigen::Index k = 0; k < vals.size(); ++k) {
    phases(k) = std::exp(Complex(0.0, -vals(k) * t / hbar));
  }
  return ComplexMatrix(Eigen::MatrixXcd(vecs * phases.asDiagonal() * vecs.adjoint()));
}

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) { return a * b - b * a; }

double commutator_norm(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_same_dim(a, b, "commutator_norm");
  return commutator(a, b).frobenius_norm();
}

double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_same_dim(a, b, "trace_distance");
  const ComplexMatrix diff = a - b;
  if (!is_hermitian(a) || !is_hermitian(b)) {
    throw Error(ErrorCode::InvalidArgument, "trace_distance: arguments must be Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(hermitian_part(diff), Eigen::EigenvaluesOnly);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

namespace pauli {

ComplexMatrix identity() { return ComplexMatrix::identity(2); }
ComplexMatrix x() { return {{0.0, 1.0}, {1.0, 0.0}}; }
ComplexMatrix y() { return {{0.0, Complex(0.0, -1.0)}, {Complex(0.0, 1.0), 0.0}}; }
ComplexMatrix z() { return {{1.0, 0.0}, {0.0, -1.0}}; }
ComplexMatrix plus() { return {{0.0, 1.0}, {0.0, 0.0}}; }
ComplexMatrix minus() { return {{0.0, 0.0}, {1.0, 0.0}}; }

}  // namespace pauli

}  // namespace kdqcm
