#pragma once

// Dense complex linear algebra over small tagged Hilbert spaces: tensor
// products, Hermitian eigendecomposition, unitary exponentials, apparatus-
// indexed blocks, and seeded random ensembles. Everything is plain
// double-precision dense storage; dimensions here never exceed a few hundred.

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "everett/errors.hpp"

namespace everett {

using cplx = std::complex<double>;

// Which Hilbert space a value lives on: the measured system (S), the
// apparatus (O), or their tensor product (OS). For a model of dimension M
// these carry dimensions M, M+1 and M(M+1).
enum class Space { S, O, OS };

const char* space_name(Space s);

struct Tolerances {
  double eq_tol = 1e-10;         // equality of states and operators
  double residual_tol = 1e-8;    // relative reconstruction residuals
  double degeneracy_gap = 1e-6;  // minimum spacing between distinct eigenvalues
  int max_retries = 8;           // redraws of randomized mixtures

  // Throws Error unless all entries are positive and eq_tol <= residual_tol.
  void validate() const;
};

// Deterministic random source. All randomness in the library flows through an
// explicit Rng so every sweep is reproducible from its seed alone; the
// gaussian variates are produced by an explicit Box-Muller transform on raw
// 53-bit draws, independent of any library distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Mixes (seed, stream) into an independent child seed.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return eng_(); }
  double uniform();         // [0, 1)
  double gaussian();        // N(0, 1)
  cplx complex_gaussian();  // independent N(0, 1) real and imaginary parts
  int uniform_int(int n);   // {0, ..., n-1}, rejection sampled

 private:
  std::mt19937_64 eng_;
};

class ComplexVector {
 public:
  ComplexVector(Space space, int dim);
  // Throws Error if any component is non-finite.
  ComplexVector(Space space, std::vector<cplx> data);

  static ComplexVector unit(Space space, int dim, int index);

  Space space() const { return space_; }
  int dim() const { return static_cast<int>(data_.size()); }
  cplx& operator[](int i) { return data_[static_cast<std::size_t>(i)]; }
  const cplx& operator[](int i) const { return data_[static_cast<std::size_t>(i)]; }
  const std::vector<cplx>& data() const { return data_; }

  double norm() const;
  bool is_normalized(double tol) const;

  bool operator==(const ComplexVector& other) const;

 private:
  Space space_;
  std::vector<cplx> data_;
};

// <a|b>, conjugate-linear in the first argument.
cplx inner(const ComplexVector& a, const ComplexVector& b);

ComplexVector operator+(const ComplexVector& a, const ComplexVector& b);
ComplexVector operator-(const ComplexVector& a, const ComplexVector& b);
ComplexVector operator*(const cplx& s, const ComplexVector& v);

// Composite ket |o> (x) |s> under the O-major index convention k = o*M + s.
// Requires an O-tagged factor of dimension M+1 and an S-tagged one of
// dimension M.
ComplexVector kron(const ComplexVector& o, const ComplexVector& s);

class ComplexMatrix {
 public:
  ComplexMatrix(Space space, int dim);
  // Row-major entries; throws Error on non-finite values or size mismatch.
  ComplexMatrix(Space space, int dim, std::vector<cplx> entries);

  static ComplexMatrix identity(Space space, int dim);
  static ComplexMatrix diagonal(Space space, const std::vector<cplx>& d);
  // |ket><bra|; both vectors must share space and dimension.
  static ComplexMatrix outer(const ComplexVector& ket, const ComplexVector& bra);

  Space space() const { return space_; }
  int dim() const { return dim_; }
  cplx& at(int r, int c) { return entries_[static_cast<std::size_t>(r) * dim_ + c]; }
  const cplx& at(int r, int c) const {
    return entries_[static_cast<std::size_t>(r) * dim_ + c];
  }
  const std::vector<cplx>& entries() const { return entries_; }

  ComplexMatrix adjoint() const;
  ComplexVector column(int j) const;
  double frobenius_norm() const;

  // Tolerances are scaled by max(1, Frobenius norm) so the predicates behave
  // sensibly for both unit-scale and rescaled operators.
  bool is_hermitian(double tol) const;
  bool is_unitary(double tol) const;
  bool is_projector(double tol) const;

  bool operator==(const ComplexMatrix& other) const;

 private:
  Space space_;
  int dim_;
  std::vector<cplx> entries_;
};

ComplexMatrix operator+(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix operator-(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix operator*(const cplx& s, const ComplexMatrix& a);
ComplexVector operator*(const ComplexMatrix& a, const ComplexVector& v);

// Frobenius distance; requires matching space and dimension.
double frob_dist(const ComplexMatrix& a, const ComplexMatrix& b);

// Tensor product of an O-space operator (dim M+1) with an S-space operator
// (dim M) under the composite convention k = o*M + s, so that
// kron(A, B)[(o,s), (o',s')] = A[o,o'] * B[s,s'].
ComplexMatrix kron(const ComplexMatrix& o, const ComplexMatrix& s);

struct Eigensystem {
  std::vector<double> values;  // ascending, ties kept in index order
  ComplexMatrix vectors;       // unitary; column j pairs with values[j]
};

// Cyclic Jacobi eigendecomposition of a Hermitian matrix. Deterministic:
// fixed pivot order, no pivot thresholding beyond exact zeros.
Eigensystem hermitian_eig(const ComplexMatrix& h, double hermiticity_tol = 1e-10);

// exp(-i h tau) through the eigendecomposition of h; the result is unitary up
// to eigensolver error. tau must be finite.
ComplexMatrix unitary_exp(const ComplexMatrix& h, double tau);

// Slices a composite operator into its (M+1) x (M+1) grid of S-space blocks,
// C[m][n][s,s'] = B[(m,s), (n,s')]. Entries are copied bit-for-bit.
std::vector<std::vector<ComplexMatrix>> conditional_blocks(const ComplexMatrix& composite);

// Inverse of conditional_blocks.
ComplexMatrix assemble_conditional_blocks(const std::vector<std::vector<ComplexMatrix>>& blocks);

// Haar-distributed random unitary: complex standard-normal Ginibre draw
// followed by modified Gram-Schmidt, whose positive diagonal normalization
// fixes the phase ambiguity. Deterministic for a fixed seed.
ComplexMatrix haar_random_unitary(int n, Rng& rng, Space space = Space::S);
ComplexMatrix haar_random_unitary(int n, std::uint64_t seed, Space space = Space::S);

}  // namespace everett
