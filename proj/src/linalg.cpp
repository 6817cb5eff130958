#include "everett/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

namespace everett {

namespace {

void require_finite(const cplx& z, const char* what) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    throw Error(std::string(what) + ": non-finite component");
  }
}

void require_same_shape(const ComplexMatrix& a, const ComplexMatrix& b, const char* op) {
  if (a.space() != b.space() || a.dim() != b.dim()) {
    throw DimensionMismatch(std::string(op) + ": operands are " + space_name(a.space()) +
                            "[" + std::to_string(a.dim()) + "] and " + space_name(b.space()) +
                            "[" + std::to_string(b.dim()) + "]");
  }
}

void require_same_shape(const ComplexVector& a, const ComplexVector& b, const char* op) {
  if (a.space() != b.space() || a.dim() != b.dim()) {
    throw DimensionMismatch(std::string(op) + ": operands are " + space_name(a.space()) +
                            "[" + std::to_string(a.dim()) + "] and " + space_name(b.space()) +
                            "[" + std::to_string(b.dim()) + "]");
  }
}

// Composite dimension N = M(M+1) determines M uniquely.
int system_dim_from_composite(int n, const char* op) {
  for (int m = 1; m * (m + 1) <= n; ++m) {
    if (m * (m + 1) == n) return m;
  }
  throw DimensionMismatch(std::string(op) + ": composite dimension " + std::to_string(n) +
                          " is not of the form M(M+1)");
}

double off_diagonal_norm(const ComplexMatrix& a) {
  double s = 0.0;
  for (int r = 0; r < a.dim(); ++r) {
    for (int c = 0; c < a.dim(); ++c) {
      if (r != c) s += std::norm(a.at(r, c));
    }
  }
  return std::sqrt(s);
}

}  // namespace

const char* space_name(Space s) {
  switch (s) {
    case Space::S: return "S";
    case Space::O: return "O";
    case Space::OS: return "OS";
  }
  return "?";
}

void Tolerances::validate() const {
  if (!(eq_tol > 0.0) || !(residual_tol > 0.0) || !(degeneracy_gap > 0.0)) {
    throw Error("tolerances: all thresholds must be strictly positive");
  }
  if (max_retries <= 0) throw Error("tolerances: max_retries must be positive");
  if (eq_tol > residual_tol) throw Error("tolerances: eq_tol must not exceed residual_tol");
}

std::uint64_t Rng::derive(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 0x632be59bd9b4e019ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

double Rng::gaussian() {
  const double u1 = (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

cplx Rng::complex_gaussian() {
  const double u1 = (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double th = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(th), r * std::sin(th)};
}

int Rng::uniform_int(int n) {
  if (n <= 0) throw Error("uniform_int: n must be positive");
  const std::uint64_t un = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / un * un;
  std::uint64_t v;
  do {
    v = eng_();
  } while (v >= limit);
  return static_cast<int>(v % un);
}

ComplexVector::ComplexVector(Space space, int dim) : space_(space) {
  if (dim <= 0) throw InvalidDimension("vector dimension must be positive");
  data_.assign(static_cast<std::size_t>(dim), cplx{});
}

ComplexVector::ComplexVector(Space space, std::vector<cplx> data)
    : space_(space), data_(std::move(data)) {
  if (data_.empty()) throw InvalidDimension("vector dimension must be positive");
  for (const cplx& z : data_) require_finite(z, "vector");
}

ComplexVector ComplexVector::unit(Space space, int dim, int index) {
  ComplexVector v(space, dim);
  if (index < 0 || index >= dim) throw DimensionMismatch("unit: index out of range");
  v[index] = 1.0;
  return v;
}

double ComplexVector::norm() const {
  double s = 0.0;
  for (const cplx& z : data_) s += std::norm(z);
  return std::sqrt(s);
}

bool ComplexVector::is_normalized(double tol) const { return std::abs(norm() - 1.0) <= tol; }

bool ComplexVector::operator==(const ComplexVector& other) const {
  return space_ == other.space_ && data_ == other.data_;
}

cplx inner(const ComplexVector& a, const ComplexVector& b) {
  require_same_shape(a, b, "inner");
  cplx s{};
  for (int i = 0; i < a.dim(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

ComplexVector operator+(const ComplexVector& a, const ComplexVector& b) {
  require_same_shape(a, b, "vector add");
  ComplexVector r(a.space(), a.dim());
  for (int i = 0; i < a.dim(); ++i) r[i] = a[i] + b[i];
  return r;
}

ComplexVector operator-(const ComplexVector& a, const ComplexVector& b) {
  require_same_shape(a, b, "vector subtract");
  ComplexVector r(a.space(), a.dim());
  for (int i = 0; i < a.dim(); ++i) r[i] = a[i] - b[i];
  return r;
}

ComplexVector operator*(const cplx& s, const ComplexVector& v) {
  ComplexVector r(v.space(), v.dim());
  for (int i = 0; i < v.dim(); ++i) r[i] = s * v[i];
  return r;
}

ComplexVector kron(const ComplexVector& o, const ComplexVector& s) {
  if (o.space() != Space::O || s.space() != Space::S) {
    throw DimensionMismatch("kron: factors must be tagged O and S");
  }
  const int m = s.dim();
  if (o.dim() != m + 1) {
    throw DimensionMismatch("kron: O factor must have dimension M+1 = " + std::to_string(m + 1) +
                            ", got " + std::to_string(o.dim()));
  }
  ComplexVector r(Space::OS, m * (m + 1));
  for (int io = 0; io <= m; ++io) {
    for (int is = 0; is < m; ++is) r[io * m + is] = o[io] * s[is];
  }
  return r;
}

ComplexMatrix::ComplexMatrix(Space space, int dim) : space_(space), dim_(dim) {
  if (dim <= 0) throw InvalidDimension("matrix dimension must be positive");
  entries_.assign(static_cast<std::size_t>(dim) * dim, cplx{});
}

ComplexMatrix::ComplexMatrix(Space space, int dim, std::vector<cplx> entries)
    : space_(space), dim_(dim), entries_(std::move(entries)) {
  if (dim <= 0) throw InvalidDimension("matrix dimension must be positive");
  if (entries_.size() != static_cast<std::size_t>(dim) * dim) {
    throw DimensionMismatch("matrix: entry count does not match dimension");
  }
  for (const cplx& z : entries_) require_finite(z, "matrix");
}

ComplexMatrix ComplexMatrix::identity(Space space, int dim) {
  ComplexMatrix a(space, dim);
  for (int i = 0; i < dim; ++i) a.at(i, i) = 1.0;
  return a;
}

ComplexMatrix ComplexMatrix::diagonal(Space space, const std::vector<cplx>& d) {
  ComplexMatrix a(space, static_cast<int>(d.size()));
  for (int i = 0; i < a.dim(); ++i) {
    require_finite(d[static_cast<std::size_t>(i)], "diagonal");
    a.at(i, i) = d[static_cast<std::size_t>(i)];
  }
  return a;
}

ComplexMatrix ComplexMatrix::outer(const ComplexVector& ket, const ComplexVector& bra) {
  require_same_shape(ket, bra, "outer");
  ComplexMatrix a(ket.space(), ket.dim());
  for (int r = 0; r < a.dim(); ++r) {
    for (int c = 0; c < a.dim(); ++c) a.at(r, c) = ket[r] * std::conj(bra[c]);
  }
  return a;
}

ComplexMatrix ComplexMatrix::adjoint() const {
  ComplexMatrix a(space_, dim_);
  for (int r = 0; r < dim_; ++r) {
    for (int c = 0; c < dim_; ++c) a.at(r, c) = std::conj(at(c, r));
  }
  return a;
}

ComplexVector ComplexMatrix::column(int j) const {
  ComplexVector v(space_, dim_);
  for (int r = 0; r < dim_; ++r) v[r] = at(r, j);
  return v;
}

double ComplexMatrix::frobenius_norm() const {
  double s = 0.0;
  for (const cplx& z : entries_) s += std::norm(z);
  return std::sqrt(s);
}

bool ComplexMatrix::is_hermitian(double tol) const {
  const double scale = std::max(1.0, frobenius_norm());
  double s = 0.0;
  for (int r = 0; r < dim_; ++r) {
    for (int c = 0; c <= r; ++c) {
      const cplx d = at(r, c) - std::conj(at(c, r));
      s += (r == c ? 1.0 : 2.0) * std::norm(d);
    }
  }
  return std::sqrt(s) <= tol * scale;
}

bool ComplexMatrix::is_unitary(double tol) const {
  const ComplexMatrix g = adjoint() * (*this);
  return frob_dist(g, identity(space_, dim_)) <= tol * std::max(1.0, frobenius_norm());
}

bool ComplexMatrix::is_projector(double tol) const {
  if (!is_hermitian(tol)) return false;
  return frob_dist((*this) * (*this), *this) <= tol * std::max(1.0, frobenius_norm());
}

bool ComplexMatrix::operator==(const ComplexMatrix& other) const {
  return space_ == other.space_ && dim_ == other.dim_ && entries_ == other.entries_;
}

ComplexMatrix operator+(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_same_shape(a, b, "matrix add");
  ComplexMatrix r(a.space(), a.dim());
  for (int i = 0; i < a.dim(); ++i) {
    for (int j = 0; j < a.dim(); ++j) r.at(i, j) = a.at(i, j) + b.at(i, j);
  }
  return r;
}

ComplexMatrix operator-(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_same_shape(a, b, "matrix subtract");
  ComplexMatrix r(a.space(), a.dim());
  for (int i = 0; i < a.dim(); ++i) {
    for (int j = 0; j < a.dim(); ++j) r.at(i, j) = a.at(i, j) - b.at(i, j);
  }
  return r;
}

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_same_shape(a, b, "matrix multiply");
  const int n = a.dim();
  ComplexMatrix r(a.space(), n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      const cplx aik = a.at(i, k);
      if (aik == cplx{}) continue;
      for (int j = 0; j < n; ++j) r.at(i, j) += aik * b.at(k, j);
    }
  }
  return r;
}

ComplexMatrix operator*(const cplx& s, const ComplexMatrix& a) {
  ComplexMatrix r(a.space(), a.dim());
  for (int i = 0; i < a.dim(); ++i) {
    for (int j = 0; j < a.dim(); ++j) r.at(i, j) = s * a.at(i, j);
  }
  return r;
}

ComplexVector operator*(const ComplexMatrix& a, const ComplexVector& v) {
  if (a.space() != v.space() || a.dim() != v.dim()) {
    throw DimensionMismatch("matrix-vector multiply: shape mismatch");
  }
  ComplexVector r(v.space(), v.dim());
  for (int i = 0; i < a.dim(); ++i) {
    cplx s{};
    for (int j = 0; j < a.dim(); ++j) s += a.at(i, j) * v[j];
    r[i] = s;
  }
  return r;
}

double frob_dist(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_same_shape(a, b, "frob_dist");
  double s = 0.0;
  for (int i = 0; i < a.dim(); ++i) {
    for (int j = 0; j < a.dim(); ++j) s += std::norm(a.at(i, j) - b.at(i, j));
  }
  return std::sqrt(s);
}

ComplexMatrix kron(const ComplexMatrix& o, const ComplexMatrix& s) {
  if (o.space() != Space::O || s.space() != Space::S) {
    throw DimensionMismatch("kron: factors must be tagged O and S");
  }
  const int m = s.dim();
  if (o.dim() != m + 1) {
    throw DimensionMismatch("kron: O factor must have dimension M+1 = " + std::to_string(m + 1) +
                            ", got " + std::to_string(o.dim()));
  }
  ComplexMatrix r(Space::OS, m * (m + 1));
  for (int ro = 0; ro <= m; ++ro) {
    for (int co = 0; co <= m; ++co) {
      const cplx f = o.at(ro, co);
      if (f == cplx{}) continue;
      for (int rs = 0; rs < m; ++rs) {
        for (int cs = 0; cs < m; ++cs) {
          r.at(ro * m + rs, co * m + cs) = f * s.at(rs, cs);
        }
      }
    }
  }
  return r;
}

Eigensystem hermitian_eig(const ComplexMatrix& h, double hermiticity_tol) {
  if (!h.is_hermitian(hermiticity_tol)) {
    throw NotHermitian("hermitian_eig: input is not Hermitian within tolerance");
  }
  const int n = h.dim();

  // Work on the Hermitian average so rounding asymmetry in the input cannot
  // leak into the iteration.
  ComplexMatrix a(h.space(), n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) a.at(r, c) = 0.5 * (h.at(r, c) + std::conj(h.at(c, r)));
  }
  ComplexMatrix v = ComplexMatrix::identity(h.space(), n);

  const double norm_ref = a.frobenius_norm();
  if (n > 1 && norm_ref > 0.0) {
    const double off_target = 3e-14 * norm_ref;
    const int max_sweeps = 64;
    bool converged = false;
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
      if (off_diagonal_norm(a) <= off_target) {
        converged = true;
        break;
      }
      for (int p = 0; p < n - 1; ++p) {
        for (int q = p + 1; q < n; ++q) {
          const cplx apq = a.at(p, q);
          const double mag = std::abs(apq);
          if (mag == 0.0) continue;
          const cplx phase = apq / mag;
          const double alpha = a.at(p, p).real();
          const double gamma = a.at(q, q).real();
          const double theta = (gamma - alpha) / (2.0 * mag);
          // Small-magnitude root of t^2 - 2*theta*t - 1 = 0 annihilates the
          // pivot; it keeps the rotation angle below pi/4.
          const double t =
              (theta == 0.0)
                  ? 1.0
                  : ((theta > 0.0 ? -1.0 : 1.0) /
                     (std::abs(theta) + std::sqrt(1.0 + theta * theta)));
          const double c = 1.0 / std::sqrt(1.0 + t * t);
          const double s = t * c;
          const cplx spc = s * std::conj(phase);  // J[q][p]
          const cplx cpc = c * std::conj(phase);  // J[q][q]

          // A <- J^dag A J, columns first, then rows.
          for (int k = 0; k < n; ++k) {
            const cplx akp = a.at(k, p);
            const cplx akq = a.at(k, q);
            a.at(k, p) = akp * c + akq * spc;
            a.at(k, q) = akq * cpc - akp * s;
          }
          for (int k = 0; k < n; ++k) {
            const cplx apk = a.at(p, k);
            const cplx aqk = a.at(q, k);
            a.at(p, k) = c * apk + (s * phase) * aqk;
            a.at(q, k) = (c * phase) * aqk - s * apk;
          }
          a.at(p, q) = 0.0;
          a.at(q, p) = 0.0;
          a.at(p, p) = a.at(p, p).real();
          a.at(q, q) = a.at(q, q).real();

          for (int k = 0; k < n; ++k) {
            const cplx vkp = v.at(k, p);
            const cplx vkq = v.at(k, q);
            v.at(k, p) = vkp * c + vkq * spc;
            v.at(k, q) = vkq * cpc - vkp * s;
          }
        }
      }
    }
    if (!converged && off_diagonal_norm(a) > off_target) {
      throw ConvergenceFailure("hermitian_eig: Jacobi sweeps did not converge");
    }
  }

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return a.at(i, i).real() < a.at(j, j).real(); });

  Eigensystem out{std::vector<double>(static_cast<std::size_t>(n)),
                  ComplexMatrix(h.space(), n)};
  for (int j = 0; j < n; ++j) {
    out.values[static_cast<std::size_t>(j)] = a.at(order[static_cast<std::size_t>(j)],
                                                   order[static_cast<std::size_t>(j)]).real();
    for (int r = 0; r < n; ++r) {
      out.vectors.at(r, j) = v.at(r, order[static_cast<std::size_t>(j)]);
    }
  }
  return out;
}

ComplexMatrix unitary_exp(const ComplexMatrix& h, double tau) {
  if (!std::isfinite(tau)) throw Error("unitary_exp: tau must be finite");
  const Eigensystem eig = hermitian_eig(h);
  const int n = h.dim();
  ComplexMatrix u(h.space(), n);
  // V diag(exp(-i lambda tau)) V^dag
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      cplx s{};
      for (int k = 0; k < n; ++k) {
        const cplx ph = std::polar(1.0, -eig.values[static_cast<std::size_t>(k)] * tau);
        s += eig.vectors.at(r, k) * ph * std::conj(eig.vectors.at(c, k));
      }
      u.at(r, c) = s;
    }
  }
  return u;
}

std::vector<std::vector<ComplexMatrix>> conditional_blocks(const ComplexMatrix& composite) {
  if (composite.space() != Space::OS) {
    throw DimensionMismatch("conditional_blocks: operator must be tagged OS");
  }
  const int m = system_dim_from_composite(composite.dim(), "conditional_blocks");
  std::vector<std::vector<ComplexMatrix>> blocks(
      static_cast<std::size_t>(m + 1),
      std::vector<ComplexMatrix>(static_cast<std::size_t>(m + 1), ComplexMatrix(Space::S, m)));
  for (int bo = 0; bo <= m; ++bo) {
    for (int bc = 0; bc <= m; ++bc) {
      ComplexMatrix& blk = blocks[static_cast<std::size_t>(bo)][static_cast<std::size_t>(bc)];
      for (int rs = 0; rs < m; ++rs) {
        for (int cs = 0; cs < m; ++cs) {
          blk.at(rs, cs) = composite.at(bo * m + rs, bc * m + cs);
        }
      }
    }
  }
  return blocks;
}

ComplexMatrix assemble_conditional_blocks(const std::vector<std::vector<ComplexMatrix>>& blocks) {
  if (blocks.empty() || blocks.size() < 2) {
    throw DimensionMismatch("assemble_conditional_blocks: need an (M+1) x (M+1) grid");
  }
  const int m = static_cast<int>(blocks.size()) - 1;
  ComplexMatrix composite(Space::OS, m * (m + 1));
  for (int bo = 0; bo <= m; ++bo) {
    if (static_cast<int>(blocks[static_cast<std::size_t>(bo)].size()) != m + 1) {
      throw DimensionMismatch("assemble_conditional_blocks: ragged grid");
    }
    for (int bc = 0; bc <= m; ++bc) {
      const ComplexMatrix& blk = blocks[static_cast<std::size_t>(bo)][static_cast<std::size_t>(bc)];
      if (blk.space() != Space::S || blk.dim() != m) {
        throw DimensionMismatch("assemble_conditional_blocks: block shape mismatch");
      }
      for (int rs = 0; rs < m; ++rs) {
        for (int cs = 0; cs < m; ++cs) {
          composite.at(bo * m + rs, bc * m + cs) = blk.at(rs, cs);
        }
      }
    }
  }
  return composite;
}

ComplexMatrix haar_random_unitary(int n, Rng& rng, Space space) {
  if (n < 1) throw InvalidDimension("haar_random_unitary: n must be at least 1");
  for (int attempt = 0; attempt < 8; ++attempt) {
    ComplexMatrix g(space, n);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) g.at(r, c) = rng.complex_gaussian();
    }
    // Modified Gram-Schmidt with one reorthogonalization pass. The positive
    // column norms play the role of the R diagonal, so no extra phase fix is
    // needed for Haar distribution.
    bool degenerate = false;
    for (int j = 0; j < n && !degenerate; ++j) {
      for (int pass = 0; pass < 2; ++pass) {
        for (int i = 0; i < j; ++i) {
          cplx proj{};
          for (int r = 0; r < n; ++r) proj += std::conj(g.at(r, i)) * g.at(r, j);
          for (int r = 0; r < n; ++r) g.at(r, j) -= proj * g.at(r, i);
        }
      }
      double nrm = 0.0;
      for (int r = 0; r < n; ++r) nrm += std::norm(g.at(r, j));
      nrm = std::sqrt(nrm);
      if (nrm < 1e-12) {
        degenerate = true;
        break;
      }
      for (int r = 0; r < n; ++r) g.at(r, j) = g.at(r, j) / nrm;
    }
    if (!degenerate) return g;
  }
  throw ConvergenceFailure("haar_random_unitary: repeated rank-deficient draws");
}

ComplexMatrix haar_random_unitary(int n, std::uint64_t seed, Space space) {
  Rng rng(seed);
  return haar_random_unitary(n, rng, space);
}

}  // namespace everett
