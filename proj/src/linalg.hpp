#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace npp::detail {

/// Banded matrix in column-major band storage: entry (i,j) with
/// |i-j| <= band lives at a_[j*ld + band + i - j], so walking i at fixed j
/// is contiguous. Factorization is LU without pivoting, which is stable
/// here because every system we assemble is an M-matrix with strictly
/// dominant column diagonals; fill stays inside the band.
class BandedMatrix {
public:
  BandedMatrix(int n, int band)
      : n_(n), band_(band), ld_(2 * band + 1), a_((size_t)ld_ * n, 0.0) {}

  int size() const { return n_; }
  int band() const { return band_; }

  double& at(int i, int j) { return a_[(size_t)j * ld_ + band_ + i - j]; }
  double get(int i, int j) const { return a_[(size_t)j * ld_ + band_ + i - j]; }

  void add(int i, int j, double v) { at(i, j) += v; }

  void factor() {
    for (int k = 0; k < n_; ++k) {
      double* col_k = &a_[(size_t)k * ld_ + band_];  // col_k[i-k] = a(i,k)
      const double piv = col_k[0];
      if (piv == 0.0 || !std::isfinite(piv))
        throw std::runtime_error("banded LU: zero or non-finite pivot");
      const int rows = std::min(band_, n_ - 1 - k);
      const double inv = 1.0 / piv;
      for (int r = 1; r <= rows; ++r) col_k[r] *= inv;
      const int cols = std::min(band_, n_ - 1 - k);
      for (int c = 1; c <= cols; ++c) {
        const int j = k + c;
        const double ukj = a_[(size_t)j * ld_ + band_ + k - j];
        if (ukj == 0.0) continue;
        double* col_j = &a_[(size_t)j * ld_ + band_ + k - j];  // col_j[i-k] = a(i,j)
        for (int r = 1; r <= rows; ++r) col_j[r] -= col_k[r] * ukj;
      }
    }
    factored_ = true;
  }

  void solve(std::vector<double>& x) const {
    if (!factored_) throw std::logic_error("banded LU: solve before factor");
    for (int j = 0; j < n_; ++j) {
      const double xj = x[j];
      if (xj == 0.0) continue;
      const int rows = std::min(band_, n_ - 1 - j);
      const double* col_j = &a_[(size_t)j * ld_ + band_];
      for (int r = 1; r <= rows; ++r) x[j + r] -= col_j[r] * xj;
    }
    for (int j = n_ - 1; j >= 0; --j) {
      double s = x[j];
      const int j1 = std::min(n_ - 1, j + band_);
      for (int c = j + 1; c <= j1; ++c) s -= get(j, c) * x[c];
      x[j] = s / get(j, j);
    }
  }

private:
  int n_;
  int band_;
  int ld_;
  std::vector<double> a_;
  bool factored_ = false;
};

/// Dense LU with partial pivoting; used only by the oracle-side solvers.
class DenseMatrix {
public:
  explicit DenseMatrix(int n) : n_(n), a_((size_t)n * n, 0.0), perm_(n) {}

  int size() const { return n_; }
  double& at(int i, int j) { return a_[(size_t)i * n_ + j]; }
  double get(int i, int j) const { return a_[(size_t)i * n_ + j]; }

  void factor() {
    for (int i = 0; i < n_; ++i) perm_[i] = i;
    for (int k = 0; k < n_; ++k) {
      int p = k;
      double best = std::abs(get(k, k));
      for (int i = k + 1; i < n_; ++i) {
        const double v = std::abs(get(i, k));
        if (v > best) { best = v; p = i; }
      }
      if (best == 0.0 || !std::isfinite(best))
        throw std::runtime_error("dense LU: singular matrix");
      if (p != k) {
        for (int j = 0; j < n_; ++j) std::swap(at(k, j), at(p, j));
        std::swap(perm_[k], perm_[p]);
      }
      const double piv = get(k, k);
      for (int i = k + 1; i < n_; ++i) {
        double& lik = at(i, k);
        lik /= piv;
        const double l = lik;
        if (l == 0.0) continue;
        for (int j = k + 1; j < n_; ++j) at(i, j) -= l * get(k, j);
      }
    }
    factored_ = true;
  }

  std::vector<double> solve(const std::vector<double>& b) const {
    if (!factored_) throw std::logic_error("dense LU: solve before factor");
    std::vector<double> x(n_);
    for (int i = 0; i < n_; ++i) x[i] = b[perm_[i]];
    for (int i = 0; i < n_; ++i) {
      double s = x[i];
      for (int j = 0; j < i; ++j) s -= get(i, j) * x[j];
      x[i] = s;
    }
    for (int i = n_ - 1; i >= 0; --i) {
      double s = x[i];
      for (int j = i + 1; j < n_; ++j) s -= get(i, j) * x[j];
      x[i] = s / get(i, i);
    }
    return x;
  }

private:
  int n_;
  std::vector<double> a_;
  std::vector<int> perm_;
  bool factored_ = false;
};

}  // namespace npp::detail
