#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace htf {

// Symmetric positive definite band matrix in LAPACK-style lower storage:
// entry(r, j) holds A(j + r, j) for r in [0, bw]. Factorization is in place,
// so one buffer serves as matrix and Cholesky factor. The scalar type is a
// template parameter because the difference-operator Gram has condition
// number ~ D^(2m) and needs extended precision at large D.
template <class T>
class BandedMat {
  public:
    BandedMat(int dim, int bandwidth)
        : n_(dim), bw_(bandwidth), a_(static_cast<std::size_t>(dim) * (bandwidth + 1), T(0)) {}

    int dim() const { return n_; }
    int bandwidth() const { return bw_; }

    T& entry(int r, int j) { return a_[static_cast<std::size_t>(j) * (bw_ + 1) + r]; }
    T entry(int r, int j) const { return a_[static_cast<std::size_t>(j) * (bw_ + 1) + r]; }

    void set_zero() { std::fill(a_.begin(), a_.end(), T(0)); }

    // A(i, j) += v for i >= j, i - j <= bw
    void add(int i, int j, T v) { entry(i - j, j) += v; }

    void add_diagonal(const std::vector<T>& d) {
        for (int j = 0; j < n_; ++j) entry(0, j) += d[j];
    }

    // In-place LL^T. Returns false on a non-positive pivot.
    bool cholesky() {
        for (int j = 0; j < n_; ++j) {
            T diag = entry(0, j);
            const int kmin = std::max(0, j - bw_);
            for (int k = kmin; k < j; ++k) {
                const T ljk = entry(j - k, k);
                diag -= ljk * ljk;
            }
            if (!(diag > T(0))) return false;
            const T ljj = std::sqrt(diag);
            entry(0, j) = ljj;
            const int imax = std::min(n_ - 1, j + bw_);
            for (int i = j + 1; i <= imax; ++i) {
                T s = entry(i - j, j);
                const int klo = std::max(0, i - bw_);
                for (int k = std::max(kmin, klo); k < j; ++k) {
                    s -= entry(i - k, k) * entry(j - k, k);
                }
                entry(i - j, j) = s / ljj;
            }
        }
        return true;
    }

    // Solves A x = b given a completed cholesky(); b is overwritten with x.
    void solve(T* b) const {
        for (int i = 0; i < n_; ++i) {
            T s = b[i];
            const int klo = std::max(0, i - bw_);
            for (int k = klo; k < i; ++k) s -= entry(i - k, k) * b[k];
            b[i] = s / entry(0, i);
        }
        for (int i = n_ - 1; i >= 0; --i) {
            T s = b[i];
            const int kmax = std::min(n_ - 1, i + bw_);
            for (int k = i + 1; k <= kmax; ++k) s -= entry(k - i, i) * b[k];
            b[i] = s / entry(0, i);
        }
    }

    void solve(std::vector<T>& b) const { solve(b.data()); }

  private:
    int n_;
    int bw_;
    std::vector<T> a_;
};

using BandedSpd = BandedMat<double>;

} // namespace htf
