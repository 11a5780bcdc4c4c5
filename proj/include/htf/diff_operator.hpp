#pragma once

#include <span>
#include <vector>

#include "htf/banded.hpp"

namespace htf {

enum class OperatorNorm { One, Inf, MaxAbs };

// Discrete difference operator of order m on D uniformly spaced points,
// i.e. the m-fold composition of the first-difference matrix. Rows carry the
// signed binomial pattern (+1, -1) for m = 1, (+1, -2, +1) for m = 2, and so
// on, with integer coefficients held exactly. Only the coefficient stencil is
// stored; products run in O(D * m).
class DiffOperator {
  public:
    DiffOperator(int order, int dim);

    int order() const { return m_; }
    int dim() const { return dim_; }
    int rows() const { return dim_ - m_; }
    // stencil coefficient c_j = (-1)^j * binom(m, j)
    const std::vector<double>& coefficients() const { return coeff_; }

    // y = Delta v, length rows()
    std::vector<double> apply(std::span<const double> v) const;
    void apply(std::span<const double> v, std::span<double> out) const;

    // w = Delta^T u, length dim()
    std::vector<double> apply_transpose(std::span<const double> u) const;
    void apply_transpose(std::span<const double> u, std::span<double> out) const;

    // adds c * Delta^T Delta into a band matrix of dimension dim()
    void add_gram_to(BandedSpd& h, double c) const;

    // adds Delta^T diag(w) Delta, one weight per operator row
    void add_weighted_gram_to(BandedSpd& h, std::span<const double> w) const;

    // Gram of the rows, Delta Delta^T: banded SPD of dimension rows().
    BandedSpd row_gram() const;

  private:
    int m_;
    int dim_;
    std::vector<double> coeff_;
};

DiffOperator make_diff_operator(int order, int dim);

struct PinvNorms {
    double one = 0.0;     // induced 1-norm: max absolute column sum
    double inf = 0.0;     // induced inf-norm: max absolute row sum
    double max_abs = 0.0; // largest absolute entry
};

// Norm summaries of the Moore-Penrose pseudo-inverse. The operator has full
// row rank, so pinv = Delta^T (Delta Delta^T)^{-1}; columns are streamed
// through one banded solve each and never materialized as a dense matrix.
PinvNorms pinv_norms(const DiffOperator& op);
double pinv_norm(const DiffOperator& op, OperatorNorm which);

} // namespace htf
