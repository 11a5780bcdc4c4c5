#include "htf/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "htf/errors.hpp"

namespace htf {

double poisson_nll(std::span<const double> theta, std::span<const long> counts) {
    if (theta.size() != counts.size()) throw std::invalid_argument("poisson_nll: length mismatch");
    double s = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) {
        s += std::exp(theta[j]) - static_cast<double>(counts[j]) * theta[j];
    }
    return s;
}

double penalty_value(const PenaltySpec& pen, const DiffOperator& op, std::span<const double> theta) {
    const auto d = op.apply(theta);
    double s = 0.0;
    if (pen.norm == PenaltyNorm::L1) {
        for (double v : d) s += std::fabs(v);
    } else {
        for (double v : d) s += v * v;
    }
    return pen.tau * s;
}

double objective(const Histogram& hist, const PenaltySpec& pen, std::span<const double> theta) {
    if (static_cast<int>(theta.size()) != hist.bins())
        throw std::invalid_argument("objective: theta length does not match histogram");
    const DiffOperator op(pen.order(), hist.bins());
    return poisson_nll(theta, hist.counts) + penalty_value(pen, op, theta);
}

int count_active_diffs(const DiffOperator& op, std::span<const double> theta) {
    const auto d = op.apply(theta);
    double dmax = 0.0;
    for (double v : d) dmax = std::max(dmax, std::fabs(v));
    const double tol = 1e-6 * std::max(1.0, dmax);
    int c = 0;
    for (double v : d) {
        if (std::fabs(v) > tol) ++c;
    }
    return c;
}

namespace {

struct Bounds {
    bool enabled = false;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
};

Bounds resolve_bounds(const BoxSpec& box, const Histogram& hist) {
    Bounds b;
    if (!box.enabled) return b;
    if (!(box.b > 0.0 && box.b < 0.5))
        throw std::invalid_argument("box exponent b must lie in (0, 1/2)");
    const double center =
        box.center ? *box.center : std::log(static_cast<double>(hist.n) * hist.delta);
    const double half = std::pow(static_cast<double>(hist.n), box.b);
    b.enabled = true;
    b.lo = center - half;
    b.hi = center + half;
    return b;
}

void clip_to(std::vector<double>& theta, const Bounds& b) {
    if (!b.enabled) return;
    for (double& t : theta) t = std::clamp(t, b.lo, b.hi);
}

// Smooth subproblem shared by every solver route:
//   phi(theta) = sum(exp(theta) - q theta) + linear^T theta
//              + (1/2) sum_i w_i ((B theta)_i - v_i)^2
// where B is a difference operator, or the identity when qop is null.
struct SmoothSpec {
    const std::vector<double>& q;
    const DiffOperator* qop = nullptr;            // nullptr = identity
    const std::vector<double>* weights = nullptr; // per-row; nullptr = no quadratic
    const std::vector<double>* v = nullptr;       // nullptr = 0
    const std::vector<double>* linear = nullptr;  // nullptr = 0

    int quad_rows(int n) const {
        if (!weights) return 0;
        return qop ? qop->rows() : n;
    }
};

double smooth_value(const SmoothSpec& sp, const std::vector<double>& theta,
                    std::vector<double>& dwork) {
    double s = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) {
        s += std::exp(theta[j]) - sp.q[j] * theta[j];
        if (sp.linear) s += (*sp.linear)[j] * theta[j];
    }
    if (sp.weights) {
        const std::vector<double>* bt = &theta;
        if (sp.qop) {
            sp.qop->apply(theta, dwork);
            bt = &dwork;
        }
        double qq = 0.0;
        for (std::size_t i = 0; i < sp.weights->size(); ++i) {
            const double r = (*bt)[i] - (sp.v ? (*sp.v)[i] : 0.0);
            qq += (*sp.weights)[i] * r * r;
        }
        s += 0.5 * qq;
    }
    return s;
}

void smooth_gradient(const SmoothSpec& sp, const std::vector<double>& theta,
                     std::vector<double>& grad, std::vector<double>& dwork,
                     std::vector<double>& twork) {
    const std::size_t n = theta.size();
    for (std::size_t j = 0; j < n; ++j) {
        grad[j] = std::exp(theta[j]) - sp.q[j];
        if (sp.linear) grad[j] += (*sp.linear)[j];
    }
    if (sp.weights) {
        if (sp.qop) {
            sp.qop->apply(theta, dwork);
            for (std::size_t i = 0; i < dwork.size(); ++i) {
                dwork[i] = (*sp.weights)[i] * (dwork[i] - (sp.v ? (*sp.v)[i] : 0.0));
            }
            sp.qop->apply_transpose(dwork, twork);
            for (std::size_t j = 0; j < n; ++j) grad[j] += twork[j];
        } else {
            for (std::size_t j = 0; j < n; ++j) {
                grad[j] += (*sp.weights)[j] * (theta[j] - (sp.v ? (*sp.v)[j] : 0.0));
            }
        }
    }
}

double projected_residual(const std::vector<double>& theta, const std::vector<double>& grad,
                          const Bounds& b) {
    double r = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) {
        double rj;
        if (b.enabled && theta[j] <= b.lo + 1e-12 * (1.0 + std::fabs(b.lo))) {
            rj = std::max(0.0, -grad[j]);
        } else if (b.enabled && theta[j] >= b.hi - 1e-12 * (1.0 + std::fabs(b.hi))) {
            rj = std::max(0.0, grad[j]);
        } else {
            rj = std::fabs(grad[j]);
        }
        r = std::max(r, rj);
    }
    return r;
}

// Damped (projected) Newton on the smooth subproblem. The Hessian
// diag(exp(theta)) + B^T W B stays banded on any free subset because removing
// rows and columns cannot widen a band. Returns the projected gradient
// residual at exit.
double newton_minimize(const SmoothSpec& sp, const Bounds& bounds, std::vector<double>& theta,
                       double tol, int max_iter, int* iters_out) {
    const int n = static_cast<int>(theta.size());
    const int bw = sp.weights && sp.qop ? sp.qop->order() : 0;
    std::vector<double> grad(n), dwork(sp.quad_rows(n)), twork(n), step(n), trial(n);
    std::vector<int> free_idx(n);

    BandedSpd gram(n, bw);
    if (sp.weights) {
        if (sp.qop) {
            sp.qop->add_weighted_gram_to(gram, *sp.weights);
        } else {
            gram.add_diagonal(*sp.weights);
        }
    }

    const auto assemble = [&](int nfree, double ridge) {
        BandedSpd h(nfree, std::min(bw, std::max(nfree - 1, 0)));
        for (int a = 0; a < nfree; ++a) {
            const int i = free_idx[a];
            h.add(a, a, std::exp(theta[i]) + gram.entry(0, i) + ridge);
            for (int db = 1; db <= std::min(bw, nfree - 1 - a); ++db) {
                const int j = free_idx[a + db];
                if (j - i <= bw) h.add(a + db, a, gram.entry(j - i, i));
            }
        }
        return h;
    };

    double phi = smooth_value(sp, theta, dwork);
    double res = std::numeric_limits<double>::infinity();
    int it = 0;
    for (; it < max_iter; ++it) {
        smooth_gradient(sp, theta, grad, dwork, twork);
        res = projected_residual(theta, grad, bounds);
        if (res <= tol) break;

        int nfree = 0;
        if (bounds.enabled) {
            for (int j = 0; j < n; ++j) {
                const bool at_lo = theta[j] <= bounds.lo + 1e-12 * (1.0 + std::fabs(bounds.lo));
                const bool at_hi = theta[j] >= bounds.hi - 1e-12 * (1.0 + std::fabs(bounds.hi));
                if ((at_lo && grad[j] > 0.0) || (at_hi && grad[j] < 0.0)) continue;
                free_idx[nfree++] = j;
            }
        } else {
            for (int j = 0; j < n; ++j) free_idx[nfree++] = j;
        }
        if (nfree == 0) break; // every coordinate pinned with inward gradient

        // tiny ridge retry: the Gram is singular on polynomials and
        // exp(theta) underflows on empty bins
        double ridge = 0.0;
        BandedSpd h = assemble(nfree, ridge);
        while (!h.cholesky()) {
            ridge = (ridge == 0.0) ? 1e-12 : ridge * 100.0;
            if (ridge > 1e-2) {
                if (iters_out) *iters_out += it;
                return res;
            }
            h = assemble(nfree, ridge);
        }

        std::vector<double> d(nfree);
        for (int a = 0; a < nfree; ++a) d[a] = -grad[free_idx[a]];
        h.solve(d);
        std::fill(step.begin(), step.end(), 0.0);
        for (int a = 0; a < nfree; ++a) step[free_idx[a]] = d[a];

        double alpha = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (int j = 0; j < n; ++j) {
                double t = theta[j] + alpha * step[j];
                if (bounds.enabled) t = std::clamp(t, bounds.lo, bounds.hi);
                trial[j] = t;
            }
            const double phi_try = smooth_value(sp, trial, dwork);
            double gdot = 0.0;
            for (int j = 0; j < n; ++j) gdot += grad[j] * (trial[j] - theta[j]);
            if (std::isfinite(phi_try) && phi_try <= phi + 1e-4 * gdot) {
                theta = trial;
                phi = phi_try;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) break; // stalled at numerical precision
    }
    if (iters_out) *iters_out += it;
    smooth_gradient(sp, theta, grad, dwork, twork);
    return projected_residual(theta, grad, bounds);
}

// Shift by the constant that restores sum(exp(theta)) = n exactly; constants
// are in the null space of Delta so the penalty is unchanged and the loss can
// only improve. Clipped to keep box feasibility.
void recenter(std::vector<double>& theta, double n, const Bounds& b) {
    double s = 0.0;
    for (double t : theta) s += std::exp(t);
    if (!(s > 0.0) || !std::isfinite(s)) return;
    double c = std::log(n / s);
    if (b.enabled) {
        double clo = -std::numeric_limits<double>::infinity();
        double chi = std::numeric_limits<double>::infinity();
        for (double t : theta) {
            clo = std::max(clo, b.lo - t);
            chi = std::min(chi, b.hi - t);
        }
        c = std::clamp(c, clo, chi);
    }
    if (c != 0.0) {
        for (double& t : theta) t += c;
    }
}

// Stationarity certificate for the L1 problem. Signs are fixed where a
// difference is active; the remaining subgradient entries solve the box
// least-squares problem
//   min_{|s_i| <= 1} | W (g0 + tau Delta_free^T s) |^2
// exactly by projected Newton on a banded normal-matrix, warm-started from
// the supplied hint. W drops coordinates pinned at a box face whose gradient
// already points the allowed way. Any feasible s gives a valid upper bound;
// solving the LS makes the bound tight at an optimum.
double kkt_residual_l1(const std::vector<double>& q, const DiffOperator& op, double tau,
                       const std::vector<double>& theta, const Bounds& bounds,
                       const std::vector<double>& s_hint, std::vector<double>* s_out = nullptr) {
    const int n = static_cast<int>(theta.size());
    const int r = op.rows();
    const int m = op.order();
    const auto& coeff = op.coefficients();

    std::vector<double> d(r);
    op.apply(theta, d);
    double dmax = 0.0;
    for (double v : d) dmax = std::max(dmax, std::fabs(v));
    const double act_tol = 1e-6 * std::max(1.0, dmax);

    std::vector<double> s(r);
    std::vector<bool> fixed(r);
    std::vector<int> free_rows;
    for (int i = 0; i < r; ++i) {
        if (std::fabs(d[i]) > act_tol) {
            s[i] = d[i] > 0.0 ? 1.0 : -1.0;
            fixed[i] = true;
        } else {
            s[i] = std::clamp(s_hint[i], -1.0, 1.0);
            fixed[i] = false;
            free_rows.push_back(i);
        }
    }

    const auto gradient_at = [&](const std::vector<double>& sv, std::vector<double>& g) {
        op.apply_transpose(sv, g);
        for (int j = 0; j < n; ++j) g[j] = std::exp(theta[j]) - q[j] + tau * g[j];
    };
    const auto pinned_state = [&](int j, double gj) {
        // 0 interior / counted; 1 pinned with the gradient on the allowed side
        if (!bounds.enabled) return 0;
        if (theta[j] <= bounds.lo + 1e-12 * (1.0 + std::fabs(bounds.lo))) return gj >= 0.0 ? 1 : 0;
        if (theta[j] >= bounds.hi - 1e-12 * (1.0 + std::fabs(bounds.hi))) return gj <= 0.0 ? 1 : 0;
        return 0;
    };

    std::vector<double> g(n);
    const int rf = static_cast<int>(free_rows.size());
    if (rf > 0 && tau > 0.0) {
        std::vector<double> w(n, 1.0);
        std::vector<double> grad_s(rf), step(rf), strial(s), res(n);
        for (int round = 0; round < 3; ++round) {
            // drop coordinates whose bound multiplier absorbs the gradient
            gradient_at(s, g);
            for (int j = 0; j < n; ++j) w[j] = pinned_state(j, g[j]) ? 0.0 : 1.0;

            // projected Newton on the box LS in the free s entries
            for (int it = 0; it < 40; ++it) {
                gradient_at(s, res);
                double q_val = 0.0;
                for (int j = 0; j < n; ++j) q_val += 0.5 * w[j] * res[j] * res[j];
                for (int a = 0; a < rf; ++a) {
                    const int i = free_rows[a];
                    double gi = 0.0;
                    for (int t = 0; t <= m; ++t) gi += coeff[t] * w[i + t] * res[i + t];
                    grad_s[a] = tau * gi;
                }
                double pres = 0.0;
                int nact = 0;
                std::vector<int> act(rf, 0);
                for (int a = 0; a < rf; ++a) {
                    const int i = free_rows[a];
                    const bool at_lo = s[i] <= -1.0 + 1e-14;
                    const bool at_hi = s[i] >= 1.0 - 1e-14;
                    double ra = std::fabs(grad_s[a]);
                    if (at_lo) ra = std::max(0.0, -grad_s[a]);
                    if (at_hi) ra = std::max(0.0, grad_s[a]);
                    pres = std::max(pres, ra);
                    if ((at_lo && grad_s[a] > 0.0) || (at_hi && grad_s[a] < 0.0)) {
                        act[a] = 1;
                        ++nact;
                    }
                }
                if (pres <= 1e-10 * tau * (1.0 + dmax) || nact == rf) break;

                std::vector<int> frees;
                frees.reserve(rf - nact);
                for (int a = 0; a < rf; ++a) {
                    if (!act[a]) frees.push_back(a);
                }
                const int nf = static_cast<int>(frees.size());
                BandedSpd h(nf, std::min(m, std::max(nf - 1, 0)));
                for (int aa = 0; aa < nf; ++aa) {
                    const int ia = free_rows[frees[aa]];
                    for (int bb = aa; bb <= std::min(nf - 1, aa + m); ++bb) {
                        const int ib = free_rows[frees[bb]];
                        if (ib - ia > m) continue;
                        double hv = 0.0;
                        for (int t = std::max(ia, ib); t <= std::min(ia + m, ib + m); ++t) {
                            hv += w[t] * coeff[t - ia] * coeff[t - ib];
                        }
                        if (aa == bb) hv += 1e-12;
                        if (hv != 0.0 || aa == bb) h.add(bb, aa, tau * tau * hv);
                    }
                }
                if (!h.cholesky()) break;
                std::vector<double> dir(nf);
                for (int aa = 0; aa < nf; ++aa) dir[aa] = -grad_s[frees[aa]];
                h.solve(dir.data());

                double alpha = 1.0;
                bool moved = false;
                for (int ls = 0; ls < 40; ++ls) {
                    strial = s;
                    for (int aa = 0; aa < nf; ++aa) {
                        const int i = free_rows[frees[aa]];
                        strial[i] = std::clamp(s[i] + alpha * dir[aa], -1.0, 1.0);
                    }
                    gradient_at(strial, res);
                    double q_try = 0.0;
                    for (int j = 0; j < n; ++j) q_try += 0.5 * w[j] * res[j] * res[j];
                    if (q_try <= q_val - 1e-14 * (1.0 + std::fabs(q_val))) {
                        s = strial;
                        moved = true;
                        break;
                    }
                    alpha *= 0.5;
                }
                if (!moved) break;
            }
        }
    }

    gradient_at(s, g);
    if (s_out) *s_out = s;
    return projected_residual(theta, g, bounds);
}

// Exact prox of c * TV via the dual box QP
//   min_w (1/2)|y - D^T w|^2  s.t.  |w_i| <= c,     z = y - D^T w,
// with D the first-difference operator. Solved by warm-started projected
// Newton; the Hessian D D^T is a constant tridiagonal. The returned w is the
// prox dual, i.e. c * (a subgradient of TV at z).
class TvProx {
  public:
    explicit TvProx(int len)
        : len_(len), r_(len - 1), grad_(r_), d_(r_), wtrial_(r_), ztrial_(len), free_idx_(r_) {}

    void solve(const std::vector<double>& y, double c, std::vector<double>& w,
               std::vector<double>& z) {
        // gradient of the dual: D (D^T w - y)
        const auto eval_grad = [&](const std::vector<double>& ww, std::vector<double>& zz,
                                   std::vector<double>& gg) {
            apply_dt(ww, y, zz); // zz = y - D^T w
            for (int i = 0; i < r_; ++i) gg[i] = -(zz[i] - zz[i + 1]); // (D zz)_i with sign flip
        };
        // dual objective value (up to a constant): (1/2)|y - D^T w|^2
        const auto eval_val = [&](const std::vector<double>& zz) {
            double s = 0.0;
            for (double v : zz) s += v * v;
            return 0.5 * s;
        };

        for (double& x : w) x = std::clamp(x, -c, c);
        eval_grad(w, z, grad_);
        double val = eval_val(z);
        double yscale = 0.0;
        for (double v : y) yscale = std::max(yscale, std::fabs(v));
        const double tol = 1e-11 * (1.0 + c + yscale);
        for (int it = 0; it < 50; ++it) {
            // projected-gradient residual and free set
            double res = 0.0;
            int nfree = 0;
            for (int i = 0; i < r_; ++i) {
                const bool at_lo = w[i] <= -c + 1e-14 * (1.0 + c);
                const bool at_hi = w[i] >= c - 1e-14 * (1.0 + c);
                double ri;
                if (at_lo) {
                    ri = std::max(0.0, -grad_[i]);
                } else if (at_hi) {
                    ri = std::max(0.0, grad_[i]);
                } else {
                    ri = std::fabs(grad_[i]);
                }
                res = std::max(res, ri);
                if (!((at_lo && grad_[i] > 0.0) || (at_hi && grad_[i] < 0.0))) {
                    free_idx_[nfree++] = i;
                }
            }
            if (res <= tol || nfree == 0) break;

            BandedSpd h(nfree, std::min(1, nfree - 1));
            for (int a = 0; a < nfree; ++a) {
                h.add(a, a, 2.0);
                if (a + 1 < nfree && free_idx_[a + 1] == free_idx_[a] + 1) h.add(a + 1, a, -1.0);
            }
            h.cholesky();
            for (int a = 0; a < nfree; ++a) d_[a] = -grad_[free_idx_[a]];
            h.solve(d_.data());

            double alpha = 1.0;
            bool moved = false;
            for (int ls = 0; ls < 30; ++ls) {
                wtrial_ = w;
                for (int a = 0; a < nfree; ++a) {
                    wtrial_[free_idx_[a]] =
                        std::clamp(wtrial_[free_idx_[a]] + alpha * d_[a], -c, c);
                }
                apply_dt(wtrial_, y, ztrial_);
                const double vt = eval_val(ztrial_);
                if (vt <= val + 1e-12 * (1.0 + std::fabs(val))) {
                    moved = vt < val - 1e-15 * (1.0 + std::fabs(val));
                    w = wtrial_;
                    z = ztrial_;
                    val = vt;
                    break;
                }
                alpha *= 0.5;
            }
            if (!moved) break; // at the numerical floor
            eval_grad(w, z, grad_);
        }
        apply_dt(w, y, z);
    }

  private:
    // z = y - D^T w, with (D^T w)_j = w_j - w_{j-1} at the interior
    void apply_dt(const std::vector<double>& w, const std::vector<double>& y,
                  std::vector<double>& z) {
        z[0] = y[0] - w[0];
        for (int j = 1; j < r_; ++j) z[j] = y[j] - (w[j] - w[j - 1]);
        z[len_ - 1] = y[len_ - 1] + w[r_ - 1];
    }

    int len_;
    int r_;
    std::vector<double> grad_, d_, wtrial_, ztrial_;
    std::vector<int> free_idx_;
};

// Exact solve on a candidate active set: differences off the support are
// pressed to zero by a stiff quadratic, supported ones enter as the linear
// term tau * sigma^T Delta theta. Accepted only if the result certifies
// stationarity of the full problem.
bool polish_one(const std::vector<double>& q, const DiffOperator& op, double tau,
                const std::vector<double>& sigma, const Bounds& bounds, double inner_tol,
                double tol_eff, std::vector<double>& theta, double& kkt,
                std::vector<double>& s_accept) {
    const int r = op.rows();
    const double gamma = std::min(1e7 * std::max(tau, 1.0), 1e12);
    std::vector<double> w(r);
    for (int i = 0; i < r; ++i) w[i] = (sigma[i] != 0.0) ? 0.0 : gamma;
    std::vector<double> linear(theta.size());
    op.apply_transpose(sigma, linear);
    for (double& x : linear) x *= tau;

    std::vector<double> trial = theta;
    const SmoothSpec sp{q, &op, &w, nullptr, &linear};
    newton_minimize(sp, bounds, trial, inner_tol, 40, nullptr);

    std::vector<double> d(r), hint(r);
    op.apply(trial, d);
    for (int i = 0; i < r; ++i) hint[i] = (sigma[i] != 0.0) ? sigma[i] : gamma * d[i] / tau;
    const double kkt_try = kkt_residual_l1(q, op, tau, trial, bounds, hint, &s_accept);
    if (kkt_try <= tol_eff) {
        theta = std::move(trial);
        kkt = kkt_try;
        return true;
    }
    return false;
}

// Candidate supports, sharpest first: coordinates where the prox dual sits on
// the unit bound (the dual identifies actives long before the primal tail
// collapses), then large entries of Delta theta.
bool polish_active_set(const std::vector<double>& q, const DiffOperator& op, double tau,
                       const std::vector<double>& s_hint, const Bounds& bounds, double inner_tol,
                       double tol_eff, std::vector<double>& theta, double& kkt,
                       std::vector<double>& s_accept) {
    const int r = op.rows();
    std::vector<double> d(r);
    op.apply(theta, d);
    double dmax = 0.0;
    for (double v : d) dmax = std::max(dmax, std::fabs(v));

    std::vector<std::vector<double>> tried;
    std::vector<double> sigma(r);
    const auto attempt = [&](const std::vector<double>& sig) {
        for (const auto& prev : tried) {
            if (prev == sig) return false;
        }
        tried.push_back(sig);
        return polish_one(q, op, tau, sig, bounds, inner_tol, tol_eff, theta, kkt, s_accept);
    };

    for (double eps : {1e-9, 1e-6, 1e-3}) {
        for (int i = 0; i < r; ++i) {
            sigma[i] = std::fabs(s_hint[i]) >= 1.0 - eps ? (s_hint[i] > 0.0 ? 1.0 : -1.0) : 0.0;
        }
        if (attempt(sigma)) return true;
    }
    for (double rel : {1e-1, 1e-2, 1e-3}) {
        const double thr = rel * dmax;
        for (int i = 0; i < r; ++i) {
            sigma[i] = std::fabs(d[i]) > thr ? (d[i] > 0.0 ? 1.0 : -1.0) : 0.0;
        }
        if (attempt(sigma)) return true;
    }
    return false;
}

// recover the penalty subgradient from the prox dual: s = (rho/tau) * w
void dual_to_subgradient(const std::vector<double>& w, double scale, std::vector<double>& s) {
    for (std::size_t i = 0; i < w.size(); ++i) s[i] = scale * w[i];
}

} // namespace

FitResult fit(const Histogram& hist, const PenaltySpec& pen, const BoxSpec& box,
              const SolverOptions& opts) {
    const int n_bins = hist.bins();
    if (pen.k < 0) throw std::invalid_argument("fit: k must be >= 0");
    if (pen.tau < 0.0) throw std::invalid_argument("fit: tau must be >= 0");
    if (pen.order() >= n_bins)
        throw std::invalid_argument("fit: difference order k+1 must be below the bin count");
    if (opts.max_iters < 1) throw std::invalid_argument("fit: max_iters must be >= 1");
    if (!(opts.tol > 0.0)) throw std::invalid_argument("fit: tol must be > 0");

    const double n = static_cast<double>(hist.n);
    std::vector<double> q(n_bins);
    bool any_zero = false;
    for (int j = 0; j < n_bins; ++j) {
        q[j] = static_cast<double>(hist.counts[j]);
        if (hist.counts[j] == 0) any_zero = true;
    }
    if (pen.tau == 0.0 && any_zero && !box.enabled) {
        throw unbounded_problem_error(
            "tau = 0 with an empty bin and no box constraint: the MLE diverges");
    }

    const DiffOperator op(pen.order(), n_bins);
    const Bounds bounds = resolve_bounds(box, hist);
    const double tol_eff = opts.tol * std::max(1.0, n / n_bins);
    const double inner_tol =
        opts.newton_inner_tol > 0.0 ? opts.newton_inner_tol : std::max(1e-3 * tol_eff, 1e-13);

    std::vector<double> theta;
    if (!opts.theta_init.empty()) {
        if (static_cast<int>(opts.theta_init.size()) != n_bins)
            throw std::invalid_argument("fit: warm start length does not match histogram");
        theta = opts.theta_init;
    } else {
        theta.resize(n_bins);
        for (int j = 0; j < n_bins; ++j) theta[j] = std::log(q[j] + 0.5);
    }
    clip_to(theta, bounds);

    FitResult out;
    out.tau = pen.tau;
    int iters = 0;

    if (pen.norm == PenaltyNorm::L2Squared || pen.tau == 0.0) {
        const int r = op.rows();
        std::vector<double> w;
        if (pen.tau > 0.0) w.assign(r, 2.0 * pen.tau);
        const SmoothSpec sp{q, &op, pen.tau > 0.0 ? &w : nullptr, nullptr, nullptr};
        // quadratic convergence makes extra digits nearly free; aim well
        // below tol_eff and judge convergence against tol_eff afterwards
        const double smooth_tol =
            std::max(1e-4 * tol_eff, 4e-12 * std::max(1.0, n / n_bins));
        newton_minimize(sp, bounds, theta, smooth_tol, std::max(opts.max_iters, 100), &iters);
        recenter(theta, n, bounds);
        {
            std::vector<double> grad(n_bins), dwork(r), twork(n_bins);
            smooth_gradient(sp, theta, grad, dwork, twork);
            out.kkt_residual = projected_residual(theta, grad, bounds);
        }
        out.converged = out.kkt_residual <= tol_eff;
    } else {
        // the splitting of Ramdas & Tibshirani: z = Delta^(k) theta, so the
        // z-update is an exact 1-D total-variation prox and the theta-update
        // keeps a banded Hessian of bandwidth k
        const int r = op.rows();                  // penalized differences
        const int zlen = n_bins - pen.k;          // z dimension
        const DiffOperator* bop = nullptr;        // identity when k = 0
        std::optional<DiffOperator> bop_storage;
        if (pen.k >= 1) {
            bop_storage.emplace(pen.k, n_bins);
            bop = &*bop_storage;
        }

        std::vector<double> z(zlen), u(zlen, 0.0), v(zlen), btheta(zlen), zold(zlen);
        std::vector<double> wdual(zlen - 1, 0.0); // TV prox dual
        std::vector<double> tdiff(n_bins), s_hint(r), s_accept(r, 0.0);
        std::vector<double> rho_w(zlen);
        TvProx prox(zlen);

        const auto apply_b = [&](const std::vector<double>& in, std::vector<double>& outv) {
            if (bop) {
                bop->apply(in, outv);
            } else {
                outv = in;
            }
        };
        apply_b(theta, z);

        double rho = opts.admm_rho > 0.0 ? opts.admm_rho : std::max(pen.tau, 1.0);
        constexpr double kRelax = 1.7; // over-relaxation

        double kkt = std::numeric_limits<double>::infinity();
        bool converged = false;
        int it = 0;
        int last_polish = -100;
        while (it < opts.max_iters) {
            ++it;
            for (int i = 0; i < zlen; ++i) v[i] = z[i] - u[i];
            std::fill(rho_w.begin(), rho_w.end(), rho);
            const SmoothSpec sp{q, bop, &rho_w, &v, nullptr};
            newton_minimize(sp, bounds, theta, inner_tol, 40, nullptr);

            apply_b(theta, btheta);
            std::swap(zold, z);
            for (int i = 0; i < zlen; ++i) {
                v[i] = kRelax * btheta[i] + (1.0 - kRelax) * zold[i] + u[i];
            }
            prox.solve(v, pen.tau / rho, wdual, z);
            double r_primal = 0.0;
            for (int i = 0; i < zlen; ++i) {
                u[i] = v[i] - z[i];
                r_primal = std::max(r_primal, std::fabs(btheta[i] - z[i]));
            }
            double s_dual = 0.0;
            if (bop) {
                for (int i = 0; i < zlen; ++i) zold[i] = z[i] - zold[i];
                bop->apply_transpose(zold, tdiff);
                for (int j = 0; j < n_bins; ++j) s_dual = std::max(s_dual, rho * std::fabs(tdiff[j]));
            } else {
                for (int i = 0; i < zlen; ++i)
                    s_dual = std::max(s_dual, rho * std::fabs(z[i] - zold[i]));
            }

            const bool residuals_small = r_primal <= 20.0 * tol_eff && s_dual <= 20.0 * tol_eff;
            const bool residuals_near = r_primal <= 2e3 * tol_eff && s_dual <= 2e3 * tol_eff;
            if (residuals_small || it % 10 == 0 || it == opts.max_iters) {
                // the full certificate (an exact box least-squares) only pays
                // off near convergence; far away the splitting residuals
                // already witness non-stationarity
                if (residuals_near || it % 100 == 0 || it == opts.max_iters) {
                    // the prox dual is tau/rho times a subgradient of TV at z
                    dual_to_subgradient(wdual, rho / pen.tau, s_hint);
                    kkt = kkt_residual_l1(q, op, pen.tau, theta, bounds, s_hint, &s_accept);
                    if (kkt <= tol_eff) {
                        converged = true;
                        break;
                    }
                    if (it >= 10 && it - last_polish >= 50) {
                        last_polish = it;
                        if (polish_active_set(q, op, pen.tau, s_hint, bounds, inner_tol, tol_eff,
                                              theta, kkt, s_accept)) {
                            converged = true;
                            break;
                        }
                    }
                }
            }
            if (it % 10 == 0) {
                if (r_primal > 10.0 * s_dual) {
                    rho *= 2.0;
                    for (double& x : u) x *= 0.5;
                    for (double& x : wdual) x *= 0.5;
                } else if (s_dual > 10.0 * r_primal) {
                    rho *= 0.5;
                    for (double& x : u) x *= 2.0;
                    for (double& x : wdual) x *= 2.0;
                }
            }
        }
        iters = it;
        recenter(theta, n, bounds);
        if (!converged) {
            dual_to_subgradient(wdual, rho / pen.tau, s_accept);
        }
        kkt = kkt_residual_l1(q, op, pen.tau, theta, bounds, s_accept);
        out.kkt_residual = kkt;
        out.converged = kkt <= tol_eff;
    }

    out.theta = std::move(theta);
    out.nll = poisson_nll(out.theta, hist.counts);
    out.objective = out.nll + penalty_value(pen, op, out.theta);
    out.active_diffs = count_active_diffs(op, out.theta);
    out.iterations = iters;
    return out;
}

} // namespace htf
