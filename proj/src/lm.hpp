// Small dense Levenberg-Marquardt minimizer for the fitting engines.
//
// Supports plain least squares, Poisson-weighted least squares (Neyman
// weights 1/max(y,1)) and Poisson maximum likelihood via Fisher scoring,
// where the normal-equation step uses model-based weights 1/m and the
// objective is the deviance 2*sum(m - y + y ln(y/m)).
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace fretflim::detail {

enum class LmObjective { LeastSquares, PoissonWls, PoissonMle };

struct LmOptions {
    int max_iterations = 500;
    double param_tol = 1e-8;
    double objective_tol = 1e-10;
};

struct LmBounds {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
};

struct LmOutcome {
    std::vector<double> params;
    std::vector<double> sigma;  // 1-sigma curvature estimates
    double objective = 0.0;     // chi^2 or deviance
    int iterations = 0;
    bool converged = false;
};

// eval(p, model, jac): fill model[k] and jac[k * n_params + j].
using LmEval = std::function<void(const double*, double*, double*)>;

inline bool cholesky_solve(std::vector<double>& a, std::vector<double>& b, int n) {
    // In-place LL^T decomposition of the symmetric matrix a (row-major).
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = a[static_cast<std::size_t>(i) * n + j];
            for (int k = 0; k < j; ++k)
                s -= a[static_cast<std::size_t>(i) * n + k] * a[static_cast<std::size_t>(j) * n + k];
            if (i == j) {
                if (!(s > 0.0)) return false;
                a[static_cast<std::size_t>(i) * n + j] = std::sqrt(s);
            } else {
                a[static_cast<std::size_t>(i) * n + j] = s / a[static_cast<std::size_t>(j) * n + j];
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        double s = b[static_cast<std::size_t>(i)];
        for (int k = 0; k < i; ++k) s -= a[static_cast<std::size_t>(i) * n + k] * b[static_cast<std::size_t>(k)];
        b[static_cast<std::size_t>(i)] = s / a[static_cast<std::size_t>(i) * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = b[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < n; ++k) s -= a[static_cast<std::size_t>(k) * n + i] * b[static_cast<std::size_t>(k)];
        b[static_cast<std::size_t>(i)] = s / a[static_cast<std::size_t>(i) * n + i];
    }
    return true;
}

inline bool invert_spd(std::vector<double> a, std::vector<double>& inv, int n) {
    inv.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int col = 0; col < n; ++col) {
        std::vector<double> m = a;
        std::vector<double> e(static_cast<std::size_t>(n), 0.0);
        e[static_cast<std::size_t>(col)] = 1.0;
        if (!cholesky_solve(m, e, n)) return false;
        for (int row = 0; row < n; ++row) inv[static_cast<std::size_t>(row) * n + col] = e[static_cast<std::size_t>(row)];
    }
    return true;
}

class LmSolver {
public:
    LmSolver(std::vector<double> data, LmObjective objective, int n_params, LmEval eval,
             std::vector<LmBounds> bounds, LmOptions options = {})
        : y_(std::move(data)),
          objective_(objective),
          n_params_(n_params),
          eval_(std::move(eval)),
          bounds_(std::move(bounds)),
          options_(options) {}

    LmOutcome run(std::vector<double> p0) {
        const int n = static_cast<int>(y_.size());
        const int np = n_params_;
        std::vector<double> model(static_cast<std::size_t>(n));
        std::vector<double> jac(static_cast<std::size_t>(n) * np);
        std::vector<double> hess(static_cast<std::size_t>(np) * np);
        std::vector<double> grad(static_cast<std::size_t>(np));

        clamp(p0);
        eval_(p0.data(), model.data(), jac.data());
        double obj = objective_value(model);

        LmOutcome out;
        out.params = p0;
        out.objective = obj;

        double lambda = 1e-3;
        bool converged = false;
        int iter = 0;
        for (; iter < options_.max_iterations && !converged; ++iter) {
            normal_equations(model, jac, hess, grad);

            // Active set: a parameter pinned at a bound with the gradient
            // pointing outward is excluded from the step, otherwise the
            // projection makes the iteration zigzag without converging.
            std::vector<bool> frozen(static_cast<std::size_t>(np), false);
            for (int j = 0; j < np; ++j) {
                const auto& b = bounds_[static_cast<std::size_t>(j)];
                const double pj = out.params[static_cast<std::size_t>(j)];
                const double gj = grad[static_cast<std::size_t>(j)];
                if ((pj <= b.lo && gj < 0.0) || (pj >= b.hi && gj > 0.0))
                    frozen[static_cast<std::size_t>(j)] = true;
            }

            bool stepped = false;
            for (int attempt = 0; attempt < 16; ++attempt) {
                std::vector<double> damped = hess;
                std::vector<double> step = grad;
                for (int j = 0; j < np; ++j) {
                    double d = hess[static_cast<std::size_t>(j) * np + j];
                    if (d <= 0.0) d = 1e-12;
                    damped[static_cast<std::size_t>(j) * np + j] = d * (1.0 + lambda);
                    if (frozen[static_cast<std::size_t>(j)]) {
                        for (int k = 0; k < np; ++k) {
                            damped[static_cast<std::size_t>(j) * np + k] = 0.0;
                            damped[static_cast<std::size_t>(k) * np + j] = 0.0;
                        }
                        damped[static_cast<std::size_t>(j) * np + j] = 1.0;
                        step[static_cast<std::size_t>(j)] = 0.0;
                    }
                }
                if (!cholesky_solve(damped, step, np)) {
                    lambda *= 10.0;
                    continue;
                }
                std::vector<double> trial = out.params;
                for (int j = 0; j < np; ++j) trial[static_cast<std::size_t>(j)] += step[static_cast<std::size_t>(j)];
                clamp(trial);

                std::vector<double> trial_model(static_cast<std::size_t>(n));
                eval_(trial.data(), trial_model.data(), nullptr);
                const double trial_obj = objective_value(trial_model);
                if (trial_obj <= obj) {
                    double max_rel = 0.0;
                    for (int j = 0; j < np; ++j) {
                        const double rel = std::fabs(trial[static_cast<std::size_t>(j)] - out.params[static_cast<std::size_t>(j)]) /
                                           std::max(1.0, std::fabs(out.params[static_cast<std::size_t>(j)]));
                        max_rel = std::max(max_rel, rel);
                    }
                    const double dobj = std::fabs(obj - trial_obj);
                    out.params = trial;
                    obj = trial_obj;
                    eval_(out.params.data(), model.data(), jac.data());
                    lambda = std::max(lambda * 0.3, 1e-12);
                    stepped = true;
                    if (max_rel < options_.param_tol ||
                        dobj <= options_.objective_tol * std::max(1.0, std::fabs(obj)))
                        converged = true;
                    break;
                }
                lambda *= 10.0;
                if (lambda > 1e12) break;
            }
            if (!stepped) {
                // No downhill step found at any damping: local minimum.
                converged = true;
            }
        }

        out.objective = obj;
        out.iterations = iter;
        out.converged = converged;

        normal_equations(model, jac, hess, grad);
        out.sigma.assign(static_cast<std::size_t>(np), 0.0);
        std::vector<double> cov;
        if (invert_spd(hess, cov, np)) {
            double scale = 1.0;
            if (objective_ == LmObjective::LeastSquares && n > np)
                scale = obj / (n - np);  // residual variance for unweighted fits
            for (int j = 0; j < np; ++j) {
                const double v = cov[static_cast<std::size_t>(j) * np + j] * scale;
                out.sigma[static_cast<std::size_t>(j)] = v > 0.0 ? std::sqrt(v) : 0.0;
            }
        }
        return out;
    }

private:
    void clamp(std::vector<double>& p) const {
        for (int j = 0; j < n_params_; ++j) {
            const auto& b = bounds_[static_cast<std::size_t>(j)];
            if (p[static_cast<std::size_t>(j)] < b.lo) p[static_cast<std::size_t>(j)] = b.lo;
            if (p[static_cast<std::size_t>(j)] > b.hi) p[static_cast<std::size_t>(j)] = b.hi;
        }
    }

    double weight(double y, double m) const {
        switch (objective_) {
            case LmObjective::LeastSquares: return 1.0;
            case LmObjective::PoissonWls: return 1.0 / std::max(y, 1.0);
            case LmObjective::PoissonMle: return 1.0 / std::max(m, 1e-12);
        }
        return 1.0;
    }

    double objective_value(const std::vector<double>& model) const {
        double f = 0.0;
        if (objective_ == LmObjective::PoissonMle) {
            for (std::size_t k = 0; k < y_.size(); ++k) {
                const double m = std::max(model[k], 1e-12);
                const double y = y_[k];
                f += m - y;
                if (y > 0.0) f += y * std::log(y / m);
            }
            return 2.0 * f;
        }
        for (std::size_t k = 0; k < y_.size(); ++k) {
            const double r = y_[k] - model[k];
            f += weight(y_[k], model[k]) * r * r;
        }
        return f;
    }

    void normal_equations(const std::vector<double>& model, const std::vector<double>& jac,
                          std::vector<double>& hess, std::vector<double>& grad) const {
        const int np = n_params_;
        std::fill(hess.begin(), hess.end(), 0.0);
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t k = 0; k < y_.size(); ++k) {
            const double w = weight(y_[k], model[k]);
            const double r = y_[k] - model[k];
            const double* row = jac.data() + k * np;
            for (int i = 0; i < np; ++i) {
                grad[static_cast<std::size_t>(i)] += w * r * row[i];
                for (int j = 0; j <= i; ++j)
                    hess[static_cast<std::size_t>(i) * np + j] += w * row[i] * row[j];
            }
        }
        for (int i = 0; i < np; ++i)
            for (int j = i + 1; j < np; ++j)
                hess[static_cast<std::size_t>(i) * np + j] = hess[static_cast<std::size_t>(j) * np + i];
    }

    std::vector<double> y_;
    LmObjective objective_;
    int n_params_;
    LmEval eval_;
    std::vector<LmBounds> bounds_;
    LmOptions options_;
};

}  // namespace fretflim::detail
