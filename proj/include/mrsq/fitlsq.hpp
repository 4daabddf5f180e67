#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mrsq/basis.hpp"
#include "mrsq/error.hpp"
#include "mrsq/rng.hpp"
#include "mrsq/sigmodel.hpp"

namespace mrsq {

// Variable-projection Levenberg-Marquardt fitter for the signal model.
//
// The amplitudes (and background scale) enter linearly and are eliminated at
// every trial point by a nonnegative least-squares solve; LM only moves the
// 2(M+1) nonlinear parameters. Complex residuals are stacked as [re; im], so
// every matrix here has 2N rows.
//
// Nonlinear parameter vector layout: [damping_0 .. damping_M, shift_0 .. shift_M]
// where index M is the background.

enum class Termination { gradient_small, step_small, max_iter };

inline const char* to_string(Termination t)
{
    switch (t) {
    case Termination::gradient_small: return "gradient_small";
    case Termination::step_small: return "step_small";
    case Termination::max_iter: return "max_iter";
    }
    return "unknown";
}

struct FitOptions {
    double damp_max_hz = 10.0;
    double shift_max_hz = 10.0;
    int max_iter = 500;
    double lambda0 = 1e-3;
    double gradient_tol = 1e-8;
    double step_tol = 1e-10;
    /// Extra uniformly drawn starting points tried after the supplied one (0 = single start).
    int restarts = 0;
    std::uint64_t restart_seed = 0;
    /// Restarts stop early once residual_norm <= restart_tol * ||signal||.
    double restart_tol = 1e-7;
};

struct FitResult {
    SpectralParams params;
    double residual_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    Termination termination = Termination::max_iter;
    /// Residual norm after every accepted step, starting with the initial point.
    std::vector<double> accepted_residuals;
};

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Vector stack(const ComplexSeries& s)
{
    const auto n = static_cast<Eigen::Index>(s.size());
    Vector v(2 * n);
    for (Eigen::Index j = 0; j < n; ++j) {
        v[j] = s.re[static_cast<std::size_t>(j)];
        v[n + j] = s.im[static_cast<std::size_t>(j)];
    }
    return v;
}

inline ComplexSeries unstack(const Vector& v)
{
    const auto n = v.size() / 2;
    ComplexSeries s(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
        s.re[static_cast<std::size_t>(j)] = v[j];
        s.im[static_cast<std::size_t>(j)] = v[n + j];
    }
    return s;
}

/// Columns are the stacked modulated components (unit amplitude) at the given dampings/shifts.
inline Matrix design_matrix(const BasisSet& basis, const SpectralParams& params)
{
    check_dimensions(basis, params);
    const auto n = static_cast<Eigen::Index>(basis.n_points());
    const auto k_count = static_cast<Eigen::Index>(basis.components());
    Matrix phi(2 * n, k_count);
    for (Eigen::Index k = 0; k < k_count; ++k) {
        const auto col = modulated_component(basis, static_cast<std::size_t>(k), params.damping(static_cast<std::size_t>(k)),
                                             params.shift(static_cast<std::size_t>(k)));
        for (Eigen::Index j = 0; j < n; ++j) {
            phi(j, k) = col[static_cast<std::size_t>(j)].real();
            phi(n + j, k) = col[static_cast<std::size_t>(j)].imag();
        }
    }
    return phi;
}

struct NnlsResult {
    Vector x;
    std::vector<Eigen::Index> passive;
    int iterations = 0;
};

namespace detail {

inline Vector solve_on_set(const Matrix& a, const Vector& b, const std::vector<Eigen::Index>& set)
{
    Matrix sub(a.rows(), static_cast<Eigen::Index>(set.size()));
    for (std::size_t i = 0; i < set.size(); ++i) sub.col(static_cast<Eigen::Index>(i)) = a.col(set[i]);
    Eigen::ColPivHouseholderQR<Matrix> qr(sub);
    if (qr.rank() < sub.cols()) {
        throw RankDeficientError("solve_amplitudes: design matrix is rank deficient (rank "
                                 + std::to_string(qr.rank()) + " of " + std::to_string(sub.cols()) + ")");
    }
    return qr.solve(b);
}

} // namespace detail

/// Nonnegative least squares min ||a x - b|| s.t. x >= 0.
///
/// Starts from the unconstrained QR solution; if that has negative entries they
/// are clamped to zero and the passive set is refined with Lawson-Hanson
/// iterations until it is stable and the KKT conditions hold.
inline NnlsResult nnls(const Matrix& a, const Vector& b)
{
    const Eigen::Index k = a.cols();
    NnlsResult res;
    std::vector<Eigen::Index> all(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < k; ++i) all[static_cast<std::size_t>(i)] = i;

    Vector x = detail::solve_on_set(a, b, all);
    if ((x.array() >= 0.0).all()) {
        res.x = x;
        res.passive = all;
        return res;
    }

    std::vector<bool> in_p(static_cast<std::size_t>(k), false);
    for (Eigen::Index i = 0; i < k; ++i) {
        if (x[i] > 0.0) {
            in_p[static_cast<std::size_t>(i)] = true;
        } else {
            x[i] = 0.0;
        }
    }
    const double tol = 1e-12 * std::max(1.0, (a.transpose() * b).cwiseAbs().maxCoeff());
    const int max_outer = static_cast<int>(3 * k + 10);
    auto passive_list = [&] {
        std::vector<Eigen::Index> p;
        for (Eigen::Index i = 0; i < k; ++i) {
            if (in_p[static_cast<std::size_t>(i)]) p.push_back(i);
        }
        return p;
    };

    // Re-solve on the passive set, backtracking toward feasibility, until every passive value is positive.
    auto settle = [&] {
        for (int inner = 0; inner <= k; ++inner) {
            const auto p = passive_list();
            if (p.empty()) return;
            const Vector zp = detail::solve_on_set(a, b, p);
            double alpha = 1.0;
            bool feasible = true;
            for (std::size_t i = 0; i < p.size(); ++i) {
                const auto idx = static_cast<Eigen::Index>(i);
                if (zp[idx] <= 0.0) {
                    feasible = false;
                    const double xi = x[p[i]];
                    alpha = std::min(alpha, xi / (xi - zp[idx]));
                }
            }
            if (feasible) {
                x.setZero();
                for (std::size_t i = 0; i < p.size(); ++i) x[p[i]] = zp[static_cast<Eigen::Index>(i)];
                return;
            }
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double xi = x[p[i]];
                x[p[i]] = xi + alpha * (zp[static_cast<Eigen::Index>(i)] - xi);
                if (x[p[i]] <= 0.0 || zp[static_cast<Eigen::Index>(i)] <= 0.0 && x[p[i]] <= tol) {
                    x[p[i]] = 0.0;
                    in_p[static_cast<std::size_t>(p[i])] = false;
                }
            }
        }
    };

    for (res.iterations = 0; res.iterations < max_outer; ++res.iterations) {
        settle();
        const Vector w = a.transpose() * (b - a * x);
        Eigen::Index best = -1;
        double best_w = tol;
        for (Eigen::Index i = 0; i < k; ++i) {
            if (!in_p[static_cast<std::size_t>(i)] && w[i] > best_w) {
                best_w = w[i];
                best = i;
            }
        }
        if (best < 0) break;
        in_p[static_cast<std::size_t>(best)] = true;
    }
    res.x = x;
    res.passive = passive_list();
    return res;
}

/// Returns `params` with amplitudes and bg_scale replaced by the nonnegative
/// least-squares optimum at its dampings and shifts.
inline SpectralParams solve_amplitudes(const BasisSet& basis, const SpectralParams& params, const ComplexSeries& signal)
{
    if (signal.size() != basis.n_points()) throw InvalidArgument("solve_amplitudes: signal length does not match basis");
    const Matrix phi = design_matrix(basis, params);
    const auto sol = nnls(phi, stack(signal));
    SpectralParams out = params;
    for (std::size_t k = 0; k < basis.components(); ++k) out.amplitude(k) = sol.x[static_cast<Eigen::Index>(k)];
    return out;
}

/// Jacobian of the stacked model (not the residual; the residual Jacobian is its
/// negation) with respect to [dampings..., bg damping, shifts..., bg shift].
/// d/d(damping_k) = a_k t x_k e^{...};  d/d(shift_k) = 2 pi i t a_k x_k e^{...}.
inline Matrix jacobian(const BasisSet& basis, const SpectralParams& params)
{
    check_dimensions(basis, params);
    const auto n = static_cast<Eigen::Index>(basis.n_points());
    const auto kc = static_cast<Eigen::Index>(basis.components());
    Matrix jac = Matrix::Zero(2 * n, 2 * kc);
    for (Eigen::Index k = 0; k < kc; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        const double a = params.amplitude(kk);
        if (a == 0.0) continue;
        const auto col = modulated_component(basis, kk, params.damping(kk), params.shift(kk));
        for (Eigen::Index j = 0; j < n; ++j) {
            const double t = basis.time(static_cast<std::size_t>(j));
            const cdouble v = a * t * col[static_cast<std::size_t>(j)];
            const cdouble w = cdouble{0.0, 2.0 * std::numbers::pi} * v;
            jac(j, k) = v.real();
            jac(n + j, k) = v.imag();
            jac(j, kc + k) = w.real();
            jac(n + j, kc + k) = w.imag();
        }
    }
    return jac;
}

namespace detail {

struct VarproPoint {
    Vector theta;
    SpectralParams params;
    Matrix phi;
    NnlsResult amps;
    Vector residual;
    double cost = 0.0;
};

inline SpectralParams params_from_theta(const Vector& theta, std::size_t m)
{
    SpectralParams p(m);
    for (std::size_t k = 0; k <= m; ++k) {
        p.damping(k) = theta[static_cast<Eigen::Index>(k)];
        p.shift(k) = theta[static_cast<Eigen::Index>(m + 1 + k)];
    }
    return p;
}

inline Vector theta_from_params(const SpectralParams& p)
{
    const std::size_t kc = p.size() + 1;
    Vector theta(2 * static_cast<Eigen::Index>(kc));
    for (std::size_t k = 0; k < kc; ++k) {
        theta[static_cast<Eigen::Index>(k)] = p.damping(k);
        theta[static_cast<Eigen::Index>(kc + k)] = p.shift(k);
    }
    return theta;
}

inline VarproPoint evaluate_point(const BasisSet& basis, const Vector& y, const Vector& theta)
{
    VarproPoint pt;
    pt.theta = theta;
    pt.params = params_from_theta(theta, basis.size());
    pt.phi = design_matrix(basis, pt.params);
    pt.amps = nnls(pt.phi, y);
    for (std::size_t k = 0; k < basis.components(); ++k) pt.params.amplitude(k) = pt.amps.x[static_cast<Eigen::Index>(k)];
    pt.residual = y - pt.phi * pt.amps.x;
    pt.cost = pt.residual.norm();
    if (!std::isfinite(pt.cost)) throw DivergenceError("fit: residual is not finite");
    return pt;
}

} // namespace detail

/// Levenberg-Marquardt over dampings/shifts with amplitudes eliminated by NNLS
/// at every trial point. Bounds are enforced by projection; the LM matrix uses
/// the Kaufman (projected) Jacobian and Marquardt diagonal scaling with
/// lambda multiplied/divided by 10 on reject/accept.
inline FitResult fit(const BasisSet& basis, const ComplexSeries& signal, const SpectralParams& init,
                     const FitOptions& opts = {})
{
    check_dimensions(basis, init);
    if (signal.size() != basis.n_points()) throw InvalidArgument("fit: signal length does not match basis");
    if (!signal.all_finite()) throw InvalidArgument("fit: signal has non-finite samples");

    const std::size_t kc = basis.components();
    const auto np = static_cast<Eigen::Index>(2 * kc);
    Vector lower(np), upper(np);
    for (std::size_t k = 0; k < kc; ++k) {
        lower[static_cast<Eigen::Index>(k)] = -opts.damp_max_hz;
        upper[static_cast<Eigen::Index>(k)] = opts.damp_max_hz;
        lower[static_cast<Eigen::Index>(kc + k)] = -opts.shift_max_hz;
        upper[static_cast<Eigen::Index>(kc + k)] = opts.shift_max_hz;
    }
    auto project = [&](Vector v) { return v.cwiseMax(lower).cwiseMin(upper).eval(); };

    const Vector y = stack(signal);
    auto current = detail::evaluate_point(basis, y, project(detail::theta_from_params(init)));

    FitResult result;
    result.accepted_residuals.push_back(current.cost);
    double lambda = opts.lambda0;
    result.termination = Termination::max_iter;

    int iter = 0;
    for (; iter < opts.max_iter; ++iter) {
        // Kaufman projection: remove the part of the Jacobian inside span(phi_passive).
        Matrix jr = -jacobian(basis, current.params);
        if (!current.amps.passive.empty()) {
            Matrix sub(current.phi.rows(), static_cast<Eigen::Index>(current.amps.passive.size()));
            for (std::size_t i = 0; i < current.amps.passive.size(); ++i) {
                sub.col(static_cast<Eigen::Index>(i)) = current.phi.col(current.amps.passive[i]);
            }
            Eigen::HouseholderQR<Matrix> qr(sub);
            const Matrix q = qr.householderQ() * Matrix::Identity(sub.rows(), sub.cols());
            jr -= q * (q.transpose() * jr);
        }
        const Vector grad = jr.transpose() * current.residual;

        Vector pgrad = grad;
        for (Eigen::Index i = 0; i < np; ++i) {
            if ((current.theta[i] <= lower[i] && grad[i] > 0.0) || (current.theta[i] >= upper[i] && grad[i] < 0.0)) {
                pgrad[i] = 0.0;
            }
        }
        if (pgrad.cwiseAbs().maxCoeff() < opts.gradient_tol * (1.0 + current.cost)) {
            result.termination = Termination::gradient_small;
            break;
        }

        // Variables pinned at a bound by the gradient are frozen for this iteration.
        std::vector<Eigen::Index> free;
        for (Eigen::Index i = 0; i < np; ++i) {
            if (pgrad[i] != 0.0 || grad[i] == 0.0) free.push_back(i);
        }
        const auto nf = static_cast<Eigen::Index>(free.size());
        Matrix jf(jr.rows(), nf);
        Vector gf(nf);
        for (Eigen::Index i = 0; i < nf; ++i) {
            jf.col(i) = jr.col(free[static_cast<std::size_t>(i)]);
            gf[i] = grad[free[static_cast<std::size_t>(i)]];
        }
        const Matrix jtj = jf.transpose() * jf;
        Vector diag = jtj.diagonal();
        const double floor = std::max(1e-12 * diag.maxCoeff(), std::numeric_limits<double>::min());
        diag = diag.cwiseMax(floor);

        bool accepted = false;
        bool tiny_step = false;
        while (!accepted) {
            Matrix lhs = jtj;
            lhs.diagonal() += lambda * diag;
            const Vector df = lhs.ldlt().solve(-gf);
            Vector delta = Vector::Zero(np);
            for (Eigen::Index i = 0; i < nf; ++i) delta[free[static_cast<std::size_t>(i)]] = df[i];
            const Vector trial_theta = project(current.theta + delta);
            const double step = (trial_theta - current.theta).norm();
            if (!std::isfinite(step)) throw DivergenceError("fit: non-finite LM step");
            if (step < opts.step_tol) {
                tiny_step = true;
                break;
            }
            bool ok = false;
            detail::VarproPoint trial;
            try {
                trial = detail::evaluate_point(basis, y, trial_theta);
                ok = trial.cost < current.cost;
            } catch (const RankDeficientError&) {
                ok = false;
            }
            if (ok) {
                current = std::move(trial);
                lambda = std::max(lambda / 10.0, 1e-15);
                accepted = true;
                result.accepted_residuals.push_back(current.cost);
            } else {
                lambda *= 10.0;
                if (lambda > 1e16) {
                    tiny_step = true;
                    break;
                }
            }
        }
        if (tiny_step) {
            result.termination = Termination::step_small;
            ++iter;
            break;
        }
    }

    result.params = current.params;
    result.residual_norm = current.cost;
    result.iterations = iter;
    result.converged = result.termination != Termination::max_iter;
    return result;
}

/// Benchmark initialization: all dampings and shifts zero; amplitudes follow from the inner solve.
inline SpectralParams zero_init(const BasisSet& basis) { return SpectralParams(basis.size()); }

/// Single fit from the zero start, followed by opts.restarts fits from uniform
/// random starts inside the bounds; returns the lowest-residual result.
inline FitResult fit_multistart(const BasisSet& basis, const ComplexSeries& signal, const FitOptions& opts = {})
{
    FitResult best = fit(basis, signal, zero_init(basis), opts);
    const double target = opts.restart_tol * stack(signal).norm();
    SeededRng rng = make_stream(opts.restart_seed, 0);
    std::uniform_real_distribution<double> damp(-opts.damp_max_hz, opts.damp_max_hz);
    std::uniform_real_distribution<double> shift(-opts.shift_max_hz, opts.shift_max_hz);
    for (int r = 0; r < opts.restarts && best.residual_norm > target; ++r) {
        SpectralParams init(basis.size());
        for (std::size_t k = 0; k < basis.components(); ++k) {
            init.damping(k) = damp(rng);
            init.shift(k) = shift(rng);
        }
        auto candidate = fit(basis, signal, init, opts);
        if (candidate.residual_norm < best.residual_norm) best = std::move(candidate);
    }
    return best;
}

} // namespace mrsq
