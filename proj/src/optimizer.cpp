#include "proxycam/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <Eigen/Dense>

namespace proxycam {

double ResidualVector::sum_squares() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return s;
}

JacobianMatrix finite_difference_jacobian(const ResidualFn& fn, const std::vector<double>& point,
                                          const ResidualVector& base,
                                          const std::vector<double>& steps) {
    const int m = int(base.values.size());
    const int n = int(point.size());
    if (int(steps.size()) != n) throw OptimizerError("one step per parameter required");

    JacobianMatrix jac;
    jac.rows = m;
    jac.cols = n;
    jac.a.assign(size_t(m) * n, 0.0);

    for (int j = 0; j < n; ++j) {
        if (!(steps[j] > 0.0)) throw OptimizerError("finite-difference steps must be positive");
        std::vector<double> probe = point;
        probe[j] += steps[j];
        const ResidualVector rv = fn(probe);
        std::map<int, double> by_cell;
        for (size_t i = 0; i < rv.values.size(); ++i) by_cell[rv.cells[i]] = rv.values[i];
        for (int i = 0; i < m; ++i) {
            const auto it = by_cell.find(base.cells[i]);
            if (it == by_cell.end()) continue; // row invalid at the probe: masked
            jac.at(i, j) = (it->second - base.values[i]) / steps[j];
        }
    }
    return jac;
}

std::vector<double> damped_step(const JacobianMatrix& jac, const ResidualVector& residuals,
                                const std::vector<double>& eps) {
    const int m = jac.rows, n = jac.cols;
    if (int(residuals.values.size()) != m) throw OptimizerError("residual/Jacobian shape mismatch");
    if (int(eps.size()) != n) throw OptimizerError("one damping entry per parameter required");

    Eigen::MatrixXd a(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = jac.at(i, j);
    Eigen::VectorXd f(m);
    for (int i = 0; i < m; ++i) f(i) = residuals.values[i];

    Eigen::MatrixXd normal = a.transpose() * a;
    for (int j = 0; j < n; ++j) {
        if (!(eps[j] >= 0.0)) throw OptimizerError("damping must be non-negative");
        normal(j, j) += eps[j];
    }
    const Eigen::VectorXd rhs = -a.transpose() * f;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
    Eigen::VectorXd dp;
    bool ok = ldlt.info() == Eigen::Success;
    if (ok) {
        dp = ldlt.solve(rhs);
        ok = dp.allFinite() && (normal * dp - rhs).norm() <= 1e-8 * (rhs.norm() + 1.0);
    }
    if (!ok) {
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(normal);
        const double smax = svd.singularValues()(0);
        const double smin = svd.singularValues()(svd.singularValues().size() - 1);
        std::ostringstream os;
        os << "damped normal equations numerically singular; condition estimate "
           << (smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity());
        throw OptimizerError(os.str());
    }

    return std::vector<double>(dp.data(), dp.data() + n);
}

bool adapt_damping(std::vector<double>& eps, double predicted_decrease, double actual_decrease,
                   const OptimizerConfig& cfg) {
    bool agree;
    if (predicted_decrease > 0.0)
        agree = std::abs(actual_decrease - predicted_decrease) <=
                cfg.agreement_band * predicted_decrease;
    else
        agree = actual_decrease >= 0.0;

    const double factor = agree ? cfg.eps_decrease : cfg.eps_increase;
    for (double& e : eps) e = std::clamp(e * factor, cfg.eps_min, cfg.eps_max);
    return agree;
}

namespace {

double geometric_mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += std::log(x);
    return std::exp(s / double(v.size()));
}

std::vector<double> clamp_box(std::vector<double> x, const std::vector<double>& lo,
                              const std::vector<double>& hi) {
    for (size_t j = 0; j < x.size(); ++j) x[j] = std::clamp(x[j], lo[j], hi[j]);
    return x;
}

} // namespace

OptimizationReport fit_least_squares(const ResidualFn& fn, std::vector<double> start,
                                     const std::vector<double>& steps,
                                     const std::vector<double>& lower,
                                     const std::vector<double>& upper,
                                     const OptimizerConfig& cfg) {
    const int n = int(start.size());
    if (int(steps.size()) != n || int(lower.size()) != n || int(upper.size()) != n)
        throw OptimizerError("parameter vector shape mismatch");

    OptimizationReport report;
    std::vector<double> x = clamp_box(std::move(start), lower, upper);
    ResidualVector f = fn(x);
    if (f.values.empty()) throw OptimizerError("no valid residual rows at the start point");
    double ss = f.sum_squares();
    report.initial_residual_ss = ss;

    std::vector<double> best_x = x;
    double best_ss = ss;

    std::vector<double> eps(n, cfg.eps_init);

    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        const JacobianMatrix jac = finite_difference_jacobian(fn, x, f, steps);
        const std::vector<double> dp = damped_step(jac, f, eps);

        // grad phi = A^T f + eps dP
        double grad_sq = 0.0;
        for (int j = 0; j < n; ++j) {
            double atf = 0.0;
            for (int i = 0; i < jac.rows; ++i) atf += jac.at(i, j) * f.values[i];
            const double g = atf + eps[j] * dp[j];
            grad_sq += g * g;
        }
        const double grad_norm = std::sqrt(grad_sq);

        IterationRecord rec;
        rec.iteration = iter;
        rec.gradient_norm = grad_norm;
        rec.eps_geomean = geometric_mean(eps);

        if (grad_norm < cfg.gradient_tol) {
            rec.residual_ss = ss;
            rec.merit_phi = ss;
            rec.accepted = false;
            report.iterations.push_back(rec);
            report.converged = true;
            report.message = "gradient below tolerance";
            break;
        }

        const std::vector<double> x_new = clamp_box([&] {
            std::vector<double> t = x;
            for (int j = 0; j < n; ++j) t[j] += dp[j];
            return t;
        }(), lower, upper);

        // Linear prediction uses the applied (possibly clamped) step.
        std::vector<double> applied(n);
        for (int j = 0; j < n; ++j) applied[j] = x_new[j] - x[j];
        double predicted_ss = 0.0;
        for (int i = 0; i < jac.rows; ++i) {
            double v = f.values[i];
            for (int j = 0; j < n; ++j) v += jac.at(i, j) * applied[j];
            predicted_ss += v * v;
        }

        const ResidualVector f_new = fn(x_new);
        const double ss_new = f_new.sum_squares();

        double phi = ss_new;
        for (int j = 0; j < n; ++j) phi += eps[j] * applied[j] * applied[j];
        rec.merit_phi = phi;

        bool accepted;
        if (cfg.damping == DampingMode::Fixed) {
            accepted = true; // constant damping takes every step
        } else {
            accepted = adapt_damping(eps, ss - predicted_ss, ss - ss_new, cfg);
        }

        if (accepted) {
            x = x_new;
            f = f_new;
            ss = ss_new;
            if (ss < best_ss) {
                best_ss = ss;
                best_x = x;
            }
        }
        rec.accepted = accepted;
        rec.residual_ss = ss;
        report.iterations.push_back(rec);
    }

    if (!report.converged)
        report.message = "stopped at the iteration limit; best state returned";
    if (cfg.damping == DampingMode::Fixed && best_ss < ss) {
        report.solution = best_x;
        report.final_residual_ss = best_ss;
    } else {
        report.solution = x;
        report.final_residual_ss = ss;
    }
    return report;
}

ResidualFn make_sfra_residual_fn(const Prescription& ideal, const SfraTargets& targets,
                                 const OptimizerConfig& cfg) {
    if (targets.cells.size() != targets.values.size() || targets.cells.empty())
        throw OptimizerError("targets must pair cells with values");

    const std::vector<int> free = ideal.free_indices();
    std::vector<double> tolerances;
    for (int idx : free) tolerances.push_back(ideal.params[idx].tolerance);

    return [ideal, targets, cfg, free, tolerances](const std::vector<double>& q) {
        if (q.size() != free.size()) throw OptimizerError("normalized vector length mismatch");
        std::vector<double> deltas;
        deltas.reserve(ideal.params.size());
        for (const auto& p : ideal.params) deltas.push_back(p.delta);
        for (size_t j = 0; j < free.size(); ++j) deltas[free[j]] = q[j] * tolerances[j];

        const LensSystem system = ideal.realize_with(deltas);
        const std::vector<FovSfra> rows = simulate_grid_sfra(system, cfg.grid, cfg.sim);

        ResidualVector rv;
        for (size_t t = 0; t < targets.cells.size(); ++t) {
            const int cell = targets.cells[t];
            if (cell < 0 || cell >= int(rows.size()) || !rows[cell].valid) continue;
            const double sim = (cfg.metric == TargetMetric::SfrArea)
                                   ? rows[cell].sfra
                                   : rows[cell].mtf_half_nyquist;
            rv.values.push_back(targets.values[t] - sim);
            rv.cells.push_back(cell);
        }
        return rv;
    };
}

ProxyResult construct_proxy(const Prescription& ideal, const SfraTargets& targets,
                            const OptimizerConfig& cfg) {
    const std::vector<int> free = ideal.free_indices();
    if (free.empty()) throw OptimizerError("prescription has no free parameters");

    std::vector<double> start, steps, lower, upper;
    for (int idx : free) {
        const ParamSpec& p = ideal.params[idx];
        start.push_back(p.delta / p.tolerance);
        const double native = p.fd_step ? *p.fd_step : std::max(1e-4 * p.tolerance, 1e-7);
        steps.push_back(native / p.tolerance);
        lower.push_back(-1.0);
        upper.push_back(1.0);
    }

    const ResidualFn fn = make_sfra_residual_fn(ideal, targets, cfg);
    OptimizationReport report = fit_least_squares(fn, start, steps, lower, upper, cfg);

    ProxyResult out;
    out.proxy = ideal;
    for (size_t j = 0; j < free.size(); ++j)
        out.proxy.params[free[j]].delta = report.solution[j] * ideal.params[free[j]].tolerance;
    out.proxy.name = ideal.name + "-proxy";
    out.report = std::move(report);
    return out;
}

} // namespace proxycam
