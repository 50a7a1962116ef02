#pragma once

#include <functional>
#include <string>
#include <vector>

#include "proxycam/prescription.hpp"
#include "proxycam/simulate.hpp"

namespace proxycam {

/// Residual row: target minus simulated value for one field cell. Rows with
/// a dead simulation are masked out instead of failing the fit.
struct ResidualVector {
    std::vector<double> values;  ///< valid rows only
    std::vector<int> cells;      ///< field cell per row
    double sum_squares() const;
};

/// M x N partial-derivative matrix in row-major storage.
struct JacobianMatrix {
    std::vector<double> a; ///< rows * cols
    int rows = 0;
    int cols = 0;
    double at(int r, int c) const { return a[size_t(r) * cols + c]; }
    double& at(int r, int c) { return a[size_t(r) * cols + c]; }
};

enum class TargetMetric { SfrArea, MtfHalfNyquist };
enum class DampingMode { Dynamic, Fixed };

struct OptimizerConfig {
    double eps_init = 1e-2;        ///< initial per-parameter damping (normalized units)
    double eps_decrease = 0.5;     ///< applied on an accepted step
    double eps_increase = 4.0;     ///< applied on a rejected step
    double agreement_band = 0.25;  ///< predicted-vs-actual merit decrease band
    double eps_min = 1e-12;
    double eps_max = 1e12;
    int max_iterations = 200;
    double gradient_tol = 1e-8;    ///< on ||A^T f + eps dP||, normalized units
    TargetMetric metric = TargetMetric::SfrArea;
    DampingMode damping = DampingMode::Dynamic;
    SimulationConfig sim;          ///< merit simulations run noise-free
    FovGrid grid;
};

struct IterationRecord {
    int iteration = 0;
    double residual_ss = 0.0;      ///< f^T f after the step decision
    double merit_phi = 0.0;        ///< f^T f + eps dP^T dP of the attempted step
    double gradient_norm = 0.0;
    double eps_geomean = 0.0;
    bool accepted = false;
};

struct OptimizationReport {
    std::vector<IterationRecord> iterations;
    std::vector<double> solution;  ///< deltas of the free parameters, native units
    double final_residual_ss = 0.0;
    double initial_residual_ss = 0.0;
    bool converged = false;
    std::string message;
};

/// Residuals of a parameter vector in normalized units (each free parameter
/// divided by its tolerance).
using ResidualFn = std::function<ResidualVector(const std::vector<double>& normalized)>;

/// Forward-difference Jacobian column by column. `steps` are in normalized
/// units. Rows follow `base.cells`; probe rows missing from the base mask
/// are dropped, base rows missing from a probe are masked to zero slope.
JacobianMatrix finite_difference_jacobian(const ResidualFn& fn, const std::vector<double>& point,
                                          const ResidualVector& base,
                                          const std::vector<double>& steps);

/// Damped normal-equation step: solve (A^T A + diag(eps)) dp = -A^T f.
/// Throws OptimizerError with a condition estimate when the system is
/// numerically singular.
std::vector<double> damped_step(const JacobianMatrix& jac, const ResidualVector& residuals,
                                const std::vector<double>& eps);

/// Scale the damping vector after a step: all entries shrink by
/// `eps_decrease` when the linear prediction matched the actual decrease
/// within the agreement band, otherwise grow by `eps_increase` (step
/// rejected by the caller). Entries stay inside [eps_min, eps_max].
bool adapt_damping(std::vector<double>& eps, double predicted_decrease, double actual_decrease,
                   const OptimizerConfig& cfg);

/// Full damped-least-squares iteration on an abstract residual function.
OptimizationReport fit_least_squares(const ResidualFn& fn, std::vector<double> start,
                                     const std::vector<double>& steps,
                                     const std::vector<double>& lower,
                                     const std::vector<double>& upper,
                                     const OptimizerConfig& cfg);

/// Measured targets keyed by field cell.
struct SfraTargets {
    std::vector<int> cells;
    std::vector<double> values;   ///< SFRA or MTF at half Nyquist, per metric
};

struct ProxyResult {
    Prescription proxy;           ///< ideal prescription with fitted deltas
    OptimizationReport report;
};

/// Algorithm: iterate simulate -> measure -> damped step until the merit
/// gradient vanishes, starting from the prescription's current overlay.
ProxyResult construct_proxy(const Prescription& ideal, const SfraTargets& targets,
                            const OptimizerConfig& cfg);

/// The optimizer's residual chain exposed for reuse and replay tests.
ResidualFn make_sfra_residual_fn(const Prescription& ideal, const SfraTargets& targets,
                                 const OptimizerConfig& cfg);

class OptimizerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace proxycam
