#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ncentre/scattering.hpp"

namespace ncentre {

struct Damping {
    double value = 0.0;
    /// log of the damping factor, always finite.
    double log_value = 0.0;
    /// Set when log_value < -700 and value was clamped to 0.
    bool underflow = false;
};

/// exp(-exp(rate sqrt(1 + tau^2))) with rate = C / (g - 1).
Damping gevrey_damping(double tau, const GevreyParams& params);

struct IntegralValue {
    std::vector<double> f;
    Damping damping;
    OrbitClass orbit_class = OrbitClass::Undetermined;
    /// False for Undetermined inputs and for energies outside [E1, E2].
    bool authoritative = true;
};

/// f_k = p+_k damping(tau) on scattering records, exactly 0 otherwise.
/// Throws std::logic_error for a Scattering record without a time delay.
IntegralValue gevrey_integral(const ScatteringRecord& record, int dim, const GevreyParams& params);

/// Raised when a finite-difference stencil leaves the scattering set.
class StencilBroken : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using PhaseFunction = std::function<Eigen::VectorXd(const PhaseState&)>;

/// m x 2d Jacobian of an m-vector function in (q_1..q_d, p_1..p_d), by fourth-order
/// central differences with per-coordinate steps h max(|x_i|, 1).
Eigen::MatrixXd phase_gradient(const PhaseFunction& func, const PhaseState& x, int dim, double h);

/// Poisson bracket of two functions from their phase-space gradients.
double poisson_bracket(const Eigen::VectorXd& grad_a, const Eigen::VectorXd& grad_b, int dim);

/// (p+_1..p+_d, tau) at nearby points, evaluated on the ladder plan frozen at `centre`
/// so the extrapolation error varies smoothly. Throws StencilBroken off the scattering set.
PhaseFunction scattering_function(const ScatteringRecord& centre, const CentreConfig& config,
                                  const ScatteringSettings& settings);

struct IndependenceResult {
    int rank = 0;
    std::vector<double> singular_values;
    /// Jacobian of f divided by the common damping factor, d x 2d.
    Eigen::MatrixXd scaled_jacobian;
    /// Gradients of p+ (d rows) and tau (last row).
    Eigen::MatrixXd raw_gradient;
};

/// Numerical rank of the Jacobian of (f_1..f_d), assembled as
/// D [J(p+) + p+ (dlogD/dtau) grad(tau)^T] with the factor D dropped.
IndependenceResult independence_rank(const ScatteringRecord& record, const CentreConfig& config,
                                     const ScatteringSettings& settings, const GevreyParams& params,
                                     double h = 1e-5, double cutoff = 1e-8);

struct IntegralReport {
    PhaseState point;
    OrbitClass orbit_class = OrbitClass::Undetermined;
    std::vector<double> f;
    double damping_log = 0.0;
    bool damping_underflow = false;
    int rank = -1;
    std::vector<double> singular_values;
    /// {f_i, H} / (|grad f_i| |grad H|), i = 1..d.
    std::vector<double> bracket_h;
    /// {f_i, f_j} / (|grad f_i| |grad f_j|) for i < j in lexicographic order.
    std::vector<double> bracket_ff;
    std::string note;
};

IntegralReport integral_report(const PhaseState& x, const CentreConfig& config, const ScatteringSettings& settings,
                               const GevreyParams& params, double h = 1e-5);

struct ConservationCheck {
    /// max |f(y) - f(x)| / |f(x)| over the sampled states y; 0 when f vanishes throughout.
    double spread = 0.0;
    /// False when x or any sampled state was not classified as scattering with a time delay.
    bool determined = true;
    bool underflow = false;
    std::vector<PhaseState> points;
};

/// Evaluates f at `points` states spread along the recorded forward orbit of x.
ConservationCheck conservation_along_orbit(const PhaseState& x, const CentreConfig& config,
                                           const ScatteringSettings& settings, const GevreyParams& params,
                                           int points);

} // namespace ncentre
