#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ncentre/model.hpp"

namespace ncentre {

struct IntegratorSettings {
    double rel_tol = 1e-12;
    double abs_tol = 1e-15;
    /// Regularisation switch radius in units of the minimum centre separation.
    double r_reg = 0.05;
    /// Close-approach recording radius in units of the minimum centre separation.
    double rho_event = 0.25;
    std::int64_t max_steps = 100'000'000;
    double max_time = std::numeric_limits<double>::infinity();
    /// Escape sphere radius (absolute); 0 selects 20 x configuration diameter.
    double r_escape = 0.0;
    /// Radii (about the origin) whose crossings are recorded as sphere events.
    std::vector<double> sphere_radii;
    bool record_samples = true;

    double r_reg_abs(const CentreConfig& c) const { return r_reg * c.separation_scale(); }
    double rho_event_abs(const CentreConfig& c) const { return rho_event * c.separation_scale(); }
    double r_escape_abs(const CentreConfig& c) const { return r_escape > 0.0 ? r_escape : 20.0 * c.length_scale(); }

    /// Throws ConfigError unless 0 < r_reg < 1/2, r_reg < rho_event and r_escape > 2 x diameter.
    void validate(const CentreConfig& c) const;
};

enum class EventKind { SphereExit, SphereEnter, CloseApproach, BudgetExhausted, Collision };
std::string to_string(EventKind kind);

struct TrajectoryEvent {
    double t = 0.0;
    EventKind kind = EventKind::SphereExit;
    int centre = -1;    ///< 0-based centre index for close approaches and collisions
    double dist = 0.0;  ///< minimum distance (close approach) or sphere radius
    PhaseState state;
};

enum class StopReason { Escaped, MaxTime, MaxSteps, Collision, Predicate };
std::string to_string(StopReason reason);

struct Trajectory {
    std::vector<PhaseState> samples;
    std::vector<TrajectoryEvent> events;
    PhaseState final_state;
    StopReason stop = StopReason::MaxTime;
    double energy_start = 0.0;
    /// max |H(state) - H(start)| over accepted steps.
    double energy_drift = 0.0;
    /// Set when the drift exceeded the configured tolerance budget.
    bool degraded = false;
    int regularized_passages = 0;
    std::int64_t steps = 0;
};

/// Condition that ends a propagation besides the budgets and collisions.
struct StopRule {
    /// Stop on crossing this radius outward (0 selects settings.r_escape).
    double escape_radius = 0.0;
    /// Only stop there when the osculating Kepler energy about the origin is positive.
    bool require_hyperbolic = true;
    /// Optional extra predicate checked after every accepted step.
    std::function<bool(const PhaseState&)> custom;
};

/// Outcome of one regularised passage through the ball around centre `centre`.
struct RegularizedPassage {
    enum class Status { Exited, Collision, Budget } status = Status::Exited;
    PhaseState state;  ///< exit state, collision state or last state
    std::vector<TrajectoryEvent> events;
    std::vector<PhaseState> samples;
    double energy_error = 0.0;
    std::int64_t steps = 0;
};

/// Raised when the regularised passage hits a numeric floor it cannot resolve.
class IntegrationError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Embedded 8(7) step with local error control. `h` is the proposed step on input and
/// the suggested next step on output; the returned state is the accepted step result.
PhaseState step_adaptive(const PhaseState& state, const CentreConfig& config,
                         const IntegratorSettings& settings, double& h);

/// Carries the orbit through the regularisation ball of centre `centre` in
/// Levi-Civita (planar) or Kustaanheimo-Stiefel (spatial) variables.
RegularizedPassage step_regularized(const PhaseState& state, const CentreConfig& config,
                                    const IntegratorSettings& settings, std::size_t centre,
                                    double time_limit = std::numeric_limits<double>::infinity(),
                                    std::int64_t step_limit = std::numeric_limits<std::int64_t>::max());

Trajectory propagate(const PhaseState& state, const CentreConfig& config, const IntegratorSettings& settings,
                     const StopRule& stop = {});

} // namespace ncentre
