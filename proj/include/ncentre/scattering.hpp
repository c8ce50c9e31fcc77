#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "ncentre/integrator.hpp"
#include "ncentre/kepler.hpp"

namespace ncentre {

enum class OrbitClass { Scattering, BoundedCandidate, TrappedCandidate, Collision, Undetermined };
std::string to_string(OrbitClass c);

struct ScatteringSettings {
    IntegratorSettings integrator;
    /// Time budget per direction in crossing times (diameter / sqrt(2E)); used when
    /// integrator.max_time is left infinite.
    double budget_crossings = 1e4;
    /// Deepest rung of the handoff ladder R_j = R_0 2^j.
    int ladder_max = 12;
    /// Asymptote convergence, relative to |p|.
    double tol_p = 1e-8;
    /// Time-delay convergence, relative to max(1, |tau|).
    double tol_tau = 1e-6;
    /// Frozen ladder plan for finite differences: first radius (0 = automatic) and the
    /// rung whose extrapolation is returned (-1 = first converged rung).
    double ladder_first = 0.0;
    int fixed_rung = -1;

    double crossing_time(const CentreConfig& c, double energy) const;
    double budget_time(const CentreConfig& c, double energy) const;
};

struct Classification {
    OrbitClass orbit_class = OrbitClass::Undetermined;
    Trajectory forward;
    /// Propagation of the time-reversed point (q, -p).
    Trajectory backward;
};

/// Budget-relative orbit class from a forward run of x and a forward run of (q, -p).
Classification classify_orbit(const PhaseState& x, const CentreConfig& config, const ScatteringSettings& settings);

/// Exact outward crossing of |q| = radius, with the osculating H_inf elements there.
struct Handoff {
    double radius = 0.0;
    PhaseState state;
    KeplerElements elements;
};

/// Carries an escaped trajectory out through the radii `first * 2^j`, j = 0..count-1.
std::vector<Handoff> handoff_ladder(const Trajectory& escaped, const CentreConfig& config,
                                    const ScatteringSettings& settings, double first, int count);

struct AsymptoticEstimate {
    Vec3 momentum;
    double residual = 0.0;
    bool converged = false;
    /// Outer radius of the rung pair that met the tolerance (or the deepest used).
    double radius = 0.0;
    int rung = -1;
};

/// Richardson-extrapolated Kepler asymptote along a ladder. `branch` selects p+ from a
/// forward ladder (Outgoing) or p- from the ladder of the reversed point (Incoming).
AsymptoticEstimate asymptotic_momentum(const std::vector<Handoff>& ladder, Branch branch, double tol_p,
                                       int fixed_rung = -1);

struct TimeDelayEstimate {
    double tau = 0.0;
    double residual = 0.0;
    bool converged = false;
    int rung = -1;
};

/// Extrapolated time delay from matching forward and reversed ladders (same radii).
/// The Kepler comparison uses half the ball time of each side's osculating elements.
TimeDelayEstimate time_delay(const std::vector<Handoff>& forward, const std::vector<Handoff>& backward,
                             double tol_tau, int fixed_rung = -1);

/// Close-approach centre indices (0-based) along the whole orbit through x, in time
/// order, with consecutive repeats collapsed.
std::vector<int> orbit_itinerary(const Trajectory& forward, const Trajectory& backward);

struct ScatteringRecord {
    PhaseState x;
    OrbitClass orbit_class = OrbitClass::Undetermined;
    std::optional<Vec3> p_minus, p_plus;
    std::optional<double> tau;
    bool tau_converged = false;
    double tau_residual = 0.0;
    double p_residual = 0.0;
    std::vector<int> itinerary;
    double handoff_radius = 0.0;
    double ladder_first = 0.0;
    int p_rung = -1;
    int tau_rung = -1;
    /// Why a record fell short of the full scattering data, if it did.
    std::string note;
    int regularized_passages = 0;
    double energy_drift = 0.0;
};

ScatteringRecord scattering_record(const PhaseState& x, const CentreConfig& config,
                                   const ScatteringSettings& settings);

/// Incoming beam: asymptotic direction angles (d=2: {theta}; d=3: {polar, azimuth}),
/// impact offsets in the transverse plane, energy.
struct Beam {
    double energy = 1.0;
    std::array<double, 2> angles{};
    std::array<double, 2> impact{};
};

/// Phase point at |q| = radius on the Kepler orbit of H_inf matching the beam, with |p|
/// rescaled onto the energy shell H = energy. Throws DomainError if no such point exists.
PhaseState beam_state(const CentreConfig& config, const Beam& beam, double radius);

/// Same beam with the impact offsets measured from the centroid instead of the origin.
Beam centred_beam(const CentreConfig& config, Beam beam);

} // namespace ncentre
