#pragma once

#include <stdexcept>

#include "ncentre/model.hpp"

namespace ncentre {

/// Raised when a closed-form Kepler quantity does not exist for the given orbit
/// (bound orbit without asymptotes, collision line, sphere never reached).
class KeplerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Conserved quantities of H_inf = |p|^2/2 - z/|q|. Planar orbits keep L along e_z.
struct KeplerElements {
    double energy = 0.0;
    Vec3 ang_mom;   ///< L = q x p
    Vec3 lrl;       ///< A = p x L - z q/|q|
    double z = 0.0;
    Vec3 momentum;  ///< momentum of the generating state; only the z = 0 branch reads it
};

KeplerElements elements_from_state(const PhaseState& state, double z);

enum class Branch { Incoming, Outgoing };

/// lim p(t) for t -> -inf (Incoming) or +inf (Outgoing) along the Kepler orbit.
/// Throws KeplerError for bound orbits and attractive collision lines.
Vec3 kepler_asymptotic_momentum(const KeplerElements& el, Branch branch);

/// Exact Kepler flow over `dt` using universal variables.
PhaseState kepler_propagate(const PhaseState& state, double z, double dt);

/// Total time the (unbound) Kepler orbit spends in the ball |q| <= radius.
double kepler_time_in_ball(const KeplerElements& el, double radius);

/// Time from periapsis to radius `r` along the outgoing half, i.e. half the ball time.
inline double kepler_time_from_periapsis(const KeplerElements& el, double r)
{
    return 0.5 * kepler_time_in_ball(el, r);
}

/// Inbound state at |q| = radius on the unbound Kepler orbit with energy `energy`,
/// incoming asymptotic direction `direction` (unit) and impact vector `impact`
/// (perpendicular to `direction`, measured from the origin).
PhaseState kepler_state_on_incoming_asymptote(double z, double energy, const Vec3& direction,
                                              const Vec3& impact, double radius);

namespace detail {
/// Stumpff functions c0..c3 at x.
struct Stumpff {
    double c0, c1, c2, c3;
};
Stumpff stumpff(double x);
} // namespace detail

} // namespace ncentre
