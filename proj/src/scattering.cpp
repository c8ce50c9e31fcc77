#include "ncentre/scattering.hpp"

#include <algorithm>
#include <cmath>

namespace ncentre {

std::string to_string(OrbitClass c)
{
    switch (c) {
    case OrbitClass::Scattering: return "scattering";
    case OrbitClass::BoundedCandidate: return "bounded_candidate";
    case OrbitClass::TrappedCandidate: return "trapped_candidate";
    case OrbitClass::Collision: return "collision";
    case OrbitClass::Undetermined: return "undetermined";
    }
    return "unknown";
}

double ScatteringSettings::crossing_time(const CentreConfig& c, double energy) const
{
    return c.length_scale() / std::sqrt(2.0 * std::max(std::abs(energy), 1e-300));
}

double ScatteringSettings::budget_time(const CentreConfig& c, double energy) const
{
    if (std::isfinite(integrator.max_time)) return integrator.max_time;
    return budget_crossings * crossing_time(c, energy);
}

Classification classify_orbit(const PhaseState& x, const CentreConfig& config, const ScatteringSettings& settings)
{
    const double energy = hamiltonian(x, config);
    IntegratorSettings st = settings.integrator;
    st.max_time = settings.budget_time(config, energy);

    Classification out;
    PhaseState start = x;
    start.t = 0.0;
    out.forward = propagate(start, config, st);
    PhaseState rev = reversed(start);
    rev.t = 0.0;
    out.backward = propagate(rev, config, st);

    const auto fs = out.forward.stop;
    const auto bs = out.backward.stop;
    const bool fe = fs == StopReason::Escaped;
    const bool be = bs == StopReason::Escaped;
    auto inside = [&](const Trajectory& tr) {
        return norm(tr.final_state.q - config.centroid()) <= 2.0 * config.length_scale();
    };
    if (fs == StopReason::Collision || bs == StopReason::Collision) out.orbit_class = OrbitClass::Collision;
    else if (fe && be) out.orbit_class = OrbitClass::Scattering;
    else if (fe != be) out.orbit_class = OrbitClass::TrappedCandidate;
    else if (inside(out.forward) && inside(out.backward)) out.orbit_class = OrbitClass::BoundedCandidate;
    else out.orbit_class = OrbitClass::Undetermined;
    return out;
}

std::vector<Handoff> handoff_ladder(const Trajectory& escaped, const CentreConfig& config,
                                    const ScatteringSettings& settings, double first, int count)
{
    std::vector<Handoff> ladder;
    IntegratorSettings st = settings.integrator;
    st.record_samples = false;
    st.sphere_radii.clear();
    st.max_time = std::numeric_limits<double>::infinity();
    PhaseState s = escaped.final_state;
    double radius = first;
    for (int j = 0; j < count; ++j, radius *= 2.0) {
        if (norm(s.q) < radius) {
            st.r_escape = radius;
            StopRule rule;
            rule.escape_radius = radius;
            const auto leg = propagate(s, config, st, rule);
            if (leg.stop != StopReason::Escaped) break;
            s = leg.final_state;
        }
        ladder.push_back({radius, s, elements_from_state(s, config.z_total())});
    }
    return ladder;
}

namespace {

// Leading ladder errors: the asymptote from osculating elements at R is off by O(R^-2)
// (dipole and higher multipoles); the ball-time comparison by O(R^-1).
constexpr double momentum_gain = 4.0;
constexpr double delay_gain = 2.0;

} // namespace

AsymptoticEstimate asymptotic_momentum(const std::vector<Handoff>& ladder, Branch branch, double tol_p,
                                       int fixed_rung)
{
    AsymptoticEstimate out;
    std::vector<Vec3> raw;
    for (const auto& h : ladder) {
        Vec3 p = kepler_asymptotic_momentum(h.elements, Branch::Outgoing);
        raw.push_back(branch == Branch::Outgoing ? p : -p);
    }
    if (raw.empty()) return out;
    out.momentum = raw.back();
    out.radius = ladder.back().radius;
    out.residual = std::numeric_limits<double>::infinity();
    Vec3 prev;
    for (std::size_t j = 1; j < raw.size(); ++j) {
        const Vec3 extrap = (raw[j] * momentum_gain - raw[j - 1]) / (momentum_gain - 1.0);
        if (j >= 2) {
            out.residual = norm(extrap - prev);
            out.momentum = extrap;
            out.radius = ladder[j].radius;
            out.rung = static_cast<int>(j);
            out.converged = out.residual < tol_p * norm(extrap);
            if (fixed_rung < 0 ? out.converged : out.rung == fixed_rung) return out;
        }
        prev = extrap;
    }
    return out;
}

TimeDelayEstimate time_delay(const std::vector<Handoff>& forward, const std::vector<Handoff>& backward,
                             double tol_tau, int fixed_rung)
{
    TimeDelayEstimate out;
    const std::size_t n = std::min(forward.size(), backward.size());
    std::vector<double> raw;
    for (std::size_t j = 0; j < n; ++j) {
        const auto& f = forward[j];
        const auto& b = backward[j];
        raw.push_back((f.state.t - 0.5 * kepler_time_in_ball(f.elements, f.radius)) +
                      (b.state.t - 0.5 * kepler_time_in_ball(b.elements, b.radius)));
    }
    if (raw.empty()) return out;
    out.tau = raw.back();
    out.residual = std::numeric_limits<double>::infinity();
    double prev = 0.0;
    for (std::size_t j = 1; j < raw.size(); ++j) {
        const double extrap = (delay_gain * raw[j] - raw[j - 1]) / (delay_gain - 1.0);
        if (j >= 2) {
            out.residual = std::abs(extrap - prev);
            out.tau = extrap;
            out.rung = static_cast<int>(j);
            out.converged = out.residual < tol_tau * std::max(1.0, std::abs(extrap));
            if (fixed_rung < 0 ? out.converged : out.rung == fixed_rung) return out;
        }
        prev = extrap;
    }
    return out;
}

std::vector<int> orbit_itinerary(const Trajectory& forward, const Trajectory& backward)
{
    std::vector<int> word;
    auto push = [&](const TrajectoryEvent& e) {
        if (e.kind != EventKind::CloseApproach) return;
        if (word.empty() || word.back() != e.centre) word.push_back(e.centre);
    };
    for (auto it = backward.events.rbegin(); it != backward.events.rend(); ++it) push(*it);
    for (const auto& e : forward.events) push(e);
    return word;
}

ScatteringRecord scattering_record(const PhaseState& x, const CentreConfig& config,
                                   const ScatteringSettings& settings)
{
    ScatteringRecord rec;
    rec.x = x;
    const auto cls = classify_orbit(x, config, settings);
    rec.orbit_class = cls.orbit_class;
    rec.itinerary = orbit_itinerary(cls.forward, cls.backward);
    rec.regularized_passages = cls.forward.regularized_passages + cls.backward.regularized_passages;
    rec.energy_drift = std::max(cls.forward.energy_drift, cls.backward.energy_drift);
    if (rec.orbit_class != OrbitClass::Scattering) return rec;

    const double first = settings.ladder_first > 0.0
                             ? settings.ladder_first
                             : std::max(settings.integrator.r_escape_abs(config), 2.0 * norm(x.q));
    rec.ladder_first = first;
    const int rungs = settings.fixed_rung >= 0 ? std::min(settings.fixed_rung, settings.ladder_max) + 1
                                               : settings.ladder_max + 1;
    try {
        const auto fwd = handoff_ladder(cls.forward, config, settings, first, rungs);
        const auto bwd = handoff_ladder(cls.backward, config, settings, first, rungs);
        const auto plus = asymptotic_momentum(fwd, Branch::Outgoing, settings.tol_p, settings.fixed_rung);
        const auto minus = asymptotic_momentum(bwd, Branch::Incoming, settings.tol_p, settings.fixed_rung);
        rec.p_rung = std::max(plus.rung, minus.rung);
        rec.p_residual = std::max(plus.residual, minus.residual);
        rec.handoff_radius = std::max(plus.radius, minus.radius);
        const bool frozen = settings.fixed_rung >= 0;
        const bool p_ok = frozen ? plus.rung == settings.fixed_rung && minus.rung == settings.fixed_rung
                                 : plus.converged && minus.converged;
        if (!p_ok) {
            rec.orbit_class = OrbitClass::Undetermined;
            rec.note = "asymptote_unconverged";
            return rec;
        }
        rec.p_plus = plus.momentum;
        rec.p_minus = minus.momentum;
        const auto delay = time_delay(fwd, bwd, settings.tol_tau, settings.fixed_rung);
        rec.tau_rung = delay.rung;
        rec.tau_residual = delay.residual;
        rec.tau_converged = frozen ? delay.rung == settings.fixed_rung : delay.converged;
        if (rec.tau_converged) rec.tau = delay.tau;
        else rec.note = "time_delay_unconverged";
    } catch (const KeplerError& e) {
        rec.orbit_class = OrbitClass::Undetermined;
        rec.note = e.what();
    }
    return rec;
}

namespace {

struct BeamFrame {
    Vec3 dir, e1, e2;
};

BeamFrame beam_frame(int dim, const Beam& beam)
{
    BeamFrame f;
    if (dim == 2) {
        const double th = beam.angles[0];
        f.dir = {std::cos(th), std::sin(th), 0.0};
        f.e1 = {-f.dir.y, f.dir.x, 0.0};
    } else {
        const double th = beam.angles[0], ph = beam.angles[1];
        f.dir = {std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
        f.e1 = {std::cos(th) * std::cos(ph), std::cos(th) * std::sin(ph), -std::sin(th)};
        f.e2 = {-std::sin(ph), std::cos(ph), 0.0};
    }
    return f;
}

} // namespace

PhaseState beam_state(const CentreConfig& config, const Beam& beam, double radius)
{
    const auto f = beam_frame(config.dim(), beam);
    const Vec3 impact = f.e1 * beam.impact[0] + f.e2 * (config.dim() == 3 ? beam.impact[1] : 0.0);
    PhaseState s = kepler_state_on_incoming_asymptote(config.z_total(), beam.energy, f.dir, impact, radius);
    const double kinetic = beam.energy - potential(s.q, config);
    if (!(kinetic > 0.0)) throw DomainError(-1, "beam start point lies outside the energy shell's allowed region");
    s.p = s.p * (std::sqrt(2.0 * kinetic) / norm(s.p));
    return s;
}

Beam centred_beam(const CentreConfig& config, Beam beam)
{
    const auto f = beam_frame(config.dim(), beam);
    const Vec3 c = config.centroid();
    beam.impact[0] += dot(c, f.e1);
    if (config.dim() == 3) beam.impact[1] += dot(c, f.e2);
    return beam;
}

} // namespace ncentre
