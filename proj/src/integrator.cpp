#include "ncentre/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ncentre/kepler.hpp"
#include "rk_core.hpp"

namespace ncentre {

using detail::State;

void IntegratorSettings::validate(const CentreConfig& c) const
{
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw ConfigError("integrator.tol", "tolerances must be positive");
    if (!(r_reg > 0.0 && r_reg < 0.5)) throw ConfigError("integrator.r_reg", "must lie in (0, 1/2)");
    if (!(rho_event > r_reg)) throw ConfigError("integrator.rho_event", "must exceed r_reg");
    if (!(r_escape_abs(c) > 2.0 * c.diameter())) throw ConfigError("integrator.r_escape", "must exceed twice the diameter");
    if (max_steps <= 0) throw ConfigError("integrator.max_steps", "must be positive");
    if (!(max_time > 0.0)) throw ConfigError("integrator.max_time", "must be positive");
}

std::string to_string(EventKind kind)
{
    switch (kind) {
    case EventKind::SphereExit: return "sphere_exit";
    case EventKind::SphereEnter: return "sphere_enter";
    case EventKind::CloseApproach: return "close_approach";
    case EventKind::BudgetExhausted: return "budget_exhausted";
    case EventKind::Collision: return "collision";
    }
    return "unknown";
}

std::string to_string(StopReason reason)
{
    switch (reason) {
    case StopReason::Escaped: return "escaped";
    case StopReason::MaxTime: return "max_time";
    case StopReason::MaxSteps: return "max_steps";
    case StopReason::Collision: return "collision";
    case StopReason::Predicate: return "predicate";
    }
    return "unknown";
}

namespace {

State<6> pack(const PhaseState& s) { return {s.q.x, s.q.y, s.q.z, s.p.x, s.p.y, s.p.z}; }
PhaseState unpack(const State<6>& y, double t) { return {{y[0], y[1], y[2]}, {y[3], y[4], y[5]}, t}; }

struct PhysicalRhs {
    const CentreConfig* config;
    void operator()(const State<6>& y, State<6>& dy, double) const
    {
        const Vec3 f = force({y[0], y[1], y[2]}, *config);
        dy = {y[3], y[4], y[5], f.x, f.y, f.z};
    }
};

double initial_step(const PhaseState& s, const CentreConfig& config)
{
    double h = std::numeric_limits<double>::infinity();
    const double speed = norm(s.p);
    for (std::size_t k = 0; k < config.size(); ++k) {
        const double d = norm(s.q - config.centre(k));
        const double v = speed + std::sqrt(std::abs(config.strength(k)) / d);
        h = std::min(h, 1e-3 * d / v);
    }
    return h;
}

// ---- regularised variables -------------------------------------------------------

// Levi-Civita (M = 2) and Kustaanheimo-Stiefel (M = 4) maps. The state holds
// u (M), w = du/ds (M) and physical time t.

template <int M>
Vec3 ks_position(const double* u)
{
    if constexpr (M == 2) return {u[0] * u[0] - u[1] * u[1], 2.0 * u[0] * u[1], 0.0};
    else
        return {u[0] * u[0] - u[1] * u[1] - u[2] * u[2] + u[3] * u[3], 2.0 * (u[0] * u[1] - u[2] * u[3]),
                2.0 * (u[0] * u[2] + u[1] * u[3])};
}

// L(u) v for a regularised vector v (first three components returned).
template <int M>
Vec3 ks_apply(const double* u, const double* v)
{
    if constexpr (M == 2) return {u[0] * v[0] - u[1] * v[1], u[1] * v[0] + u[0] * v[1], 0.0};
    else
        return {u[0] * v[0] - u[1] * v[1] - u[2] * v[2] + u[3] * v[3],
                u[1] * v[0] + u[0] * v[1] - u[3] * v[2] - u[2] * v[3],
                u[2] * v[0] + u[3] * v[1] + u[0] * v[2] + u[1] * v[3]};
}

// L(u)^T f for a physical vector f (fourth physical component zero).
template <int M>
std::array<double, M> ks_transpose(const double* u, const Vec3& f)
{
    if constexpr (M == 2) return {u[0] * f.x + u[1] * f.y, -u[1] * f.x + u[0] * f.y};
    else
        return {u[0] * f.x + u[1] * f.y + u[2] * f.z, -u[1] * f.x + u[0] * f.y + u[3] * f.z,
                -u[2] * f.x - u[3] * f.y + u[0] * f.z, u[3] * f.x - u[2] * f.y + u[1] * f.z};
}

template <int M>
State<2 * M + 1> to_regularized(const Vec3& x, const Vec3& p, double t)
{
    State<2 * M + 1> y{};
    const double r = norm(x);
    if constexpr (M == 2) {
        if (x.x >= 0.0) {
            y[0] = std::sqrt(0.5 * (r + x.x));
            y[1] = x.y / (2.0 * y[0]);
        } else {
            y[1] = std::sqrt(0.5 * (r - x.x));
            y[0] = x.y / (2.0 * y[1]);
        }
    } else {
        if (x.x >= 0.0) {
            y[0] = std::sqrt(0.5 * (r + x.x));
            y[1] = x.y / (2.0 * y[0]);
            y[2] = x.z / (2.0 * y[0]);
            y[3] = 0.0;
        } else {
            y[1] = std::sqrt(0.5 * (r - x.x));
            y[0] = x.y / (2.0 * y[1]);
            y[2] = 0.0;
            y[3] = x.z / (2.0 * y[1]);
        }
    }
    const auto w = ks_transpose<M>(y.data(), p);
    for (int i = 0; i < M; ++i) y[M + i] = 0.5 * w[i];
    y[2 * M] = t;
    return y;
}

template <int M>
PhaseState from_regularized(const State<2 * M + 1>& y, const Vec3& centre)
{
    const double r = std::inner_product(y.begin(), y.begin() + M, y.begin(), 0.0);
    const Vec3 x = ks_position<M>(y.data());
    const Vec3 p = ks_apply<M>(y.data(), y.data() + M) * (2.0 / r);
    return {centre + x, p, y[2 * M]};
}

template <int M>
struct RegularizedRhs {
    const CentreConfig* config;
    std::size_t centre;
    double energy;

    void operator()(const State<2 * M + 1>& y, State<2 * M + 1>& dy, double) const
    {
        const double* u = y.data();
        double r = 0.0;
        for (int i = 0; i < M; ++i) r += u[i] * u[i];
        const Vec3 q = config->centre(centre) + ks_position<M>(u);
        double v_other = 0.0;
        Vec3 f_other;
        for (std::size_t j = 0; j < config->size(); ++j) {
            if (j == centre) continue;
            const Vec3 d = q - config->centre(j);
            const double dj = norm(d);
            v_other -= config->strength(j) / dj;
            f_other -= d * (config->strength(j) / (dj * dj * dj));
        }
        // Kepler energy relative to the regularised centre.
        const double h = energy - v_other;
        const auto lf = ks_transpose<M>(u, f_other);
        for (int i = 0; i < M; ++i) {
            dy[i] = y[M + i];
            dy[M + i] = 0.5 * h * u[i] + 0.5 * r * lf[i];
        }
        dy[2 * M] = r;
    }
};

template <int M>
RegularizedPassage regularized_impl(const PhaseState& start, const CentreConfig& config,
                                    const IntegratorSettings& settings, std::size_t k, double time_limit,
                                    std::int64_t step_limit)
{
    constexpr std::size_t N = 2 * M + 1;
    RegularizedPassage out;
    const Vec3 centre = config.centre(k);
    const double z = config.strength(k);
    const double r_reg = settings.r_reg_abs(config);
    const Vec3 x0 = start.q - centre;
    const double energy = hamiltonian(start, config);

    out.state = start;
    if (norm(x0) >= r_reg && dot(x0, start.p) >= 0.0) return out;

    const bool radial_fall = z > 0.0 && norm(cross(x0, start.p)) < 1e-14;

    detail::RkCore<N, RegularizedRhs<M>> core({&config, k, energy}, settings.rel_tol, settings.abs_tol);
    State<N> y = to_regularized<M>(x0, start.p, start.t);

    auto radius = [](const State<N>& s) {
        double r = 0.0;
        for (int i = 0; i < M; ++i) r += s[i] * s[i];
        return r;
    };
    auto radial_rate = [](const State<N>& s) {
        double c = 0.0;
        for (int i = 0; i < M; ++i) c += s[i] * s[M + i];
        return c;
    };

    double ds;
    {
        double uu = 0.0, ww = 0.0;
        for (int i = 0; i < M; ++i) {
            uu += y[i] * y[i];
            ww += y[M + i] * y[M + i];
        }
        double v_other = 0.0;
        for (std::size_t j = 0; j < config.size(); ++j)
            if (j != k) v_other -= config.strength(j) / norm(start.q - config.centre(j));
        const double omega = std::sqrt(ww / uu) + std::sqrt(0.5 * std::abs(energy - v_other));
        ds = 0.02 / omega;
    }
    core.set_min_step(1e-15 * ds);

    double s = 0.0;
    while (true) {
        if (out.steps >= step_limit || y[2 * M] >= time_limit) {
            out.status = RegularizedPassage::Status::Budget;
            out.state = from_regularized<M>(y, centre);
            out.energy_error = std::abs(hamiltonian(out.state, config) - energy);
            return out;
        }
        const State<N> y0 = y;
        State<N> y1;
        const double used = core.advance(y0, s, ds, y1);
        ++out.steps;

        const double c0 = radial_rate(y0);
        const double c1 = radial_rate(y1);
        if (c0 < 0.0 && c1 >= 0.0) {
            const double tau = detail::locate_root(core, y0, s, used, radial_rate, c0, c1);
            const State<N> ym = core.exact(y0, s, tau);
            if (radial_fall) {
                out.status = RegularizedPassage::Status::Collision;
                out.state = {centre + ks_position<M>(ym.data()), Vec3{}, ym[2 * M]};
                TrajectoryEvent ev{ym[2 * M], EventKind::Collision, static_cast<int>(k), radius(ym), out.state};
                out.events.push_back(ev);
                return out;
            }
            if (z < 0.0 && radius(ym) < 1e-300) throw IntegrationError("repelling centre reached the numeric floor");
            out.events.push_back({ym[2 * M], EventKind::CloseApproach, static_cast<int>(k), radius(ym),
                                  from_regularized<M>(ym, centre)});
        }

        const double g0 = radius(y0) - r_reg;
        const double g1 = radius(y1) - r_reg;
        if (g0 < 0.0 && g1 >= 0.0) {
            const double tau = detail::locate_root(
                core, y0, s, used, [&](const State<N>& v) { return radius(v) - r_reg; }, g0, g1);
            y = core.exact(y0, s, tau);
            out.state = from_regularized<M>(y, centre);
            // H in physical variables loses ~eps/r near the centre, so only the exit is compared.
            out.energy_error = std::abs(hamiltonian(out.state, config) - energy);
            if (settings.record_samples) out.samples.push_back(out.state);
            return out;
        }
        y = y1;
        s += used;
        if (settings.record_samples) out.samples.push_back(from_regularized<M>(y, centre));
    }
}

} // namespace

PhaseState step_adaptive(const PhaseState& state, const CentreConfig& config, const IntegratorSettings& settings,
                         double& h)
{
    detail::RkCore<6, PhysicalRhs> core({&config}, settings.rel_tol, settings.abs_tol);
    if (!(h != 0.0)) h = initial_step(state, config);
    State<6> out;
    const double used = core.advance(pack(state), state.t, h, out);
    return unpack(out, state.t + used);
}

RegularizedPassage step_regularized(const PhaseState& state, const CentreConfig& config,
                                    const IntegratorSettings& settings, std::size_t centre, double time_limit,
                                    std::int64_t step_limit)
{
    if (centre >= config.size()) throw std::out_of_range("centre index");
    if (config.dim() == 2) return regularized_impl<2>(state, config, settings, centre, time_limit, step_limit);
    return regularized_impl<4>(state, config, settings, centre, time_limit, step_limit);
}

Trajectory propagate(const PhaseState& start, const CentreConfig& config, const IntegratorSettings& settings,
                     const StopRule& stop)
{
    settings.validate(config);
    Trajectory tr;
    const double r_reg = settings.r_reg_abs(config);
    const double rho = settings.rho_event_abs(config);
    const double r_stop = stop.escape_radius > 0.0 ? stop.escape_radius : settings.r_escape_abs(config);
    const double t_end = start.t + settings.max_time;
    const double e0 = hamiltonian(start, config);
    const double e_scale = 0.5 * norm2(start.p) + std::abs(potential(start.q, config));
    tr.energy_start = e0;

    PhaseState s = start;
    if (settings.record_samples) tr.samples.push_back(s);

    auto hyperbolic = [&](const PhaseState& st) {
        return !stop.require_hyperbolic || kepler_hamiltonian(st, config.z_total()) > 0.0;
    };
    auto finish = [&](StopReason reason) {
        tr.stop = reason;
        tr.final_state = s;
        tr.degraded = tr.energy_drift > 1e3 * settings.rel_tol * e_scale;
        return tr;
    };

    if (norm(s.q) >= r_stop && dot(s.q, s.p) > 0.0 && hyperbolic(s)) return finish(StopReason::Escaped);

    detail::RkCore<6, PhysicalRhs> core({&config}, settings.rel_tol, settings.abs_tol);
    double h = initial_step(s, config);
    core.set_min_step(1e-15 * h);
    bool pending_regularized = false;
    int just_exited = -1;

    while (true) {
        if (tr.steps >= settings.max_steps) {
            tr.events.push_back({s.t, EventKind::BudgetExhausted, -1, 0.0, s});
            return finish(StopReason::MaxSteps);
        }
        if (s.t >= t_end) {
            tr.events.push_back({s.t, EventKind::BudgetExhausted, -1, 0.0, s});
            return finish(StopReason::MaxTime);
        }

        const auto near = nearest_centre(s.q, config);
        if (pending_regularized || (near.distance < r_reg && static_cast<int>(near.index) != just_exited)) {
            pending_regularized = false;
            auto pass = step_regularized(s, config, settings, near.index, t_end, settings.max_steps - tr.steps);
            ++tr.regularized_passages;
            tr.steps += pass.steps;
            for (auto& e : pass.events) tr.events.push_back(e);
            for (auto& p : pass.samples) tr.samples.push_back(p);
            if (pass.status == RegularizedPassage::Status::Collision) {
                s = pass.state;
                return finish(StopReason::Collision);
            }
            tr.energy_drift = std::max(tr.energy_drift, std::abs(hamiltonian(pass.state, config) - e0));
            s = pass.state;
            just_exited = static_cast<int>(near.index);
            continue;
        }
        just_exited = -1;

        const State<6> y0 = pack(s);
        const double t0 = s.t;
        double trial = std::min(h, t_end - t0);
        const bool clamped = trial < h;
        State<6> y1;
        double used = core.advance(y0, t0, trial, y1);
        h = clamped ? std::max(h, trial) : trial;

        // Truncating events: regularisation entry and escape.
        enum class Cut { None, Regularize, Escape } cut = Cut::None;
        double cut_at = used;
        for (std::size_t k = 0; k < config.size(); ++k) {
            auto g = [&](const State<6>& v) { return norm(Vec3{v[0], v[1], v[2]} - config.centre(k)) - r_reg; };
            const double g0 = g(y0);
            const double g1 = g(y1);
            if (g0 >= 0.0 && g1 < 0.0) {
                const double tau = detail::locate_root(core, y0, t0, used, g, g0, g1);
                if (tau < cut_at) {
                    cut_at = tau;
                    cut = Cut::Regularize;
                }
            }
        }
        {
            auto g = [&](const State<6>& v) { return norm(Vec3{v[0], v[1], v[2]}) - r_stop; };
            const double g0 = g(y0);
            const double g1 = g(y1);
            if (g0 < 0.0 && g1 >= 0.0) {
                const double tau = detail::locate_root(core, y0, t0, used, g, g0, g1);
                const PhaseState at = unpack(core.exact(y0, t0, tau), t0 + tau);
                if (tau <= cut_at && dot(at.q, at.p) > 0.0 && hyperbolic(at)) {
                    cut_at = tau;
                    cut = Cut::Escape;
                }
            }
        }
        if (cut != Cut::None) {
            used = cut_at;
            y1 = core.exact(y0, t0, used);
        }

        std::vector<TrajectoryEvent> found;
        for (double radius : settings.sphere_radii) {
            if (cut == Cut::Escape && radius == r_stop) continue;
            auto g = [&](const State<6>& v) { return norm(Vec3{v[0], v[1], v[2]}) - radius; };
            const double g0 = g(y0);
            const double g1 = g(y1);
            if ((g0 < 0.0) != (g1 < 0.0)) {
                const double tau = detail::locate_root(core, y0, t0, used, g, g0, g1);
                found.push_back({t0 + tau, g1 >= 0.0 ? EventKind::SphereExit : EventKind::SphereEnter, -1, radius,
                                 unpack(core.exact(y0, t0, tau), t0 + tau)});
            }
        }
        for (std::size_t k = 0; k < config.size(); ++k) {
            const Vec3 c = config.centre(k);
            auto g = [&](const State<6>& v) { return dot(Vec3{v[0], v[1], v[2]} - c, Vec3{v[3], v[4], v[5]}); };
            const double g0 = g(y0);
            const double g1 = g(y1);
            if (g0 < 0.0 && g1 >= 0.0) {
                const double tau = detail::locate_root(core, y0, t0, used, g, g0, g1);
                const PhaseState at = unpack(core.exact(y0, t0, tau), t0 + tau);
                const double d = norm(at.q - c);
                if (d < rho) found.push_back({at.t, EventKind::CloseApproach, static_cast<int>(k), d, at});
            }
        }
        std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
        for (auto& e : found) tr.events.push_back(e);

        s = unpack(y1, t0 + used);
        ++tr.steps;
        tr.energy_drift = std::max(tr.energy_drift, std::abs(hamiltonian(s, config) - e0));
        if (settings.record_samples) tr.samples.push_back(s);

        if (cut == Cut::Escape) {
            tr.events.push_back({s.t, EventKind::SphereExit, -1, r_stop, s});
            return finish(StopReason::Escaped);
        }
        if (cut == Cut::None && norm(s.q) >= r_stop && dot(s.q, s.p) > 0.0 && hyperbolic(s)) {
            // Started outside the escape sphere and turned outward without crossing it.
            tr.events.push_back({s.t, EventKind::SphereExit, -1, norm(s.q), s});
            return finish(StopReason::Escaped);
        }
        if (cut == Cut::Regularize) pending_regularized = true;
        if (stop.custom && stop.custom(s)) return finish(StopReason::Predicate);
    }
}

} // namespace ncentre
