#include "ncentre/kepler.hpp"

#include <cmath>
#include <limits>

namespace ncentre {

namespace detail {

Stumpff stumpff(double x)
{
    int halvings = 0;
    while (std::abs(x) > 0.1) {
        x *= 0.25;
        ++halvings;
    }
    // Series for c2, c3 on the reduced argument.
    double c2 = 0.0;
    double c3 = 0.0;
    double term2 = 0.5;        // 1/2!
    double term3 = 1.0 / 6.0;  // 1/3!
    for (int j = 0; j < 12; ++j) {
        c2 += term2;
        c3 += term3;
        term2 *= -x / ((2.0 * j + 3.0) * (2.0 * j + 4.0));
        term3 *= -x / ((2.0 * j + 4.0) * (2.0 * j + 5.0));
    }
    double c1 = 1.0 - x * c3;
    double c0 = 1.0 - x * c2;
    for (int i = 0; i < halvings; ++i) {
        const double n3 = 0.25 * (c2 + c0 * c3);
        const double n2 = 0.5 * c1 * c1;
        const double n1 = c0 * c1;
        const double n0 = 2.0 * c0 * c0 - 1.0;
        c0 = n0;
        c1 = n1;
        c2 = n2;
        c3 = n3;
    }
    return {c0, c1, c2, c3};
}

} // namespace detail

KeplerElements elements_from_state(const PhaseState& state, double z)
{
    const double r = norm(state.q);
    if (r == 0.0) throw DomainError(-1, "Kepler elements undefined at the origin");
    KeplerElements el;
    el.z = z;
    el.energy = 0.5 * norm2(state.p) - z / r;
    el.ang_mom = cross(state.q, state.p);
    el.lrl = cross(state.p, el.ang_mom) - state.q * (z / r);
    el.momentum = state.p;
    return el;
}

Vec3 kepler_asymptotic_momentum(const KeplerElements& el, Branch branch)
{
    if (el.z == 0.0) {
        if (norm2(el.momentum) == 0.0) throw KeplerError("free particle at rest has no asymptote");
        return el.momentum;
    }
    if (!(el.energy > 0.0)) throw KeplerError("bound Kepler orbit has no asymptotic momentum");
    const double l2 = norm2(el.ang_mom);
    if (l2 == 0.0 && el.z > 0.0) throw KeplerError("collision-line Kepler orbit");
    // p x L = A + s (z/k) p with s = +1 outgoing, -1 incoming; solved in the orbital plane.
    const double k = std::sqrt(2.0 * el.energy);
    const double a2 = norm2(el.lrl);
    const double sign = branch == Branch::Outgoing ? -1.0 : 1.0;
    return (cross(el.ang_mom, el.lrl) * k + el.lrl * (sign * el.z)) * (k / a2);
}

namespace {

struct UniversalPoint {
    double time;    // elapsed time at fictitious time s
    double radius;  // r(s)
    double g0, g1, g2, g3;
};

UniversalPoint universal_at(double s, double r0, double eta0, double z, double beta)
{
    const auto c = detail::stumpff(beta * s * s);
    UniversalPoint u{};
    u.g0 = c.c0;
    u.g1 = s * c.c1;
    u.g2 = s * s * c.c2;
    u.g3 = s * s * s * c.c3;
    u.time = r0 * u.g1 + eta0 * u.g2 + z * u.g3;
    u.radius = r0 * u.g0 + eta0 * u.g1 + z * u.g2;
    return u;
}

PhaseState kepler_leg(const PhaseState& state, double z, double dt)
{
    const double r0 = norm(state.q);
    if (r0 == 0.0) throw DomainError(-1, "Kepler propagation from the origin");
    if (z == 0.0 || dt == 0.0) return {state.q + state.p * dt, state.p, state.t + dt};

    const double eta0 = dot(state.q, state.p);
    const double beta = 2.0 * z / r0 - norm2(state.p);

    // t(s) is strictly increasing (dt/ds = r > 0): bracket, then safeguarded Newton.
    const double dir = dt > 0.0 ? 1.0 : -1.0;
    double lo = 0.0;
    double hi = dir * std::abs(dt) / r0;
    auto residual = [&](double s) { return universal_at(s, r0, eta0, z, beta).time - dt; };
    for (int i = 0; i < 200 && dir * residual(hi) < 0.0; ++i) {
        lo = hi;
        hi *= 2.0;
    }
    if (hi < lo) std::swap(lo, hi);

    double s = 0.5 * (lo + hi);
    UniversalPoint u = universal_at(s, r0, eta0, z, beta);
    bool converged = false;
    for (int iter = 0; iter < 50; ++iter) {
        const double f = u.time - dt;
        if (std::abs(f) <= 2e-16 * std::abs(dt)) {
            converged = true;
            break;
        }
        if (f < 0.0) lo = s; else hi = s;
        double next = s - f / u.radius;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - s) <= 1e-16 * std::abs(s)) {
            s = next;
            u = universal_at(s, r0, eta0, z, beta);
            converged = true;
            break;
        }
        s = next;
        u = universal_at(s, r0, eta0, z, beta);
    }
    if (!converged) {
        for (int iter = 0; iter < 200 && hi - lo > 1e-16 * std::abs(hi); ++iter) {
            s = 0.5 * (lo + hi);
            u = universal_at(s, r0, eta0, z, beta);
            if (u.time - dt < 0.0) lo = s; else hi = s;
        }
    }

    if (z > 0.0 && norm2(cross(state.q, state.p)) == 0.0) {
        // Radial attractive motion: r(s) stays non-negative in universal variables and
        // bounces off zero, so a collision shows up as r' turning from falling to rising.
        const int probes = 256;
        double prev = dir * eta0;
        for (int i = 1; i <= probes; ++i) {
            const auto ui = universal_at(s * i / probes, r0, eta0, z, beta);
            const double rate = dir * (eta0 * ui.g0 + (z - beta * r0) * ui.g1);
            if (prev < 0.0 && rate > 0.0) throw KeplerError("Kepler orbit passes through the origin");
            prev = rate;
        }
    }

    const double f = 1.0 - z * u.g2 / r0;
    const double g = r0 * u.g1 + eta0 * u.g2;
    const double fdot = -z * u.g1 / (u.radius * r0);
    const double gdot = 1.0 - z * u.g2 / u.radius;
    return {state.q * f + state.p * g, state.q * fdot + state.p * gdot, state.t + dt};
}

} // namespace

PhaseState kepler_propagate(const PhaseState& state, double z, double dt)
{
    if (norm(state.q) == 0.0) throw DomainError(-1, "Kepler propagation from the origin");
    if (z == 0.0 || dt == 0.0) return {state.q + state.p * dt, state.p, state.t + dt};
    // Legs of at most ~ r/|p| keep |beta| s^2 of order one, which avoids the
    // cancellation between exponentially large terms on long unbound arcs.
    if (z > 0.0 && norm2(cross(state.q, state.p)) == 0.0) return kepler_leg(state, z, dt);
    PhaseState s = state;
    double remaining = dt;
    const double dir = dt > 0.0 ? 1.0 : -1.0;
    while (remaining != 0.0) {
        const double r = norm(s.q);
        const double leg_max = 0.5 * r / (norm(s.p) + std::sqrt(std::abs(z) / r));
        const double leg = std::abs(remaining) <= leg_max ? remaining : dir * leg_max;
        const double t_before = s.t;
        s = kepler_leg(s, z, leg);
        s.t = t_before + leg;
        remaining = std::abs(remaining) <= leg_max ? 0.0 : remaining - leg;
    }
    s.t = state.t + dt;
    return s;
}

double kepler_time_in_ball(const KeplerElements& el, double radius)
{
    if (!(el.energy > 0.0) && el.z != 0.0) throw KeplerError("bound Kepler orbit: ball time unbounded");
    const double l2 = norm2(el.ang_mom);
    if (el.z == 0.0) {
        const double p2 = norm2(el.momentum);
        if (p2 == 0.0) throw KeplerError("free particle at rest");
        const double b2 = l2 / p2;
        if (radius * radius < b2) throw KeplerError("ball not reached");
        return 2.0 * std::sqrt(radius * radius - b2) / std::sqrt(p2);
    }
    if (l2 == 0.0 && el.z > 0.0) throw KeplerError("collision-line Kepler orbit");

    const double az = std::abs(el.z);
    const double a = az / (2.0 * el.energy);
    const double e = std::sqrt(norm2(el.lrl)) / az;
    const double scale = std::sqrt(a * a * a / az);
    if (el.z > 0.0) {
        const double periapsis = l2 / (el.z * (1.0 + e));
        if (radius < periapsis) throw KeplerError("ball not reached");
        const double x = (radius - periapsis) / (a * e);  // cosh F - 1
        const double big_f = std::log1p(x + std::sqrt(x * (x + 2.0)));
        return 2.0 * scale * (e * std::sinh(big_f) - big_f);
    }
    const double periapsis = a * (e + 1.0);
    if (radius < periapsis) throw KeplerError("ball not reached");
    const double x = (radius - periapsis) / (a * e);
    const double big_f = std::log1p(x + std::sqrt(x * (x + 2.0)));
    return 2.0 * scale * (e * std::sinh(big_f) + big_f);
}

PhaseState kepler_state_on_incoming_asymptote(double z, double energy, const Vec3& direction,
                                              const Vec3& impact, double radius)
{
    if (!(energy > 0.0)) throw KeplerError("incoming asymptote requires positive energy");
    const double k = std::sqrt(2.0 * energy);
    const Vec3 u = direction / norm(direction);
    const Vec3 b = impact - u * dot(impact, u);
    const Vec3 p_in = u * k;
    const Vec3 l = cross(b, p_in);

    if (norm2(l) == 0.0) {
        // Radial beam straight at the origin.
        const double speed2 = 2.0 * (energy + z / radius);
        if (speed2 <= 0.0) throw KeplerError("radius not reachable on this orbit");
        return {-u * radius, u * std::sqrt(speed2), 0.0};
    }
    // A = p_in x L + (z/k) p_in, and on the orbit A.q = L^2 - z r.
    const Vec3 a_vec = cross(p_in, l) + p_in * (z / k);
    const double a_norm = norm(a_vec);
    const Vec3 a_hat = a_vec / a_norm;
    const Vec3 l_hat = l / norm(l);
    const Vec3 side = cross(l_hat, a_hat);
    const double c = (norm2(l) - z * radius) / (a_norm * radius);
    if (std::abs(c) > 1.0) throw KeplerError("radius not reachable on this orbit");
    // 1 + c cancels for nearly radial attractive beams; |A| - z = 2E L^2 / (|A| + z).
    const double a_minus_z = z > 0.0 ? 2.0 * energy * norm2(l) / (a_norm + z) : a_norm - z;
    const double one_plus_c = (norm2(l) + radius * a_minus_z) / (a_norm * radius);
    const double s = std::sqrt(std::max(0.0, (1.0 - c) * one_plus_c));
    // Inbound: the position lags A, i.e. (q x A).L > 0 on the approach leg.
    const Vec3 q_hat = a_hat * c - side * s;
    const double pr2 = 2.0 * (energy + z / radius) - norm2(l) / (radius * radius);
    const Vec3 p = -q_hat * std::sqrt(std::max(0.0, pr2)) + cross(l, q_hat) / radius;
    return {q_hat * radius, p, 0.0};
}

} // namespace ncentre
