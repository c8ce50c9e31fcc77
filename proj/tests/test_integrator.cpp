#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "ncentre/integrator.hpp"
#include "ncentre/kepler.hpp"

using namespace ncentre;

namespace {

CentreConfig unit_triangle()
{
    return validate_config(2, {{0.0, 0.0}, {1.0, 0.0}, {0.5, std::sqrt(3.0) / 2.0}}, {1.0, 1.0, 1.0});
}

// Straight-line beam along `dir` with offset `b` (planar), started at distance `far`
// from the centroid and scaled to energy E.
PhaseState beam(const CentreConfig& c, double energy, double angle, double b, double far)
{
    const Vec3 d{std::cos(angle), std::sin(angle), 0.0};
    const Vec3 n{-d.y, d.x, 0.0};
    const Vec3 q = c.centroid() - d * far + n * b;
    const double speed = std::sqrt(2.0 * (energy - potential(q, c)));
    return {q, d * speed, 0.0};
}

double angle_between(const Vec3& a, const Vec3& b) { return std::atan2(norm(cross(a, b)), dot(a, b)); }

IntegratorSettings quiet()
{
    IntegratorSettings st;
    st.record_samples = false;
    return st;
}

} // namespace

TEST_CASE("settings validation")
{
    const auto tri = unit_triangle();
    IntegratorSettings st;
    CHECK_NOTHROW(st.validate(tri));
    st.r_reg = 0.6;
    CHECK_THROWS_AS(st.validate(tri), ConfigError);
    st = {};
    st.r_escape = 1.5;
    CHECK_THROWS_AS(st.validate(tri), ConfigError);
    st = {};
    st.rho_event = 0.01;
    CHECK_THROWS_AS(st.validate(tri), ConfigError);
}

TEST_CASE("step_adaptive: near-free motion far from a neutral pair")
{
    const auto dipole = validate_config(2, {{-0.5, 0}, {0.5, 0}}, {1.0, -1.0});
    PhaseState s{{1e6, 3e5, 0}, {0.7, -0.2, 0}, 0};
    const auto st = quiet();
    double h = 0.0;
    for (int i = 0; i < 20; ++i) {
        const auto next = step_adaptive(s, dipole, st, h);
        const double dt = next.t - s.t;
        CHECK(norm(next.p - s.p) <= 1e-12);
        CHECK(norm(next.q - (s.q + s.p * dt)) <= 1e-12 * std::max(1.0, dt));
        s = next;
    }
}

TEST_CASE("step_adaptive: circular orbit closes after one period")
{
    const auto one = validate_config(2, {{0, 0}}, {1.0});
    IntegratorSettings st = quiet();
    st.rel_tol = 1e-10;
    st.max_time = 2 * std::numbers::pi;
    st.r_escape = 100.0;
    const PhaseState c{{1, 0, 0}, {0, 1, 0}, 0};
    const auto tr = propagate(c, one, st);
    CHECK(tr.stop == StopReason::MaxTime);
    CHECK(tr.final_state.t == doctest::Approx(2 * std::numbers::pi).epsilon(1e-15));
    CHECK(norm(tr.final_state.q - c.q) < 1e-8);
    CHECK(norm(tr.final_state.p - c.p) < 1e-8);
    CHECK(tr.events.size() == 1);
    CHECK(tr.events[0].kind == EventKind::BudgetExhausted);
}

TEST_CASE("step_adaptive: step then reverse step")
{
    const auto tri = unit_triangle();
    const auto st = quiet();
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 50; ++i) {
        PhaseState s{{u(rng), u(rng), 0}, {u(rng), u(rng), 0}, 0};
        if (nearest_centre(s.q, tri).distance < 0.2) continue;
        double h = 0.0;
        const auto a = step_adaptive(s, tri, st, h);
        double back_h = a.t - s.t;
        const auto b = step_adaptive(reversed(a), tri, st, back_h);
        const PhaseState r = reversed(b);
        // Only meaningful when the reverse step was taken at the matched length.
        if (std::abs((b.t - (-a.t)) - (a.t - s.t)) > 1e-15 * a.t) continue;
        CHECK(norm(r.q - s.q) <= 1e-10);
        CHECK(norm(r.p - s.p) <= 1e-10);
    }
}

TEST_CASE("radial infall from rest collides at the free-fall time")
{
    const auto one = validate_config(2, {{0, 0}}, {1.0});
    const auto st = quiet();
    const auto tr = propagate({{1, 0, 0}, {0, 0, 0}, 0}, one, st);
    REQUIRE(tr.stop == StopReason::Collision);
    CHECK(tr.final_state.t == doctest::Approx(std::numbers::pi / std::sqrt(8.0)).epsilon(1e-10));
    REQUIRE(!tr.events.empty());
    CHECK(tr.events.back().kind == EventKind::Collision);
    CHECK(tr.events.back().centre == 0);

    const auto one3 = validate_config(3, {{0, 0, 0}}, {1.0});
    const auto tr3 = propagate({{0, 0, 1}, {0, 0, 0}, 0}, one3, st);
    REQUIRE(tr3.stop == StopReason::Collision);
    CHECK(tr3.final_state.t == doctest::Approx(std::numbers::pi / std::sqrt(8.0)).epsilon(1e-10));
}

TEST_CASE("head-on fall along the axis of a pair ends in a collision")
{
    const auto two = validate_config(2, {{-0.5, 0}, {0.5, 0}}, {1.0, 1.0});
    const auto tr = propagate({{-20, 0, 0}, {std::sqrt(20.0), 0, 0}, 0}, two, quiet());
    REQUIRE(tr.stop == StopReason::Collision);
    CHECK(tr.events.back().centre == 0);
}

TEST_CASE("near-collision hyperbolic passage conserves energy and matches Rutherford")
{
    for (int dim : {2, 3}) {
        const auto one = dim == 2 ? validate_config(2, {{0, 0}}, {1.0}) : validate_config(3, {{0, 0, 0}}, {1.0});
        IntegratorSettings st = quiet();
        st.r_escape = 50.0;
        const double energy = 10.0;
        const double b = 1e-6;
        const Vec3 q{-20.0, b, dim == 3 ? 0.5 * b : 0.0};
        const double speed = std::sqrt(2 * (energy + 1.0 / norm(q)));
        const PhaseState s{q, {speed, 0, 0}, 0};
        const auto tr = propagate(s, one, st);
        REQUIRE(tr.stop == StopReason::Escaped);
        CHECK(tr.regularized_passages >= 1);
        const double e1 = hamiltonian(tr.final_state, one);
        CHECK(std::abs(e1 - energy) / energy <= 1e-8);

        const auto el0 = elements_from_state(s, 1.0);
        const auto el1 = elements_from_state(tr.final_state, 1.0);
        const double k = std::sqrt(2 * el0.energy);
        const double bb = norm(el0.ang_mom) / k;
        const double theta_pred = 2 * std::atan(1.0 / (bb * k * k));
        const double theta = angle_between(kepler_asymptotic_momentum(el0, Branch::Incoming),
                                           kepler_asymptotic_momentum(el1, Branch::Outgoing));
        CHECK(std::abs(theta - theta_pred) <= 1e-6);

        int approaches = 0;
        for (const auto& e : tr.events)
            if (e.kind == EventKind::CloseApproach) {
                ++approaches;
                const double e_ecc = norm(el0.lrl);
                const double r_p = norm2(el0.ang_mom) / (1.0 + e_ecc);
                CHECK(e.dist == doctest::Approx(r_p).epsilon(1e-6));
            }
        CHECK(approaches == 1);
    }
}

TEST_CASE("step_regularized: passage near one of two centres")
{
    const auto two = validate_config(2, {{-1, 0}, {1, 0}}, {1.0, 1.0});
    IntegratorSettings st = quiet();
    const double r_reg = st.r_reg_abs(two);
    for (double b : {1e-3, 1e-2, 5e-2}) {
        const Vec3 x{-0.99 * r_reg, b * r_reg, 0};
        const Vec3 q = two.centre(1) + x;
        const double energy = 2.0;
        const double speed = std::sqrt(2 * (energy - potential(q, two)));
        const PhaseState s{q, Vec3{1, 0, 0} * speed, 0};
        const auto pass = step_regularized(s, two, st, 1);
        REQUIRE(pass.status == RegularizedPassage::Status::Exited);
        CHECK(norm(pass.state.q - two.centre(1)) == doctest::Approx(r_reg).epsilon(1e-12));
        CHECK(dot(pass.state.q - two.centre(1), pass.state.p) > 0.0);
        CHECK(pass.energy_error <= 10 * st.rel_tol * energy);
        REQUIRE(pass.events.size() == 1);
        CHECK(pass.events[0].kind == EventKind::CloseApproach);
        CHECK(pass.events[0].centre == 1);
    }
}

TEST_CASE("step_regularized matches the Kepler flow for a lone centre")
{
    const auto one = validate_config(3, {{0, 0, 0}}, {1.0});
    const auto st = quiet();
    const PhaseState s{{-0.04, 0.001, 0.0005}, {8.0, 1.0, -0.5}, 0};
    const auto pass = step_regularized(s, one, st, 0);
    REQUIRE(pass.status == RegularizedPassage::Status::Exited);
    const auto k = kepler_propagate(s, 1.0, pass.state.t);
    CHECK(norm(k.q - pass.state.q) < 1e-12);
    CHECK(norm(k.p - pass.state.p) < 1e-9);
}

TEST_CASE("propagate: single-centre beams and the close-approach itinerary")
{
    const auto one = validate_config(2, {{0, 0}}, {1.0});
    const auto st = quiet();
    const double rho = st.rho_event_abs(one);
    for (double b : {0.01, 0.1, 1.0, 4.0}) {
        const auto s = beam(one, 2.0, 0.3, b, 15.0);
        const auto tr = propagate(s, one, st);
        REQUIRE(tr.stop == StopReason::Escaped);
        CHECK(tr.events.back().kind == EventKind::SphereExit);
        const auto el = elements_from_state(s, 1.0);
        const double r_p = norm2(el.ang_mom) / (1.0 + norm(el.lrl));
        std::vector<int> itinerary;
        for (const auto& e : tr.events)
            if (e.kind == EventKind::CloseApproach) itinerary.push_back(e.centre);
        if (r_p < rho) CHECK(itinerary == std::vector<int>{0});
        else CHECK(itinerary.empty());
    }
}

TEST_CASE("propagate: bound circular orbit runs out of time")
{
    const auto one = validate_config(2, {{0, 0}}, {1.0});
    IntegratorSettings st = quiet();
    st.max_time = 200.0;
    const auto tr = propagate({{1, 0, 0}, {0, 1, 0}, 0}, one, st);
    CHECK(tr.stop == StopReason::MaxTime);
    CHECK(tr.final_state.t == doctest::Approx(200.0));
    for (const auto& e : tr.events) CHECK(e.kind != EventKind::SphereExit);

    st.max_time = std::numeric_limits<double>::infinity();
    st.max_steps = 100;
    const auto cut = propagate({{1, 0, 0}, {0, 1, 0}, 0}, one, st);
    CHECK(cut.stop == StopReason::MaxSteps);
    CHECK(cut.steps == 100);
}

TEST_CASE("propagate: triangle beams conserve energy and keep ordered samples")
{
    const auto tri = unit_triangle();
    IntegratorSettings st;
    const double rho = st.rho_event_abs(tri);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ang(0.0, 2 * std::numbers::pi), off(-1.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        const auto s = beam(tri, 10.0, ang(rng), off(rng), 15.0);
        const auto tr = propagate(s, tri, st);
        CHECK(tr.stop == StopReason::Escaped);
        CHECK(tr.energy_drift <= 1e-9 * 10.0);
        CHECK_FALSE(tr.degraded);
        for (std::size_t j = 1; j < tr.samples.size(); ++j) CHECK(tr.samples[j].t > tr.samples[j - 1].t);
        for (const auto& e : tr.events)
            if (e.kind == EventKind::CloseApproach) {
                CHECK(e.dist < rho);
                CHECK(norm(e.state.q - tri.centre(e.centre)) == doctest::Approx(e.dist).epsilon(1e-12));
            }
    }
}

TEST_CASE("propagate: drift shrinks with the tolerance")
{
    const auto tri = unit_triangle();
    const auto s = beam(tri, 10.0, 0.4, 0.2, 15.0);
    IntegratorSettings loose = quiet();
    loose.rel_tol = 1e-8;
    loose.abs_tol = 1e-11;
    IntegratorSettings tight = loose;
    tight.rel_tol = 1e-10;
    tight.abs_tol = 1e-13;
    const auto a = propagate(s, tri, loose);
    const auto b = propagate(s, tri, tight);
    CHECK(b.energy_drift < a.energy_drift);
    CHECK(norm(a.final_state.p - b.final_state.p) < 1e-5);
}

TEST_CASE("propagate: time reversal recovers the start")
{
    const auto tri = unit_triangle();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ang(0.0, 2 * std::numbers::pi), off(-1.0, 1.0);
    int regularized = 0;
    for (int i = 0; i < 20; ++i) {
        const auto s = beam(tri, 10.0, ang(rng), off(rng), 15.0);
        IntegratorSettings st = quiet();
        const auto fwd = propagate(s, tri, st);
        REQUIRE(fwd.stop == StopReason::Escaped);
        st.max_time = fwd.final_state.t;
        st.r_escape = 1e6;
        auto end = reversed(fwd.final_state);
        end.t = 0.0;
        const auto bwd = propagate(end, tri, st);
        CHECK(bwd.stop == StopReason::MaxTime);
        const auto back = reversed(bwd.final_state);
        const double tol = fwd.regularized_passages > 0 ? 1e-4 : 1e-6;
        regularized += fwd.regularized_passages > 0;
        CHECK(norm(back.q - s.q) <= tol * norm(s.q));
        CHECK(norm(back.p - s.p) <= tol * norm(s.p));
    }
    MESSAGE("orbits with regularised passages: " << regularized);
}

TEST_CASE("n=1 conserves angular momentum and the Runge-Lenz vector")
{
    const auto one = validate_config(3, {{0.3, -0.2, 0.1}}, {1.5});
    IntegratorSettings st;
    st.max_time = 60.0;
    const PhaseState s{{1.3, 0.4, -0.5}, {0.1, 0.9, 0.35}, 0};
    const auto tr = propagate(s, one, st);
    const Vec3 c = one.centre(0);
    auto shifted = [&](const PhaseState& x) { return PhaseState{x.q - c, x.p, x.t}; };
    const auto e0 = elements_from_state(shifted(s), 1.5);
    for (const auto& x : tr.samples) {
        const auto e = elements_from_state(shifted(x), 1.5);
        CHECK(norm(e.ang_mom - e0.ang_mom) <= 1e-9 * norm(e0.ang_mom));
        CHECK(norm(e.lrl - e0.lrl) <= 1e-9 * norm(e0.lrl));
    }
}

TEST_CASE("two centres: the elliptic-coordinate separation constant is conserved")
{
    // Centres Z1 at (a,0,0) and Z2 at (-a,0,0):
    // G = |L|^2 + a^2 p_x^2 - 2 a x (Z1/r1 - Z2/r2).
    const double a = 1.0, z1 = 1.0, z2 = 0.6;
    const auto two = validate_config(3, {{a, 0, 0}, {-a, 0, 0}}, {z1, z2});
    auto sep = [&](const PhaseState& s) {
        const double r1 = norm(s.q - Vec3{a, 0, 0});
        const double r2 = norm(s.q - Vec3{-a, 0, 0});
        return norm2(cross(s.q, s.p)) + a * a * s.p.x * s.p.x - 2 * a * s.q.x * (z1 / r1 - z2 / r2);
    };
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int i = 0; i < 10; ++i) {
        PhaseState s{{u(rng), u(rng), u(rng)}, {u(rng), u(rng), u(rng)}, 0};
        if (nearest_centre(s.q, two).distance < 0.3) continue;
        IntegratorSettings st;
        st.max_time = 40.0;
        const auto tr = propagate(s, two, st);
        const double g0 = sep(s);
        double scale = std::abs(g0);
        for (const auto& x : tr.samples) scale = std::max(scale, norm2(cross(x.q, x.p)) + a * a * x.p.x * x.p.x);
        for (const auto& x : tr.samples) CHECK(std::abs(sep(x) - g0) <= 1e-7 * scale);
    }
}

TEST_CASE("collinear spatial centres conserve the axial angular momentum")
{
    const auto line = validate_config(3, {{0, 0, -1}, {0, 0, 0.5}, {0, 0, 2}}, {1.0, 0.7, 1.2});
    REQUIRE(line.axis().has_value());
    const Vec3 axis = *line.axis();
    const Vec3 base = line.centre(0);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 10; ++i) {
        PhaseState s{{u(rng), u(rng), u(rng)}, {u(rng), u(rng), u(rng)}, 0};
        if (nearest_centre(s.q, line).distance < 0.3) continue;
        IntegratorSettings st;
        st.max_time = 50.0;
        const auto tr = propagate(s, line, st);
        const double l0 = dot(cross(s.q - base, s.p), axis);
        if (std::abs(l0) < 0.05) continue;
        for (const auto& x : tr.samples) CHECK(std::abs(dot(cross(x.q - base, x.p), axis) - l0) <= 1e-9 * std::abs(l0));
    }
}
