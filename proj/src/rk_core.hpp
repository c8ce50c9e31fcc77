#pragma once

// Controlled embedded Runge-Kutta core shared by the physical and regularised flows.

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include <boost/numeric/odeint/stepper/runge_kutta_fehlberg78.hpp>

#include "ncentre/integrator.hpp"

namespace ncentre::detail {

template <std::size_t N>
using State = std::array<double, N>;

/// Fehlberg 8(7) pair (the order-8 solution is propagated) with a PI step controller.
template <std::size_t N, class Rhs>
class RkCore {
public:
    RkCore(Rhs rhs, double rel_tol, double abs_tol) : rhs_(rhs), rel_tol_(rel_tol), abs_tol_(abs_tol) {}

    /// Single uncontrolled step of size h.
    State<N> exact(const State<N>& y, double t, double h)
    {
        State<N> out;
        State<N> err;
        stepper_.do_step(std::ref(rhs_), y, t, out, h, err);
        return out;
    }

    /// Takes one accepted step from (y, t). `h` holds the trial step on entry and the
    /// proposed next step on exit. Returns the step actually taken.
    double advance(const State<N>& y, double t, double& h, State<N>& out)
    {
        State<N> err;
        for (int attempt = 0;; ++attempt) {
            if (!(std::abs(h) > min_step_) || attempt > 200)
                throw IntegrationError("step size underflow");
            stepper_.do_step(std::ref(rhs_), y, t, out, h, err);
            double e = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                const double sc = abs_tol_ + rel_tol_ * std::max(std::abs(y[i]), std::abs(out[i]));
                e = std::max(e, std::abs(err[i]) / sc);
            }
            if (!std::isfinite(e)) {
                h *= 0.25;
                continue;
            }
            if (e <= 1.0) {
                const double used = h;
                double fac = 5.0;
                if (e > 0.0) fac = 0.9 * std::pow(e, -0.7 / 8.0) * std::pow(err_prev_, 0.4 / 8.0);
                h = used * std::clamp(fac, 0.2, 5.0);
                err_prev_ = std::max(e, 1e-4);
                return used;
            }
            h *= std::max(0.2, 0.9 * std::pow(e, -1.0 / 8.0));
        }
    }

    void set_min_step(double m) { min_step_ = m; }
    Rhs& rhs() { return rhs_; }

private:
    Rhs rhs_;
    double rel_tol_;
    double abs_tol_;
    double err_prev_ = 1e-4;
    double min_step_ = 1e-300;
    boost::numeric::odeint::runge_kutta_fehlberg78<State<N>> stepper_;
};

/// Root of g(step(y0, t0, tau)) for tau in (0, h], given opposite signs at the ends.
/// Returns a tau on the far side of the root (the sign of g at h).
template <class Core, class StateT, class G>
double locate_root(Core& core, const StateT& y0, double t0, double h, G&& g, double g0, double g1)
{
    double a = 0.0;
    double b = h;
    double fa = g0;
    double fb = g1;
    int side = 0;
    for (int i = 0; i < 100; ++i) {
        if (std::abs(b - a) <= 1e-15 * std::abs(h)) break;
        double c = (fa * b - fb * a) / (fa - fb);
        if (!(std::min(a, b) < c && c < std::max(a, b))) c = 0.5 * (a + b);
        const double fc = g(core.exact(y0, t0, c));
        if (fc == 0.0) return c;
        if ((fc < 0.0) == (fb < 0.0)) {
            b = c;
            fb = fc;
            if (side == -1) fa *= 0.5;
            side = -1;
        } else {
            a = c;
            fa = fc;
            if (side == 1) fb *= 0.5;
            side = 1;
        }
    }
    return b;
}

} // namespace ncentre::detail
