#include "ncentre/integrals.hpp"

#include <cmath>
#include <optional>

namespace ncentre {

Damping gevrey_damping(double tau, const GevreyParams& params)
{
    Damping d;
    d.log_value = -std::exp(params.rate() * std::sqrt(1.0 + tau * tau));
    if (!std::isfinite(d.log_value) || d.log_value < -700.0) {
        d.log_value = std::max(d.log_value, -std::numeric_limits<double>::max());
        d.underflow = true;
        d.value = 0.0;
        return d;
    }
    d.value = std::exp(d.log_value);
    return d;
}

IntegralValue gevrey_integral(const ScatteringRecord& record, int dim, const GevreyParams& params)
{
    IntegralValue out;
    out.orbit_class = record.orbit_class;
    out.f.assign(dim, 0.0);
    if (record.orbit_class != OrbitClass::Scattering) {
        out.authoritative = record.orbit_class != OrbitClass::Undetermined;
        out.damping.log_value = -std::numeric_limits<double>::infinity();
        return out;
    }
    if (!record.tau || !record.p_plus) throw std::logic_error("scattering record without time delay");
    out.damping = gevrey_damping(*record.tau, params);
    const auto p = to_components(*record.p_plus, dim);
    for (int k = 0; k < dim; ++k) out.f[k] = p[k] * out.damping.value;
    if (params.e_high > params.e_low) {
        const double e = 0.5 * norm2(*record.p_plus);
        out.authoritative = e >= params.e_low && e <= params.e_high;
    }
    return out;
}

namespace {

double& coord(PhaseState& s, int dim, int i)
{
    Vec3& v = i < dim ? s.q : s.p;
    const int c = i % dim;
    return c == 0 ? v.x : c == 1 ? v.y : v.z;
}

} // namespace

Eigen::MatrixXd phase_gradient(const PhaseFunction& func, const PhaseState& x, int dim, double h)
{
    const int n = 2 * dim;
    Eigen::MatrixXd jac;
    for (int i = 0; i < n; ++i) {
        PhaseState base = x;
        const double xi = coord(base, dim, i);
        const double step = h * std::max(std::abs(xi), 1.0);
        auto at = [&](double k) {
            PhaseState s = base;
            coord(s, dim, i) = xi + k * step;
            return func(s);
        };
        const Eigen::VectorXd fp1 = at(1.0), fm1 = at(-1.0), fp2 = at(2.0), fm2 = at(-2.0);
        if (jac.size() == 0) jac = Eigen::MatrixXd::Zero(fp1.size(), n);
        jac.col(i) = (8.0 * (fp1 - fm1) - (fp2 - fm2)) / (12.0 * step);
    }
    return jac;
}

double poisson_bracket(const Eigen::VectorXd& grad_a, const Eigen::VectorXd& grad_b, int dim)
{
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += grad_a[i] * grad_b[dim + i] - grad_a[dim + i] * grad_b[i];
    return s;
}

PhaseFunction scattering_function(const ScatteringRecord& centre, const CentreConfig& config,
                                  const ScatteringSettings& settings)
{
    ScatteringSettings frozen = settings;
    frozen.ladder_first = centre.ladder_first;
    frozen.fixed_rung = std::max(centre.p_rung, centre.tau_rung);
    const int dim = config.dim();
    return [frozen, &config, dim](const PhaseState& s) {
        const auto rec = scattering_record(s, config, frozen);
        if (rec.orbit_class != OrbitClass::Scattering || !rec.tau)
            throw StencilBroken("stencil point classified " + to_string(rec.orbit_class));
        Eigen::VectorXd v(dim + 1);
        const auto p = to_components(*rec.p_plus, dim);
        for (int k = 0; k < dim; ++k) v[k] = p[k];
        v[dim] = *rec.tau;
        return v;
    };
}

IndependenceResult independence_rank(const ScatteringRecord& record, const CentreConfig& config,
                                     const ScatteringSettings& settings, const GevreyParams& params, double h,
                                     double cutoff)
{
    if (record.orbit_class != OrbitClass::Scattering || !record.tau)
        throw StencilBroken("independence needs a scattering point with a time delay");
    const int dim = config.dim();
    IndependenceResult out;
    out.raw_gradient = phase_gradient(scattering_function(record, config, settings), record.x, dim, h);

    const double tau = *record.tau;
    const double root = std::sqrt(1.0 + tau * tau);
    // d log D / d tau
    const double slope = -std::exp(params.rate() * root) * params.rate() * tau / root;
    const auto p = to_components(*record.p_plus, dim);
    out.scaled_jacobian = out.raw_gradient.topRows(dim);
    for (int k = 0; k < dim; ++k) out.scaled_jacobian.row(k) += p[k] * slope * out.raw_gradient.row(dim);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(out.scaled_jacobian);
    const auto& sv = svd.singularValues();
    out.singular_values.assign(sv.data(), sv.data() + sv.size());
    const double top = sv.size() ? sv[0] : 0.0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv[i] > cutoff * top) ++out.rank;
    return out;
}

IntegralReport integral_report(const PhaseState& x, const CentreConfig& config, const ScatteringSettings& settings,
                               const GevreyParams& params, double h)
{
    IntegralReport out;
    out.point = x;
    const int dim = config.dim();
    const auto rec = scattering_record(x, config, settings);
    out.orbit_class = rec.orbit_class;
    const auto value = gevrey_integral(rec, dim, params);
    out.f = value.f;
    out.damping_log = value.damping.log_value;
    out.damping_underflow = value.damping.underflow;
    if (rec.orbit_class != OrbitClass::Scattering || !rec.tau) {
        out.note = rec.note.empty() ? to_string(rec.orbit_class) : rec.note;
        return out;
    }
    try {
        const auto ind = independence_rank(rec, config, settings, params, h);
        out.rank = ind.rank;
        out.singular_values = ind.singular_values;
        Eigen::VectorXd grad_h(2 * dim);
        const Vec3 f = force(x.q, config);
        const auto fc = to_components(f, dim);
        const auto pc = to_components(x.p, dim);
        for (int i = 0; i < dim; ++i) {
            grad_h[i] = -fc[i];
            grad_h[dim + i] = pc[i];
        }
        const auto& m = ind.scaled_jacobian;
        for (int i = 0; i < dim; ++i) {
            const Eigen::VectorXd gi = m.row(i).transpose();
            out.bracket_h.push_back(poisson_bracket(gi, grad_h, dim) / (gi.norm() * grad_h.norm()));
        }
        for (int i = 0; i < dim; ++i)
            for (int j = i + 1; j < dim; ++j) {
                const Eigen::VectorXd gi = m.row(i).transpose();
                const Eigen::VectorXd gj = m.row(j).transpose();
                out.bracket_ff.push_back(poisson_bracket(gi, gj, dim) / (gi.norm() * gj.norm()));
            }
    } catch (const StencilBroken& e) {
        out.note = std::string("stencil_broken: ") + e.what();
    }
    return out;
}

ConservationCheck conservation_along_orbit(const PhaseState& x, const CentreConfig& config,
                                           const ScatteringSettings& settings, const GevreyParams& params,
                                           int points)
{
    ConservationCheck out;
    const int dim = config.dim();
    auto value = [&](const PhaseState& s) -> std::optional<IntegralValue> {
        PhaseState y = s;
        y.t = 0.0;
        const auto rec = scattering_record(y, config, settings);
        if (rec.orbit_class != OrbitClass::Scattering || !rec.tau) return std::nullopt;
        return gevrey_integral(rec, dim, params);
    };
    const auto ref = value(x);
    if (!ref) {
        out.determined = false;
        return out;
    }
    IntegratorSettings st = settings.integrator;
    st.max_time = settings.budget_time(config, hamiltonian(x, config));
    const auto tr = propagate(x, config, st);
    if (tr.samples.empty()) {
        out.determined = false;
        return out;
    }
    double scale = 0.0;
    for (double v : ref->f) scale += v * v;
    scale = std::sqrt(scale);
    out.underflow = ref->damping.underflow;
    for (int i = 0; i < points; ++i) {
        const auto idx = static_cast<std::size_t>((tr.samples.size() - 1) * (i + 0.5) / points);
        out.points.push_back(tr.samples[idx]);
        const auto v = value(tr.samples[idx]);
        if (!v) {
            out.determined = false;
            continue;
        }
        out.underflow = out.underflow || v->damping.underflow;
        double diff = 0.0;
        for (int k = 0; k < dim; ++k) diff += std::pow(v->f[k] - ref->f[k], 2);
        diff = std::sqrt(diff);
        if (scale > 0.0) out.spread = std::max(out.spread, diff / scale);
        else if (diff > 0.0) out.spread = std::numeric_limits<double>::infinity();
    }
    return out;
}

} // namespace ncentre
