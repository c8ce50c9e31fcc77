#include "ncentre/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ncentre {

CentreConfig validate_config(int dim, const std::vector<std::vector<double>>& centres,
                             const std::vector<double>& strengths)
{
    if (dim != 2 && dim != 3) throw ConfigError("dim", "must be 2 or 3, got " + std::to_string(dim));
    if (centres.empty()) throw ConfigError("centres", "at least one centre is required");
    if (centres.size() != strengths.size())
        throw ConfigError("strengths", "expected " + std::to_string(centres.size()) + " values, got " +
                                           std::to_string(strengths.size()));

    CentreConfig cfg;
    cfg.dim_ = dim;
    for (std::size_t k = 0; k < centres.size(); ++k) {
        const auto field = "centres[" + std::to_string(k) + "]";
        if (centres[k].size() != static_cast<std::size_t>(dim))
            throw ConfigError(field, "expected " + std::to_string(dim) + " coordinates");
        for (double c : centres[k])
            if (!std::isfinite(c)) throw ConfigError(field, "non-finite coordinate");
        cfg.centres_.push_back(make_vec(centres[k]));
    }
    for (std::size_t k = 0; k < strengths.size(); ++k) {
        const auto field = "strengths[" + std::to_string(k) + "]";
        if (!std::isfinite(strengths[k])) throw ConfigError(field, "non-finite strength");
        if (strengths[k] == 0.0) throw ConfigError(field, "strength must be nonzero");
    }
    cfg.strengths_ = strengths;
    for (std::size_t k = 0; k < cfg.centres_.size(); ++k)
        for (std::size_t l = k + 1; l < cfg.centres_.size(); ++l)
            if (cfg.centres_[k] == cfg.centres_[l])
                throw ConfigError("centres", "duplicate centres " + std::to_string(k) + " and " +
                                                 std::to_string(l));
    cfg.derive();
    return cfg;
}

void CentreConfig::derive()
{
    z_total_ = 0.0;
    for (double z : strengths_) z_total_ += z;

    const std::size_t n = centres_.size();
    diameter_ = 0.0;
    min_separation_ = std::numeric_limits<double>::infinity();
    centroid_ = {};
    for (std::size_t k = 0; k < n; ++k) {
        centroid_ += centres_[k] / static_cast<double>(n);
        for (std::size_t l = k + 1; l < n; ++l) {
            const double d = norm(centres_[k] - centres_[l]);
            diameter_ = std::max(diameter_, d);
            min_separation_ = std::min(min_separation_, d);
        }
    }

    axis_.reset();
    collinear_ = true;
    if (n >= 2) {
        std::size_t far = 1;
        for (std::size_t k = 1; k < n; ++k)
            if (norm(centres_[k] - centres_[0]) > norm(centres_[far] - centres_[0])) far = k;
        const Vec3 dir = centres_[far] - centres_[0];
        const Vec3 u = dir / norm(dir);
        const double eps = 1e-12 * diameter_;
        for (std::size_t k = 0; k < n; ++k)
            if (norm(cross(centres_[k] - centres_[0], u)) > eps) collinear_ = false;
        if (collinear_) axis_ = u;
    }

    warnings_.clear();
    if (dim_ == 3 && collinear_)
        warnings_.emplace_back("collinear 3D configuration: outside the hypotheses of the "
                               "scattering-integral construction");
    if (dim_ == 2 && std::any_of(strengths_.begin(), strengths_.end(), [](double z) { return z < 0.0; }))
        warnings_.emplace_back("planar configuration with repelling centres: outside the hypotheses "
                               "of the scattering-integral construction");
}

CentreConfig CentreConfig::translated(const Vec3& offset) const
{
    CentreConfig out = *this;
    for (auto& c : out.centres_) c += offset;
    out.derive();
    return out;
}

CentreConfig CentreConfig::rotated(const Vec3& axis, double angle) const
{
    CentreConfig out = *this;
    for (auto& c : out.centres_) c = rotate(c, axis, angle);
    out.derive();
    return out;
}

double potential(const Vec3& q, const CentreConfig& config)
{
    double v = 0.0;
    for (std::size_t k = 0; k < config.size(); ++k) {
        const double r = norm(q - config.centres()[k]);
        if (r == 0.0) throw DomainError(static_cast<int>(k), "potential evaluated at centre " + std::to_string(k));
        v -= config.strengths()[k] / r;
    }
    return v;
}

Vec3 force(const Vec3& q, const CentreConfig& config)
{
    Vec3 f;
    for (std::size_t k = 0; k < config.size(); ++k) {
        const Vec3 d = q - config.centres()[k];
        const double r2 = norm2(d);
        if (r2 == 0.0) throw DomainError(static_cast<int>(k), "force evaluated at centre " + std::to_string(k));
        const double r = std::sqrt(r2);
        f -= d * (config.strengths()[k] / (r2 * r));
    }
    return f;
}

double hamiltonian(const PhaseState& state, const CentreConfig& config)
{
    return 0.5 * norm2(state.p) + potential(state.q, config);
}

double kepler_hamiltonian(const PhaseState& state, double z)
{
    const double r = norm(state.q);
    if (r == 0.0) throw DomainError(-1, "Kepler energy evaluated at the origin");
    return 0.5 * norm2(state.p) - z / r;
}

NearestCentre nearest_centre(const Vec3& q, const CentreConfig& config)
{
    NearestCentre best{0, std::numeric_limits<double>::infinity()};
    for (std::size_t k = 0; k < config.size(); ++k) {
        const double d = norm(q - config.centres()[k]);
        if (d < best.distance) best = {k, d};
    }
    return best;
}

void GevreyParams::validate() const
{
    if (!(c_const > 0.0)) throw ConfigError("gevrey.C", "must be positive");
    if (!(g_index > 1.0)) throw ConfigError("gevrey.g", "must exceed 1");
    if (!(e_low <= e_high)) throw ConfigError("gevrey.E1", "must not exceed E2");
    if (!(e_low > e_threshold_assumed)) throw ConfigError("gevrey.E1", "must exceed the assumed threshold E_th");
}

} // namespace ncentre
