#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ncentre/vec.hpp"

namespace ncentre {

/// Raised for configurations that cannot describe an n-centre system.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Evaluation at a singular point. `centre` is the 0-based centre index, or -1 for
/// the Kepler reference singularity at the origin.
class DomainError : public std::domain_error {
public:
    DomainError(int centre, const std::string& what) : std::domain_error(what), centre_(centre) {}
    int centre() const noexcept { return centre_; }

private:
    int centre_;
};

struct PhaseState {
    Vec3 q;
    Vec3 p;
    double t = 0.0;
};

/// Time reversal (q, p, t) -> (q, -p, -t).
inline PhaseState reversed(const PhaseState& s) { return {s.q, -s.p, -s.t}; }

/// Validated, immutable set of fixed centres.
class CentreConfig {
public:
    int dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return centres_.size(); }
    const std::vector<Vec3>& centres() const noexcept { return centres_; }
    const std::vector<double>& strengths() const noexcept { return strengths_; }
    const Vec3& centre(std::size_t k) const { return centres_.at(k); }
    double strength(std::size_t k) const { return strengths_.at(k); }

    /// Z_inf, summed in declaration order.
    double z_total() const noexcept { return z_total_; }
    bool collinear() const noexcept { return collinear_; }
    /// Unit direction of the common line; present only for collinear configurations.
    const std::optional<Vec3>& axis() const noexcept { return axis_; }

    /// Largest pairwise centre distance (0 for a single centre).
    double diameter() const noexcept { return diameter_; }
    /// Smallest pairwise centre distance (+inf for a single centre).
    double min_separation() const noexcept { return min_separation_; }
    /// Length unit for defaults: the diameter, or 1 for a single centre.
    double length_scale() const noexcept { return diameter_ > 0.0 ? diameter_ : 1.0; }
    /// Length unit for regularisation radii: min separation, or 1 for a single centre.
    double separation_scale() const noexcept { return size() > 1 ? min_separation_ : 1.0; }
    Vec3 centroid() const noexcept { return centroid_; }

    /// Reasons the configuration falls outside the standing assumptions under which
    /// the scattering integrals are constructed. Empty when none apply.
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

    /// Same configuration with every centre shifted by `offset`.
    CentreConfig translated(const Vec3& offset) const;
    /// Same configuration rotated about the origin.
    CentreConfig rotated(const Vec3& axis, double angle) const;

private:
    friend CentreConfig validate_config(int dim, const std::vector<std::vector<double>>& centres,
                                        const std::vector<double>& strengths);
    CentreConfig() = default;
    void derive();

    int dim_ = 0;
    std::vector<Vec3> centres_;
    std::vector<double> strengths_;
    double z_total_ = 0.0;
    bool collinear_ = false;
    std::optional<Vec3> axis_;
    double diameter_ = 0.0;
    double min_separation_ = 0.0;
    Vec3 centroid_;
    std::vector<std::string> warnings_;
};

/// Checks dimension, duplicates and zero strengths, derives Z_inf and collinearity.
/// Throws ConfigError; configurations outside the theory's assumptions only warn.
CentreConfig validate_config(int dim, const std::vector<std::vector<double>>& centres,
                             const std::vector<double>& strengths);

/// V(q) = -sum_k Z_k / |q - s_k|.
double potential(const Vec3& q, const CentreConfig& config);

/// -grad V(q).
Vec3 force(const Vec3& q, const CentreConfig& config);

double hamiltonian(const PhaseState& state, const CentreConfig& config);

/// Reference Kepler energy 1/2 |p|^2 - z/|q| about the origin.
double kepler_hamiltonian(const PhaseState& state, double z);

/// Index of the centre closest to q together with its distance.
struct NearestCentre {
    std::size_t index;
    double distance;
};
NearestCentre nearest_centre(const Vec3& q, const CentreConfig& config);

/// Parameters of the damped integrals f_k.
struct GevreyParams {
    double c_const = 1.0;
    double g_index = 2.0;
    double e_low = 0.0;
    double e_high = 0.0;
    double e_threshold_assumed = 0.0;

    /// Throws ConfigError when C <= 0, g <= 1, E1 > E2 or E1 <= E_th.
    void validate() const;
    /// C / (g - 1), the rate inside the double exponential.
    double rate() const { return c_const / (g_index - 1.0); }
};

} // namespace ncentre
