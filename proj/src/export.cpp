#include "ncentre/export.hpp"

#include <charconv>
#include <cmath>

namespace ncentre {

std::string num(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, r.ptr};
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const CentreConfig& config)
{
    const int d = config.dim();
    out << 't';
    for (const char* v : {"q", "p"})
        for (int i = 1; i <= d; ++i) out << ',' << v << i;
    out << ",H\n";
    for (const auto& s : traj.samples) {
        out << num(s.t);
        for (const Vec3* v : {&s.q, &s.p})
            for (int i = 0; i < d; ++i) out << ',' << num((*v)[i]);
        out << ',' << num(hamiltonian(s, config)) << '\n';
    }
}

void write_events_jsonl(std::ostream& out, const Trajectory& traj)
{
    for (const auto& e : traj.events) {
        out << "{\"t\":" << num(e.t) << ",\"kind\":\"" << to_string(e.kind) << "\",\"k\":";
        if (e.centre >= 0) out << e.centre + 1;
        else out << "null";
        out << ",\"dist\":" << num(e.dist) << "}\n";
    }
}

std::string word_string(const std::vector<int>& word)
{
    std::string s;
    for (std::size_t i = 0; i < word.size(); ++i) s += (i ? "-" : "") + std::to_string(word[i] + 1);
    return s;
}

std::string scatter_header(const std::vector<std::string>& param_names, int dim)
{
    std::string h;
    for (const auto& p : param_names) h += p + ",";
    h += "class";
    for (const char* v : {"pm", "pp"})
        for (int i = 1; i <= dim; ++i) h += "," + std::string(v) + std::to_string(i);
    return h + ",tau,tau_resid,itinerary";
}

std::string scatter_row(const std::vector<double>& params, const ScatteringRecord& rec, int dim)
{
    std::string r;
    for (double p : params) r += num(p) + ",";
    r += to_string(rec.orbit_class);
    for (const auto* v : {&rec.p_minus, &rec.p_plus})
        for (int i = 0; i < dim; ++i) r += "," + (*v ? num((**v)[i]) : std::string());
    r += "," + (rec.tau ? num(*rec.tau) : std::string());
    r += "," + (rec.tau ? num(rec.tau_residual) : std::string());
    return r + "," + word_string(rec.itinerary);
}

std::string scatter_error_row(const std::vector<double>& params, int dim)
{
    std::string r;
    for (double p : params) r += num(p) + ",";
    r += "error";
    for (int i = 0; i < 2 * dim + 3; ++i) r += ",";
    return r;
}

void write_census_csv(std::ostream& out, const WordCensus& census, const std::string& meta_json)
{
    out << "# " << meta_json << "\nL,count,bound\n";
    for (std::size_t l = 0; l < census.counts.size(); ++l)
        out << l + 1 << ',' << census.counts[l] << ',' << num(census.bound(static_cast<int>(l + 1))) << '\n';
}

} // namespace ncentre
