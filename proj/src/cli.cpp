#include "ncentre/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ncentre/config_io.hpp"
#include "ncentre/entropy.hpp"
#include "ncentre/export.hpp"
#include "ncentre/integrals.hpp"
#include "ncentre/parallel.hpp"

#ifndef NCENTRE_VERSION
#define NCENTRE_VERSION "0.0.0"
#endif

namespace ncentre {

using nlohmann::json;
namespace fs = std::filesystem;

double unit_draw(unsigned long long bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

namespace {

struct Common {
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    int jobs = 1;
    double budget_time = 0.0;
    std::int64_t budget_steps = 0;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config)
{
    auto* opt = cmd->add_option("--config", c.config_path, "centre configuration (JSON)");
    if (needs_config) opt->required();
    cmd->add_option("--seed", c.seed, "random seed");
    cmd->add_option("--out", c.out_dir, "output directory");
    cmd->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--budget-time", c.budget_time, "time budget per propagation (0: default)");
    cmd->add_option("--budget-steps", c.budget_steps, "step budget per propagation (0: default)");
}

class Run {
public:
    Run(std::string command, const Common& common, std::string config_hash)
        : command_(std::move(command)), common_(common), hash_(std::move(config_hash)),
          start_(std::chrono::steady_clock::now())
    {
        fs::create_directories(common_.out_dir);
    }

    json params = json::object();

    fs::path path(const std::string& name) const { return fs::path(common_.out_dir) / name; }

    /// Writes `text` to out/name with its manifest sidecar.
    void emit(const std::string& name, const std::string& text)
    {
        const auto file = path(name);
        std::ofstream(file, std::ios::binary) << text;
        json m;
        m["config_hash"] = hash_;
        m["command"] = command_;
        m["params"] = params;
        m["version"] = NCENTRE_VERSION;
        m["seed"] = common_.seed;
        m["wall_time"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        std::ofstream(file.string() + ".manifest.json", std::ios::binary) << m.dump(2) << '\n';
    }

private:
    std::string command_;
    Common common_;
    std::string hash_;
    std::chrono::steady_clock::time_point start_;
};

void apply_budgets(IntegratorSettings& st, const Common& c, json& params)
{
    if (c.budget_time > 0.0) st.max_time = c.budget_time;
    if (c.budget_steps > 0) st.max_steps = c.budget_steps;
    params["budget_time"] = c.budget_time;
    params["budget_steps"] = c.budget_steps;
}

std::vector<double> linspace(double lo, double hi, int n)
{
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
    return v;
}

Vec3 vec_of(const std::vector<double>& v, int dim, const std::string& field)
{
    if (static_cast<int>(v.size()) != dim)
        throw CLI::ValidationError(field, "expected " + std::to_string(dim) + " components");
    Vec3 out;
    for (int i = 0; i < dim; ++i) out[i] = v[i];
    return out;
}

// --- simulate ---------------------------------------------------------------

struct SimulateArgs {
    std::vector<double> q, p;
    double energy = 0.0;
    std::vector<double> angles, impact;
};

int simulate(const Common& c, const SimulateArgs& a, std::ostream& out)
{
    const auto cfg = load_run_config(c.config_path);
    const auto& centres = cfg.centres;
    const int dim = centres.dim();
    Run run("simulate", c, cfg.hash);

    IntegratorSettings st;
    apply_budgets(st, c, run.params);
    if (!std::isfinite(st.max_time)) st.max_time = 1e3;
    PhaseState x;
    if (!a.q.empty() || !a.p.empty()) {
        x = {vec_of(a.q, dim, "--q"), vec_of(a.p, dim, "--p"), 0.0};
        run.params["q"] = a.q;
        run.params["p"] = a.p;
    } else {
        if (!(a.energy > 0.0)) throw CLI::ValidationError("--energy", "give --q/--p or a beam with positive energy");
        Beam beam{a.energy, {}, {}};
        for (std::size_t i = 0; i < std::min<std::size_t>(2, a.angles.size()); ++i) beam.angles[i] = a.angles[i];
        for (std::size_t i = 0; i < std::min<std::size_t>(2, a.impact.size()); ++i) beam.impact[i] = a.impact[i];
        x = beam_state(centres, centred_beam(centres, beam), st.r_escape_abs(centres));
        run.params["energy"] = a.energy;
        run.params["angles"] = a.angles;
        run.params["impact"] = a.impact;
    }
    run.params["max_time"] = st.max_time;
    const auto tr = propagate(x, centres, st);

    std::ostringstream csv, events;
    write_trajectory_csv(csv, tr, centres);
    write_events_jsonl(events, tr);
    run.emit("trajectory.csv", csv.str());
    run.emit("events.jsonl", events.str());
    out << "stop " << to_string(tr.stop) << ", " << tr.samples.size() << " samples, " << tr.events.size()
        << " events, energy drift " << num(tr.energy_drift) << '\n';
    return exit_ok;
}

// --- scatter ----------------------------------------------------------------

struct ScatterArgs {
    double energy = 10.0;
    double angle_min = 0.0, angle_max = 0.0;
    int angle_count = 1;
    double impact_min = -1.0, impact_max = 1.0;
    int impact_count = 200;
    double azimuth = 0.0, impact2 = 0.0;
    double budget_crossings = 1e4;
};

int scatter(const Common& c, const ScatterArgs& a, std::ostream& out)
{
    const auto cfg = load_run_config(c.config_path);
    const auto& centres = cfg.centres;
    const int dim = centres.dim();
    Run run("scatter", c, cfg.hash);
    ScatteringSettings ss;
    ss.budget_crossings = a.budget_crossings;
    apply_budgets(ss.integrator, c, run.params);
    ss.integrator.record_samples = false;
    run.params["energy"] = a.energy;
    run.params["angle"] = {a.angle_min, a.angle_max, a.angle_count};
    run.params["impact"] = {a.impact_min, a.impact_max, a.impact_count};
    run.params["budget_crossings"] = a.budget_crossings;
    if (dim == 3) {
        run.params["azimuth"] = a.azimuth;
        run.params["impact2"] = a.impact2;
    }

    std::vector<Beam> beams;
    for (double th : linspace(a.angle_min, a.angle_max, a.angle_count))
        for (double b : linspace(a.impact_min, a.impact_max, a.impact_count))
            beams.push_back({a.energy, {th, a.azimuth}, {b, a.impact2}});
    auto params_of = [&](const Beam& b) {
        return dim == 2 ? std::vector<double>{b.energy, b.angles[0], b.impact[0]}
                        : std::vector<double>{b.energy, b.angles[0], b.angles[1], b.impact[0], b.impact[1]};
    };

    std::vector<std::string> rows(beams.size());
    const double radius = ss.integrator.r_escape_abs(centres);
    parallel_for(beams.size(), c.jobs, [&](std::size_t i) {
        try {
            const auto x = beam_state(centres, centred_beam(centres, beams[i]), radius);
            rows[i] = scatter_row(params_of(beams[i]), scattering_record(x, centres, ss), dim);
        } catch (const std::exception&) {
            rows[i] = scatter_error_row(params_of(beams[i]), dim);
        }
    });
    std::string text = scatter_header(dim == 2 ? std::vector<std::string>{"energy", "angle", "impact"}
                                               : std::vector<std::string>{"energy", "polar", "azimuth", "impact1",
                                                                          "impact2"},
                                      dim) +
                       "\n";
    for (const auto& r : rows) text += r + "\n";
    run.emit("scatter.csv", text);
    out << rows.size() << " rows\n";
    return exit_ok;
}

// --- verify-integrals -------------------------------------------------------

struct VerifyArgs {
    double energy = 10.0;
    int samples = 20;
    int points = 5;
};

int verify_integrals(const Common& c, const VerifyArgs& a, std::ostream& out)
{
    const auto cfg = load_run_config(c.config_path);
    const auto& centres = cfg.centres;
    const int dim = centres.dim();
    Run run("verify-integrals", c, cfg.hash);
    ScatteringSettings ss;
    apply_budgets(ss.integrator, c, run.params);
    run.params["energy"] = a.energy;
    run.params["samples"] = a.samples;
    run.params["points"] = a.points;

    std::mt19937_64 rng(c.seed);
    std::vector<Beam> beams;
    for (int i = 0; i < a.samples; ++i) {
        const double angle = 2.0 * std::numbers::pi * unit_draw(rng());
        const double b = (2.0 * unit_draw(rng()) - 1.0) * centres.length_scale();
        const double angle2 = std::numbers::pi * unit_draw(rng());
        const double b2 = (2.0 * unit_draw(rng()) - 1.0) * centres.length_scale();
        const std::array<double, 2> angles = dim == 2 ? std::array{angle, 0.0} : std::array{angle2, angle};
        beams.push_back({a.energy, angles, {b, dim == 2 ? 0.0 : b2}});
    }

    struct Sample {
        ConservationCheck cons;
        IntegralReport report;
        std::string error;
    };
    std::vector<Sample> res(beams.size());
    const double radius = ss.integrator.r_escape_abs(centres);
    parallel_for(beams.size(), c.jobs, [&](std::size_t i) {
        try {
            const auto x = beam_state(centres, centred_beam(centres, beams[i]), radius);
            res[i].cons = conservation_along_orbit(x, centres, ss, cfg.gevrey, a.points);
            if (!res[i].cons.points.empty()) {
                PhaseState mid = res[i].cons.points[res[i].cons.points.size() / 2];
                mid.t = 0.0;
                res[i].report = integral_report(mid, centres, ss, cfg.gevrey);
            }
        } catch (const std::exception& e) {
            res[i].error = e.what();
        }
    });

    int determined = 0, conserved = 0, full_rank = 0, brackets_ok = 0;
    double worst_spread = 0.0, worst_bracket = 0.0;
    json points = json::array();
    for (std::size_t i = 0; i < res.size(); ++i) {
        const auto& s = res[i];
        json p;
        p["beam"] = {beams[i].angles[0], beams[i].angles[1], beams[i].impact[0], beams[i].impact[1]};
        if (!s.error.empty()) p["error"] = s.error;
        const bool ok = s.error.empty() && s.cons.determined && s.report.rank >= 0;
        p["determined"] = ok;
        p["spread"] = s.cons.spread;
        p["class"] = to_string(s.report.orbit_class);
        p["f"] = s.report.f;
        p["damping_log"] = s.report.damping_log;
        p["rank"] = s.report.rank;
        p["singular_values"] = s.report.singular_values;
        p["brackets"] = {{"h", s.report.bracket_h}, {"ff", s.report.bracket_ff}};
        if (!s.report.note.empty()) p["note"] = s.report.note;
        points.push_back(p);
        if (!ok) continue;
        ++determined;
        conserved += s.cons.spread <= 1e-4;
        worst_spread = std::max(worst_spread, s.cons.spread);
        full_rank += s.report.rank == dim;
        double b = 0.0;
        for (double v : s.report.bracket_h) b = std::max(b, std::abs(v));
        for (double v : s.report.bracket_ff) b = std::max(b, std::abs(v));
        brackets_ok += b <= 1e-4;
        worst_bracket = std::max(worst_bracket, b);
    }

    const double n = std::max(determined, 1);
    json checks = json::array();
    auto check = [&](const std::string& name, double measured, double threshold, bool passed) {
        checks.push_back({{"name", name}, {"measured", measured}, {"threshold", threshold}, {"passed", passed}});
        return passed;
    };
    bool all = true;
    all &= check("conservation_fraction", conserved / n, 0.98, conserved >= 0.98 * n);
    all &= check("rank_fraction", full_rank / n, 0.95, full_rank >= 0.95 * n);
    all &= check("bracket_fraction", brackets_ok / n, 1.0, brackets_ok == determined);
    const bool enough = determined > 0 && 2 * determined >= a.samples;

    json report;
    report["config_hash"] = cfg.hash;
    report["energy"] = a.energy;
    report["samples"] = a.samples;
    report["determined"] = determined;
    report["worst_spread"] = worst_spread;
    report["worst_bracket"] = worst_bracket;
    report["checks"] = checks;
    report["points"] = points;
    run.emit("verify.json", report.dump(2) + "\n");

    for (const auto& ch : checks)
        out << ch["name"].get<std::string>() << ' ' << num(ch["measured"].get<double>())
            << (ch["passed"].get<bool>() ? " pass" : " FAIL") << '\n';
    out << determined << " of " << a.samples << " samples determined\n";
    if (!enough) return exit_undetermined;
    return all ? exit_ok : exit_check_failed;
}

// --- entropy ----------------------------------------------------------------

int entropy(const Common& c, BeamCensusSettings s, double budget_crossings, std::ostream& out)
{
    const auto cfg = load_run_config(c.config_path);
    Run run("entropy", c, cfg.hash);
    s.scattering.budget_crossings = budget_crossings;
    s.scattering.integrator.record_samples = false;
    apply_budgets(s.scattering.integrator, c, run.params);
    s.jobs = c.jobs;
    run.params["energy"] = s.energy;
    run.params["l_max"] = s.l_max;
    run.params["directions"] = s.directions;
    run.params["grid"] = s.grid;
    run.params["impact_range"] = s.impact_range;
    run.params["refine_depth"] = s.refine_depth;
    run.params["max_turn"] = s.max_turn;
    run.params["max_samples"] = s.max_samples;
    run.params["budget_crossings"] = budget_crossings;

    const auto census = beam_census(cfg.centres, s);
    json meta;
    meta["config_hash"] = cfg.hash;
    meta["energy"] = s.energy;
    meta["budget_crossings"] = budget_crossings;
    meta["max_samples"] = s.max_samples;
    meta["samples"] = census.sample_size;
    meta["slope"] = census.slope;
    meta["residual"] = census.residual;
    meta["fit"] = {census.fit_from, census.fit_to};
    std::ostringstream csv;
    write_census_csv(csv, census, meta.dump());
    run.emit("census.csv", csv.str());
    out << "slope " << num(census.slope) << " residual " << num(census.residual) << " over L=" << census.fit_from
        << ".." << census.fit_to << ", " << census.sample_size << " samples\n";
    return exit_ok;
}

// --- plotdata ---------------------------------------------------------------

std::vector<std::string> split(const std::string& line, char sep = ',')
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

double cell_number(const std::string& s, int line)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) throw FormatError("line " + std::to_string(line) + ": not a number: '" + s + "'", line);
    return v;
}

int plotdata(const Common& c, const std::string& input, const std::string& kind, std::ostream& out)
{
    std::ifstream in(input, std::ios::binary);
    if (!in) throw FormatError("cannot open " + input);
    std::string line;
    std::vector<std::string> header;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        header = split(line);
        break;
    }
    if (header.empty()) throw FormatError(input + ": no header row", lineno);
    auto column = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw FormatError(input + ": missing column '" + name + "'", lineno);
        return static_cast<std::size_t>(it - header.begin());
    };

    std::ostringstream dat;
    if (kind == "tau" || kind == "angle") {
        const std::size_t param = header[2] == "impact" ? 2 : column("impact1");
        const std::size_t tau = column("tau");
        std::size_t dim = 0;
        while (std::find(header.begin(), header.end(), "pm" + std::to_string(dim + 1)) != header.end()) ++dim;
        dat << (kind == "tau" ? "# impact tau\n" : "# impact deflection\n");
        while (std::getline(in, line)) {
            ++lineno;
            const auto cells = split(line);
            if (cells.size() != header.size()) throw FormatError(input + ":" + std::to_string(lineno) + ": wrong column count", lineno);
            if (kind == "tau") {
                if (cells[tau].empty()) continue;
                dat << cells[param] << ' ' << cells[tau] << '\n';
                continue;
            }
            if (cells[column("pm1")].empty() || cells[column("pp1")].empty()) continue;
            Vec3 pm, pp;
            for (std::size_t i = 0; i < dim; ++i) {
                pm[static_cast<int>(i)] = cell_number(cells[column("pm" + std::to_string(i + 1))], lineno);
                pp[static_cast<int>(i)] = cell_number(cells[column("pp" + std::to_string(i + 1))], lineno);
            }
            dat << cells[param] << ' ' << num(std::atan2(norm(cross(pm, pp)), dot(pm, pp))) << '\n';
        }
    } else if (kind == "census") {
        const std::size_t l = column("L"), count = column("count");
        dat << "# L log_count\n";
        while (std::getline(in, line)) {
            ++lineno;
            const auto cells = split(line);
            if (cells.size() != header.size()) throw FormatError(input + ":" + std::to_string(lineno) + ": wrong column count", lineno);
            const double n = cell_number(cells[count], lineno);
            if (n > 0) dat << cells[l] << ' ' << num(std::log(n)) << '\n';
        }
    } else if (kind == "trajectory") {
        const std::size_t q1 = column("q1"), q2 = column("q2");
        const bool spatial = std::find(header.begin(), header.end(), "q3") != header.end();
        const std::size_t q3 = spatial ? column("q3") : 0;
        dat << (spatial ? "# q1 q2 q3\n" : "# q1 q2\n");
        while (std::getline(in, line)) {
            ++lineno;
            const auto cells = split(line);
            if (cells.size() != header.size()) throw FormatError(input + ":" + std::to_string(lineno) + ": wrong column count", lineno);
            dat << cells[q1] << ' ' << cells[q2];
            if (spatial) dat << ' ' << cells[q3];
            dat << '\n';
        }
    } else {
        throw CLI::ValidationError("--kind", "unknown kind " + kind);
    }

    Run run("plotdata", c, "");
    run.params["input"] = input;
    run.params["kind"] = kind;
    const std::string name = fs::path(input).stem().string() + "." + kind + ".dat";
    run.emit(name, dat.str());
    out << "wrote " << run.path(name).string() << '\n';
    return exit_ok;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"n-centre scattering toolkit", "nctool"};
    app.set_version_flag("--version", NCENTRE_VERSION);
    app.require_subcommand(1);
    Common common;

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "propagate one initial condition");
    add_common(c_sim, common, true);
    c_sim->add_option("--q", sim.q, "initial position")->delimiter(',');
    c_sim->add_option("--p", sim.p, "initial momentum")->delimiter(',');
    c_sim->add_option("--energy", sim.energy, "beam energy (instead of --q/--p)");
    c_sim->add_option("--angles", sim.angles, "beam direction angles")->delimiter(',');
    c_sim->add_option("--impact", sim.impact, "beam impact offsets from the centroid")->delimiter(',');

    ScatterArgs sc;
    auto* c_sc = app.add_subcommand("scatter", "scattering map over a beam grid");
    add_common(c_sc, common, true);
    c_sc->add_option("--energy", sc.energy);
    c_sc->add_option("--angle-min", sc.angle_min);
    c_sc->add_option("--angle-max", sc.angle_max);
    c_sc->add_option("--angle-count", sc.angle_count)->check(CLI::PositiveNumber);
    c_sc->add_option("--impact-min", sc.impact_min);
    c_sc->add_option("--impact-max", sc.impact_max);
    c_sc->add_option("--impact-count", sc.impact_count)->check(CLI::PositiveNumber);
    c_sc->add_option("--azimuth", sc.azimuth, "fixed azimuth (spatial)");
    c_sc->add_option("--impact2", sc.impact2, "fixed second impact offset (spatial)");
    c_sc->add_option("--budget-crossings", sc.budget_crossings, "per-direction budget in crossing times");

    VerifyArgs ver;
    auto* c_ver = app.add_subcommand("verify-integrals", "conservation, rank and bracket checks");
    add_common(c_ver, common, true);
    c_ver->add_option("--energy", ver.energy);
    c_ver->add_option("--samples", ver.samples)->check(CLI::PositiveNumber);
    c_ver->add_option("--points", ver.points, "points per orbit")->check(CLI::PositiveNumber);

    BeamCensusSettings cen;
    double census_crossings = 1e3;
    auto* c_ent = app.add_subcommand("entropy", "itinerary word census");
    add_common(c_ent, common, true);
    c_ent->add_option("--energy", cen.energy);
    c_ent->add_option("--l-max", cen.l_max)->check(CLI::PositiveNumber);
    c_ent->add_option("--directions", cen.directions)->check(CLI::PositiveNumber);
    c_ent->add_option("--grid", cen.grid)->check(CLI::PositiveNumber);
    c_ent->add_option("--impact-range", cen.impact_range);
    c_ent->add_option("--refine-depth", cen.refine_depth);
    c_ent->add_option("--max-turn", cen.max_turn);
    c_ent->add_option("--max-samples", cen.max_samples);
    c_ent->add_option("--budget-crossings", census_crossings);

    std::string plot_input, plot_kind;
    auto* c_plot = app.add_subcommand("plotdata", "columnar plot data from an output CSV");
    add_common(c_plot, common, false);
    c_plot->add_option("--input", plot_input)->required();
    c_plot->add_option("--kind", plot_kind)->required()->check(CLI::IsMember({"tau", "angle", "census", "trajectory"}));

    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*c_sim) return simulate(common, sim, out);
        if (*c_sc) return scatter(common, sc, out);
        if (*c_ver) return verify_integrals(common, ver, out);
        if (*c_ent) return entropy(common, cen, census_crossings, out);
        return plotdata(common, plot_input, plot_kind, out);
    } catch (const CLI::ValidationError& e) {
        err << "usage error: " << e.what() << '\n';
        return exit_usage;
    } catch (const ConfigError& e) {
        err << "config error in field '" << e.field() << "': " << e.what() << '\n';
        return exit_data;
    } catch (const FormatError& e) {
        err << "format error: " << e.what() << '\n';
        return exit_data;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_internal;
    }
}

} // namespace ncentre
