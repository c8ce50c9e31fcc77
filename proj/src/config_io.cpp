#include "ncentre/config_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ncentre {

using nlohmann::json;

std::string fnv1a_hex(const std::string& bytes)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

int line_of(const std::string& text, std::size_t byte)
{
    byte = std::min(byte, text.size());
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

double number(const json& j, const std::string& field)
{
    if (!j.is_number()) throw ConfigError(field, "expected a number");
    return j.get<double>();
}

} // namespace

RunConfig parse_run_config(const std::string& text, const std::string& source)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const int line = line_of(text, e.byte > 0 ? e.byte - 1 : 0);
        throw FormatError(source + ":" + std::to_string(line) + ": " + e.what(), line);
    }
    if (!doc.is_object()) throw FormatError(source + ": top level must be an object", 1);
    for (const auto& [key, _] : doc.items())
        if (key != "dim" && key != "centres" && key != "strengths" && key != "gevrey")
            throw ConfigError(key, "unknown field");

    if (!doc.contains("dim") || !doc["dim"].is_number_integer()) throw ConfigError("dim", "expected an integer");
    const int dim = doc["dim"].get<int>();
    if (!doc.contains("centres") || !doc["centres"].is_array()) throw ConfigError("centres", "expected an array");
    if (!doc.contains("strengths") || !doc["strengths"].is_array())
        throw ConfigError("strengths", "expected an array");

    std::vector<std::vector<double>> centres;
    for (std::size_t k = 0; k < doc["centres"].size(); ++k) {
        const auto& c = doc["centres"][k];
        const std::string field = "centres[" + std::to_string(k) + "]";
        if (!c.is_array()) throw ConfigError(field, "expected a coordinate array");
        std::vector<double> v;
        for (std::size_t i = 0; i < c.size(); ++i) v.push_back(number(c[i], field));
        centres.push_back(std::move(v));
    }
    std::vector<double> strengths;
    for (std::size_t k = 0; k < doc["strengths"].size(); ++k)
        strengths.push_back(number(doc["strengths"][k], "strengths[" + std::to_string(k) + "]"));

    RunConfig out{validate_config(dim, centres, strengths), {}, fnv1a_hex(doc.dump())};
    if (doc.contains("gevrey")) {
        const auto& g = doc["gevrey"];
        if (!g.is_object()) throw ConfigError("gevrey", "expected an object");
        for (const auto& [key, value] : g.items()) {
            const std::string field = "gevrey." + key;
            if (key == "C") out.gevrey.c_const = number(value, field);
            else if (key == "g") out.gevrey.g_index = number(value, field);
            else if (key == "E1") out.gevrey.e_low = number(value, field);
            else if (key == "E2") out.gevrey.e_high = number(value, field);
            else if (key == "E_th") out.gevrey.e_threshold_assumed = number(value, field);
            else throw ConfigError(field, "unknown field");
        }
        if (g.contains("E1") || g.contains("E2") || g.contains("E_th")) {
            out.gevrey.validate();
        } else {
            // Without an energy band only the rate parameters are checked.
            GevreyParams rate_only = out.gevrey;
            rate_only.e_low = rate_only.e_high = 1.0;
            rate_only.validate();
        }
    }
    return out;
}

RunConfig load_run_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str(), path);
}

} // namespace ncentre
