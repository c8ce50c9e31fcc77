#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "ncentre/model.hpp"

namespace ncentre {

/// Unreadable or malformed input. `line` is 1-based, 0 when unknown.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, int line = 0) : std::runtime_error(what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

struct RunConfig {
    CentreConfig centres;
    GevreyParams gevrey;
    /// FNV-1a of the canonical (sorted, compact) JSON form, 16 hex digits.
    std::string hash;
};

/// Parses {"dim", "centres", "strengths", "gevrey": {"C", "g", "E1", "E2", "E_th"}}.
/// Syntax errors raise FormatError with the line; invalid values raise ConfigError naming
/// the field.
RunConfig parse_run_config(const std::string& text, const std::string& source = "config");
RunConfig load_run_config(const std::string& path);

std::string fnv1a_hex(const std::string& bytes);

} // namespace ncentre
