#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "ncentre/entropy.hpp"
#include "ncentre/scattering.hpp"

namespace ncentre {

/// Shortest round-trip decimal form.
std::string num(double v);

/// `t,q1..qd,p1..pd,H`, one row per recorded sample.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const CentreConfig& config);
/// One JSON object per line: {"t","kind","k","dist"}, k 1-based or null.
void write_events_jsonl(std::ostream& out, const Trajectory& traj);

std::string scatter_header(const std::vector<std::string>& param_names, int dim);
/// Row of the scattering map. A failed row carries `error` in the class column.
std::string scatter_row(const std::vector<double>& params, const ScatteringRecord& rec, int dim);
std::string scatter_error_row(const std::vector<double>& params, int dim);

/// `# {meta}` header line then `L,count,bound`.
void write_census_csv(std::ostream& out, const WordCensus& census, const std::string& meta_json);

/// Dash-joined 1-based centre indices.
std::string word_string(const std::vector<int>& word);

} // namespace ncentre
