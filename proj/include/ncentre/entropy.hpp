#pragma once

#include <cstddef>
#include <functional>
#include <set>
#include <vector>

#include "ncentre/scattering.hpp"

namespace ncentre {

using Word = std::vector<int>;

/// Close-approach centre indices of one trajectory in time order, consecutive repeats collapsed.
Word itinerary(const Trajectory& traj);

struct WordCensus {
    /// counts[L - 1] = number of distinct realised prefixes of length L, L = 1..l_max.
    std::vector<std::size_t> counts;
    std::size_t sample_size = 0;
    double energy = 0.0;
    int symbols = 0;
    /// Per-symbol growth rate of the counts, clamped to [0, log max(n - 1, 1)].
    double slope = 0.0;
    /// RMS deviation of log count from the fitted line.
    double residual = 0.0;
    /// Lengths used by the fit.
    int fit_from = 0, fit_to = 0;

    /// No-repeat full-shift bound n (n - 1)^(L - 1).
    double bound(int length) const;
};

/// Counts distinct prefixes up to l_max and fits the growth rate.
WordCensus census_from_words(const std::set<Word>& words, int symbols, int l_max, std::size_t samples, double energy);

/// Propagates `count` samples (both time directions) and censuses their orbit itineraries.
WordCensus word_census(const std::function<PhaseState(std::size_t)>& sampler, std::size_t count,
                       const CentreConfig& config, const ScatteringSettings& settings, int l_max, int jobs = 1);

struct BeamCensusSettings {
    ScatteringSettings scattering;
    double energy = 10.0;
    int l_max = 8;
    /// Beam directions, evenly spaced in angle (planar) or polar angle (spatial).
    int directions = 3;
    /// Impact parameters per direction on [-impact_range, impact_range] x length scale.
    int grid = 100;
    double impact_range = 1.0;
    /// Bisection between neighbouring samples whose itineraries differ or whose outgoing
    /// directions differ by more than max_turn radians.
    int refine_depth = 60;
    double max_turn = 0.3;
    std::size_t max_samples = 40000;
    int jobs = 1;
};

/// Census over beam families, refined by bisection on the impact parameter so that the
/// exponentially thin cylinders of long words are reached.
WordCensus beam_census(const CentreConfig& config, const BeamCensusSettings& settings);

} // namespace ncentre
