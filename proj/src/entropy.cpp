#include "ncentre/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

#include "ncentre/parallel.hpp"

namespace ncentre {

Word itinerary(const Trajectory& traj)
{
    Word w;
    for (const auto& e : traj.events)
        if (e.kind == EventKind::CloseApproach && (w.empty() || w.back() != e.centre)) w.push_back(e.centre);
    return w;
}

double WordCensus::bound(int length) const
{
    if (length <= 0) return 1.0;
    return symbols * std::pow(std::max(symbols - 1, 0), length - 1);
}

namespace {

struct LineFit {
    double slope = 0.0, residual = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    LineFit f;
    const double den = n * sxx - sx * sx;
    if (den <= 0.0) return f;
    f.slope = (n * sxy - sx * sy) / den;
    const double icpt = (sy - f.slope * sx) / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) ss += std::pow(y[i] - icpt - f.slope * x[i], 2);
    f.residual = std::sqrt(ss / n);
    return f;
}

} // namespace

WordCensus census_from_words(const std::set<Word>& words, int symbols, int l_max, std::size_t samples, double energy)
{
    WordCensus c;
    c.symbols = symbols;
    c.sample_size = samples;
    c.energy = energy;
    c.counts.assign(static_cast<std::size_t>(std::max(l_max, 0)), 0);
    for (int len = 1; len <= l_max; ++len) {
        std::set<Word> prefixes;
        for (const auto& w : words)
            if (static_cast<int>(w.size()) >= len) prefixes.emplace(w.begin(), w.begin() + len);
        c.counts[len - 1] = prefixes.size();
    }

    // Longest window of realised lengths (at least three) that is linear in log count to
    // within 0.1; the full realised range otherwise.
    int last = 0;
    while (last < l_max && c.counts[last] > 0) ++last;
    auto window = [&](int from, int to) {
        std::vector<double> x, y;
        for (int len = from; len <= to; ++len) {
            x.push_back(len);
            y.push_back(std::log(static_cast<double>(c.counts[len - 1])));
        }
        return fit_line(x, y);
    };
    LineFit best;
    if (last >= 1) {
        c.fit_from = 1;
        c.fit_to = last;
        best = window(1, last);
        bool found = false;
        for (int span = last; span >= 3 && !found; --span)
            for (int from = 1; from + span - 1 <= last; ++from) {
                const auto f = window(from, from + span - 1);
                if (f.residual <= 0.1) {
                    best = f;
                    c.fit_from = from;
                    c.fit_to = from + span - 1;
                    found = true;
                    break;
                }
            }
    }
    c.slope = std::clamp(best.slope, 0.0, std::log(std::max(symbols - 1, 1)));
    c.residual = best.residual;
    return c;
}

WordCensus word_census(const std::function<PhaseState(std::size_t)>& sampler, std::size_t count,
                       const CentreConfig& config, const ScatteringSettings& settings, int l_max, int jobs)
{
    std::vector<PhaseState> points(count);
    for (std::size_t i = 0; i < count; ++i) points[i] = sampler(i);
    std::vector<Word> words(count);
    parallel_for(count, jobs, [&](std::size_t i) {
        const auto cls = classify_orbit(points[i], config, settings);
        words[i] = orbit_itinerary(cls.forward, cls.backward);
    });
    const double energy = count ? hamiltonian(points[0], config) : 0.0;
    return census_from_words({words.begin(), words.end()}, static_cast<int>(config.size()), l_max, count, energy);
}

WordCensus beam_census(const CentreConfig& config, const BeamCensusSettings& settings)
{
    const double radius = settings.scattering.integrator.r_escape_abs(config);
    const double half = settings.impact_range * config.length_scale();

    auto point = [&](int dir, double b) {
        Beam beam{settings.energy, {2.0 * std::numbers::pi * dir / settings.directions, 0.0}, {b, 0.0}};
        if (config.dim() == 3) beam.angles = {std::numbers::pi * (dir + 0.5) / settings.directions, 0.7 * dir};
        return beam_state(config, centred_beam(config, beam), radius);
    };

    struct Sample {
        int dir;
        double b;
        Word word;
        Vec3 out;
    };
    auto evaluate = [&](std::vector<Sample>& batch) {
        parallel_for(batch.size(), settings.jobs, [&](std::size_t i) {
            const auto cls = classify_orbit(point(batch[i].dir, batch[i].b), config, settings.scattering);
            batch[i].word = orbit_itinerary(cls.forward, cls.backward);
            const Vec3 p = cls.forward.final_state.p;
            batch[i].out = cls.orbit_class == OrbitClass::Scattering ? p / norm(p) : Vec3{};
        });
    };
    // Words of the family change only where the outgoing direction sweeps across a centre,
    // so an interval is split while its ends differ in word or turn by more than max_turn.
    const auto lmax = static_cast<std::size_t>(std::max(settings.l_max, 0));
    auto split = [&](const Sample& a, const Sample& b) {
        if (a.word.size() >= lmax && b.word.size() >= lmax && std::equal(a.word.begin(), a.word.begin() + lmax, b.word.begin()))
            return false;
        if (a.word != b.word) return true;
        if (norm2(a.out) == 0.0 || norm2(b.out) == 0.0) return true;
        return std::atan2(norm(cross(a.out, b.out)), dot(a.out, b.out)) > settings.max_turn;
    };

    std::set<Word> words;
    std::size_t samples = 0;
    std::vector<Sample> grid;
    for (int d = 0; d < settings.directions; ++d)
        for (int i = 0; i < settings.grid; ++i)
            grid.push_back({d, -half + 2.0 * half * (i + 0.5) / settings.grid, {}, {}});
    evaluate(grid);
    samples += grid.size();
    for (const auto& s : grid) words.insert(s.word);

    // Breadth-first over bisection depth; intervals whose ends already share a word prefix
    // of the full census length are left alone. Batches keep the order independent of the
    // thread count.
    struct Interval {
        Sample lo, hi;
        int depth;
        std::size_t serial;
    };
    auto later = [](const Interval& a, const Interval& b) {
        if (a.depth != b.depth) return a.depth > b.depth;
        return a.serial > b.serial;
    };
    std::priority_queue<Interval, std::vector<Interval>, decltype(later)> queue(later);
    std::size_t serial = 0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        if (grid[i].dir == grid[i + 1].dir && split(grid[i], grid[i + 1]))
            queue.push({grid[i], grid[i + 1], 0, serial++});

    const std::size_t batch_size = 64;
    while (!queue.empty() && samples < settings.max_samples) {
        std::vector<Interval> batch;
        while (!queue.empty() && batch.size() < batch_size && samples + batch.size() < settings.max_samples) {
            batch.push_back(queue.top());
            queue.pop();
        }
        std::vector<Sample> mids;
        for (const auto& iv : batch) mids.push_back({iv.lo.dir, 0.5 * (iv.lo.b + iv.hi.b), {}, {}});
        evaluate(mids);
        samples += mids.size();
        for (std::size_t i = 0; i < batch.size(); ++i) {
            words.insert(mids[i].word);
            const auto& iv = batch[i];
            if (iv.depth + 1 >= settings.refine_depth || iv.hi.b - iv.lo.b < 1e-14 * half) continue;
            if (split(iv.lo, mids[i])) queue.push({iv.lo, mids[i], iv.depth + 1, serial++});
            if (split(mids[i], iv.hi)) queue.push({mids[i], iv.hi, iv.depth + 1, serial++});
        }
    }
    return census_from_words(words, static_cast<int>(config.size()), settings.l_max, samples, settings.energy);
}

} // namespace ncentre
