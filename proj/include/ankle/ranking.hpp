#pragma once

// Population-wide min-max normalization of the seven metrics and the scalar
// cost xi = sum_j eta_j * normalized_j used to rank candidates across
// architectures and actuators. Lower xi is better.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ankle/errors.hpp"

namespace ankle {

inline constexpr std::size_t kMetricCount = 7;

enum class MetricId : std::size_t {
    speed,
    torque,
    backdrive,
    manipulability,
    compactness,
    actuation_mass,
    com_height,
};

inline constexpr std::array<std::string_view, kMetricCount> kMetricNames{
    "speed", "torque", "backdriving_torque", "manipulability", "compactness", "actuation_mass", "com_height"};

/// Metrics aggregated over the operational region (they carry a variance).
inline constexpr std::array<bool, kMetricCount> kRegionMetric{true, true, true, true, false, false, false};

inline std::size_t metric_index(std::string_view name) {
    for (std::size_t j = 0; j < kMetricCount; ++j)
        if (kMetricNames[j] == name) return j;
    throw InputError("unknown metric '" + std::string(name) + "'");
}

enum class Direction { lower_better, higher_better };

using MetricDirections = std::array<Direction, kMetricCount>;
using MetricVector = std::array<double, kMetricCount>;

/// speed and torque up, backdriving torque and kappa down, compactness and mass
/// down, CoM height up.
inline constexpr MetricDirections kDefaultDirections{
    Direction::higher_better, Direction::higher_better, Direction::lower_better, Direction::lower_better,
    Direction::lower_better,  Direction::lower_better,  Direction::higher_better};

inline std::string_view to_string(Direction d) { return d == Direction::lower_better ? "lower" : "higher"; }

inline Direction parse_direction(std::string_view s) {
    if (s == "lower" || s == "lower_better") return Direction::lower_better;
    if (s == "higher" || s == "higher_better") return Direction::higher_better;
    throw InputError("unknown metric direction '" + std::string(s) + "'");
}

struct Weights {
    MetricVector eta{};
    double variance_weight{0.0};  // share of xi given to the sigma penalty; 0 disables it

    static Weights uniform() {
        Weights w;
        w.eta.fill(1.0 / static_cast<double>(kMetricCount));
        return w;
    }

    static Weights one_hot(std::size_t j) {
        Weights w;
        w.eta.at(j) = 1.0;
        return w;
    }

    void validate() const {
        double sum = 0.0;
        for (double e : eta) {
            if (!(e >= 0.0) || !std::isfinite(e)) throw BadWeights("weights must be finite and non-negative");
            sum += e;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw BadWeights("weights must sum to 1 (got " + std::to_string(sum) + ")");
        if (!(variance_weight >= 0.0 && variance_weight <= 1.0))
            throw BadWeights("variance weight must lie in [0, 1]");
    }
};

/// One member of the ranking population.
struct RankInput {
    std::string id;
    std::string architecture;
    std::string actuator;
    MetricVector raw{};       // mu for region metrics, the value itself otherwise
    MetricVector variance{};  // sigma^2 for region metrics, 0 otherwise
    bool baseline{false};
};

struct RankedCandidate {
    std::string id;
    std::string architecture;
    std::string actuator;
    bool baseline{false};
    MetricVector raw{};
    MetricVector normalized{};
    double cost{0.0};
};

struct MetricSpan {
    MetricVector min{};
    MetricVector max{};
};

inline MetricSpan metric_span(std::span<const MetricVector> population) {
    if (population.empty()) throw InputError("normalization population is empty");
    MetricSpan s{population.front(), population.front()};
    for (const auto& m : population)
        for (std::size_t j = 0; j < kMetricCount; ++j) {
            s.min[j] = std::min(s.min[j], m[j]);
            s.max[j] = std::max(s.max[j], m[j]);
        }
    return s;
}

/// Min-max scaling of one value; a degenerate span maps to 0.
inline double normalize_value(double v, double lo, double hi, Direction d) {
    const double range = hi - lo;
    if (!(range > 0.0)) return 0.0;
    const double t = d == Direction::lower_better ? (v - lo) / range : (hi - v) / range;
    return std::clamp(t, 0.0, 1.0);
}

inline std::vector<MetricVector> normalize(std::span<const MetricVector> population,
                                           const MetricDirections& directions = kDefaultDirections) {
    const MetricSpan s = metric_span(population);
    std::vector<MetricVector> out(population.size());
    for (std::size_t k = 0; k < population.size(); ++k)
        for (std::size_t j = 0; j < kMetricCount; ++j)
            out[k][j] = normalize_value(population[k][j], s.min[j], s.max[j], directions[j]);
    return out;
}

inline double cost(const MetricVector& normalized, const Weights& w) {
    w.validate();
    double xi = 0.0;
    for (std::size_t j = 0; j < kMetricCount; ++j) xi += w.eta[j] * normalized[j];
    return xi;
}

/// Variance penalty: eta-weighted mean of min-max normalized sigma over the region metrics.
inline double variance_penalty(const MetricVector& normalized_sigma, const Weights& w) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < kMetricCount; ++j) {
        if (!kRegionMetric[j]) continue;
        num += w.eta[j] * normalized_sigma[j];
        den += w.eta[j];
    }
    return den > 0.0 ? num / den : 0.0;
}

struct RankOptions {
    MetricDirections directions{kDefaultDirections};
};

/// Normalizes over the whole pool, computes xi and sorts ascending (ties by id).
inline std::vector<RankedCandidate> rank_population(std::span<const RankInput> candidates, const Weights& w,
                                                    const RankOptions& opt = {}) {
    w.validate();
    std::vector<MetricVector> raw, sigma;
    raw.reserve(candidates.size());
    sigma.reserve(candidates.size());
    for (const auto& c : candidates) {
        raw.push_back(c.raw);
        MetricVector s{};
        for (std::size_t j = 0; j < kMetricCount; ++j) s[j] = std::sqrt(std::max(c.variance[j], 0.0));
        sigma.push_back(s);
    }
    const auto norm = normalize(raw, opt.directions);
    std::vector<MetricVector> norm_sigma;
    if (w.variance_weight > 0.0) {
        MetricDirections lower{};
        lower.fill(Direction::lower_better);
        norm_sigma = normalize(sigma, lower);
    }

    std::vector<RankedCandidate> out;
    out.reserve(candidates.size());
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        RankedCandidate r{candidates[k].id, candidates[k].architecture, candidates[k].actuator,
                          candidates[k].baseline, candidates[k].raw, norm[k], cost(norm[k], w)};
        if (w.variance_weight > 0.0)
            r.cost = (1.0 - w.variance_weight) * r.cost + w.variance_weight * variance_penalty(norm_sigma[k], w);
        out.push_back(std::move(r));
    }
    std::stable_sort(out.begin(), out.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
        if (a.cost != b.cost) return a.cost < b.cost;
        return a.id < b.id;
    });
    return out;
}

}  // namespace ankle
