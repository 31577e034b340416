#pragma once

// NSGA-II (fast nondominated sorting, crowding distance, binary tournament,
// simulated binary crossover, polynomial mutation) with constrained dominance.
// All objectives are minimized.
//
// Randomness is drawn from a per-individual stream keyed by
// (seed, generation, index), so parallel evaluation cannot perturb results.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "ankle/errors.hpp"

namespace ankle::moo {

struct Fitness {
    std::vector<double> objectives;
    double violation{0.0};  // 0 when feasible

    [[nodiscard]] bool feasible() const { return violation <= 0.0; }
};

/// Pareto dominance for minimization.
inline bool dominates(std::span<const double> a, std::span<const double> b) {
    bool strictly = false;
    for (std::size_t m = 0; m < a.size(); ++m) {
        if (a[m] > b[m]) return false;
        if (a[m] < b[m]) strictly = true;
    }
    return strictly;
}

/// Feasible beats infeasible; among infeasible, lower violation wins; among feasible, Pareto dominance.
inline bool constrained_dominates(const Fitness& a, const Fitness& b) {
    const bool fa = a.feasible(), fb = b.feasible();
    if (fa && !fb) return true;
    if (!fa && fb) return false;
    if (!fa) return a.violation < b.violation;
    return dominates(a.objectives, b.objectives);
}

/// Fronts by the fast nondominated sort, given a dominance predicate over indices.
template <class Dominates>
std::vector<std::vector<std::size_t>> sort_fronts(std::size_t n, Dominates&& dom) {
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> count(n, 0);
    std::vector<std::vector<std::size_t>> fronts(1);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
            if (dom(p, q)) {
                dominated[p].push_back(q);
                ++count[q];
            } else if (dom(q, p)) {
                dominated[q].push_back(p);
                ++count[p];
            }
        }
    }
    for (std::size_t p = 0; p < n; ++p)
        if (count[p] == 0) fronts[0].push_back(p);
    while (!fronts.back().empty()) {
        std::vector<std::size_t> next;
        for (std::size_t p : fronts.back())
            for (std::size_t q : dominated[p])
                if (--count[q] == 0) next.push_back(q);
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(next));
    }
    fronts.pop_back();
    return fronts;
}

/// Pareto rank of every point (0 = nondominated).
inline std::vector<std::size_t> nondominated_sort(std::span<const std::vector<double>> points) {
    const auto fronts = sort_fronts(points.size(), [&](std::size_t a, std::size_t b) {
        return dominates(points[a], points[b]);
    });
    std::vector<std::size_t> rank(points.size(), 0);
    for (std::size_t r = 0; r < fronts.size(); ++r)
        for (std::size_t i : fronts[r]) rank[i] = r;
    return rank;
}

/// Crowding distance within one front; boundary points get +infinity.
inline std::vector<double> crowding_distance(std::span<const std::vector<double>> front) {
    const std::size_t n = front.size();
    std::vector<double> dist(n, 0.0);
    if (n == 0) return dist;
    if (n <= 2) {
        std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
        return dist;
    }
    const std::size_t m = front[0].size();
    std::vector<std::size_t> order(n);
    for (std::size_t obj = 0; obj < m; ++obj) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return front[a][obj] < front[b][obj]; });
        const double lo = front[order.front()][obj], hi = front[order.back()][obj];
        dist[order.front()] = std::numeric_limits<double>::infinity();
        dist[order.back()] = std::numeric_limits<double>::infinity();
        const double range = hi - lo;
        if (!(range > 0.0) || !std::isfinite(range)) continue;
        for (std::size_t k = 1; k + 1 < n; ++k) {
            const double gap = (front[order[k + 1]][obj] - front[order[k - 1]][obj]) / range;
            if (std::isfinite(gap)) dist[order[k]] += gap;
        }
    }
    return dist;
}

// ---------------------------------------------------------------------------

struct Nsga2Config {
    std::size_t pop_size{100};
    std::size_t generations{200};
    std::uint64_t seed{0};
    double sbx_eta{15.0};
    double mut_eta{20.0};
    double p_mut{-1.0};  // < 0 selects 1 / n_genes
    double p_cross{0.9};
    std::size_t threads{0};  // 0: ANKLE_THREADS or hardware concurrency
};

struct Individual {
    std::vector<double> genes;
    Fitness fitness;
    std::size_t rank{0};
    double crowding{0.0};
};

struct ProgressRecord {
    std::size_t generation{0};
    std::vector<double> best;  // per-objective minimum over feasible individuals (NaN if none)
    std::size_t feasible{0};
};

enum class Nsga2Status { ok, no_feasible_found };

struct Nsga2Result {
    Nsga2Status status{Nsga2Status::ok};
    std::vector<Individual> front;           // feasible rank-0 set of the final population
    std::vector<Individual> best_infeasible;  // lowest-violation individuals when nothing is feasible
    std::vector<ProgressRecord> history;
    std::vector<Individual> population;  // final population
};

template <class P>
concept MultiObjectiveProblem = requires(const P& p, std::span<const double> x) {
    { p.num_genes() } -> std::convertible_to<std::size_t>;
    { p.lower() } -> std::convertible_to<std::vector<double>>;
    { p.upper() } -> std::convertible_to<std::vector<double>>;
    { p.evaluate(x) } -> std::convertible_to<Fitness>;
};

/// Counter-based stream: an independent engine per (seed, generation, index).
inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t generation, std::uint64_t index) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return std::mt19937_64(mix(mix(mix(seed) ^ generation) ^ index));
}

inline std::size_t resolve_threads(std::size_t requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("ANKLE_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<std::size_t>(v);
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

template <class Problem>
void evaluate_all(const Problem& problem, std::vector<Individual>& pop, std::size_t threads) {
    const std::size_t n = pop.size();
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (auto& ind : pop) ind.fitness = problem.evaluate(ind.genes);
        return;
    }
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        workers.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += threads) pop[i].fitness = problem.evaluate(pop[i].genes);
        });
    }
}

namespace detail {

inline double uniform(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

/// Bounded simulated binary crossover (Deb & Agrawal).
inline void sbx(std::vector<double>& c1, std::vector<double>& c2, const std::vector<double>& lo,
                const std::vector<double>& hi, double eta, double p_cross, std::mt19937_64& rng) {
    if (uniform(rng) > p_cross) return;
    for (std::size_t g = 0; g < c1.size(); ++g) {
        if (uniform(rng) > 0.5) continue;
        if (std::abs(c1[g] - c2[g]) <= 1e-14) continue;
        const double y1 = std::min(c1[g], c2[g]), y2 = std::max(c1[g], c2[g]);
        const double yl = lo[g], yu = hi[g];
        const double u = uniform(rng);
        auto betaq = [&](double beta) {
            const double alpha = 2.0 - std::pow(beta, -(eta + 1.0));
            return u <= 1.0 / alpha ? std::pow(u * alpha, 1.0 / (eta + 1.0))
                                    : std::pow(1.0 / (2.0 - u * alpha), 1.0 / (eta + 1.0));
        };
        double v1 = 0.5 * ((y1 + y2) - betaq(1.0 + 2.0 * (y1 - yl) / (y2 - y1)) * (y2 - y1));
        double v2 = 0.5 * ((y1 + y2) + betaq(1.0 + 2.0 * (yu - y2) / (y2 - y1)) * (y2 - y1));
        v1 = std::clamp(v1, yl, yu);
        v2 = std::clamp(v2, yl, yu);
        if (uniform(rng) <= 0.5) std::swap(v1, v2);
        c1[g] = v1;
        c2[g] = v2;
    }
}

/// Bounded polynomial mutation.
inline void polynomial_mutation(std::vector<double>& x, const std::vector<double>& lo, const std::vector<double>& hi,
                                double eta, double p_mut, std::mt19937_64& rng) {
    for (std::size_t g = 0; g < x.size(); ++g) {
        if (uniform(rng) > p_mut) continue;
        const double yl = lo[g], yu = hi[g];
        if (!(yu > yl)) continue;
        const double y = x[g];
        const double d1 = (y - yl) / (yu - yl), d2 = (yu - y) / (yu - yl);
        const double u = uniform(rng);
        const double pw = 1.0 / (eta + 1.0);
        double dq;
        if (u <= 0.5) {
            const double val = 2.0 * u + (1.0 - 2.0 * u) * std::pow(1.0 - d1, eta + 1.0);
            dq = std::pow(val, pw) - 1.0;
        } else {
            const double val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(1.0 - d2, eta + 1.0);
            dq = 1.0 - std::pow(val, pw);
        }
        x[g] = std::clamp(y + dq * (yu - yl), yl, yu);
    }
}

/// Assigns constrained ranks and crowding distances; returns the fronts.
inline std::vector<std::vector<std::size_t>> rank_population(std::vector<Individual>& pop) {
    auto fronts = sort_fronts(pop.size(), [&](std::size_t a, std::size_t b) {
        return constrained_dominates(pop[a].fitness, pop[b].fitness);
    });
    for (std::size_t r = 0; r < fronts.size(); ++r) {
        std::vector<std::vector<double>> pts;
        pts.reserve(fronts[r].size());
        for (std::size_t i : fronts[r]) pts.push_back(pop[i].fitness.objectives);
        const auto cd = crowding_distance(pts);
        for (std::size_t k = 0; k < fronts[r].size(); ++k) {
            pop[fronts[r][k]].rank = r;
            pop[fronts[r][k]].crowding = cd[k];
        }
    }
    return fronts;
}

inline bool crowded_better(const Individual& a, const Individual& b) {
    if (a.rank != b.rank) return a.rank < b.rank;
    return a.crowding > b.crowding;
}

inline ProgressRecord progress(std::size_t generation, const std::vector<Individual>& pop, std::size_t n_obj) {
    ProgressRecord rec;
    rec.generation = generation;
    rec.best.assign(n_obj, std::numeric_limits<double>::quiet_NaN());
    for (const auto& ind : pop) {
        if (!ind.fitness.feasible()) continue;
        ++rec.feasible;
        for (std::size_t m = 0; m < n_obj; ++m)
            if (std::isnan(rec.best[m]) || ind.fitness.objectives[m] < rec.best[m])
                rec.best[m] = ind.fitness.objectives[m];
    }
    return rec;
}

}  // namespace detail

template <MultiObjectiveProblem Problem>
Nsga2Result nsga2(const Problem& problem, const Nsga2Config& cfg,
                  const std::function<void(const ProgressRecord&)>& on_progress = {}) {
    if (cfg.pop_size < 4 || cfg.pop_size % 2 != 0) throw InputError("population size must be even and >= 4");
    const std::size_t n = problem.num_genes();
    const std::vector<double> lo = problem.lower(), hi = problem.upper();
    if (lo.size() != n || hi.size() != n) throw InputError("bounds do not match gene count");
    const double p_mut = cfg.p_mut < 0.0 ? 1.0 / static_cast<double>(n) : cfg.p_mut;
    const std::size_t threads = resolve_threads(cfg.threads);

    std::vector<Individual> pop(cfg.pop_size);
    for (std::size_t i = 0; i < cfg.pop_size; ++i) {
        auto rng = stream(cfg.seed, 0, i);
        pop[i].genes.resize(n);
        for (std::size_t g = 0; g < n; ++g) pop[i].genes[g] = lo[g] + (hi[g] - lo[g]) * detail::uniform(rng);
    }
    evaluate_all(problem, pop, threads);
    detail::rank_population(pop);

    const std::size_t n_obj = pop.front().fitness.objectives.size();
    Nsga2Result result;
    auto record = [&](std::size_t gen) {
        result.history.push_back(detail::progress(gen, pop, n_obj));
        if (on_progress) on_progress(result.history.back());
    };
    record(0);

    for (std::size_t gen = 1; gen <= cfg.generations; ++gen) {
        std::vector<Individual> offspring(cfg.pop_size);
        for (std::size_t pair = 0; pair < cfg.pop_size / 2; ++pair) {
            auto rng = stream(cfg.seed, gen, pair);
            auto tournament = [&]() -> const Individual& {
                std::uniform_int_distribution<std::size_t> pick(0, cfg.pop_size - 1);
                const Individual& a = pop[pick(rng)];
                const Individual& b = pop[pick(rng)];
                if (detail::crowded_better(a, b)) return a;
                if (detail::crowded_better(b, a)) return b;
                return detail::uniform(rng) < 0.5 ? a : b;
            };
            const Individual& p1 = tournament();
            const Individual& p2 = tournament();
            std::vector<double> c1 = p1.genes, c2 = p2.genes;
            detail::sbx(c1, c2, lo, hi, cfg.sbx_eta, cfg.p_cross, rng);
            detail::polynomial_mutation(c1, lo, hi, cfg.mut_eta, p_mut, rng);
            detail::polynomial_mutation(c2, lo, hi, cfg.mut_eta, p_mut, rng);
            offspring[2 * pair].genes = std::move(c1);
            offspring[2 * pair + 1].genes = std::move(c2);
        }
        evaluate_all(problem, offspring, threads);

        std::vector<Individual> merged = std::move(pop);
        merged.insert(merged.end(), std::make_move_iterator(offspring.begin()),
                      std::make_move_iterator(offspring.end()));
        const auto fronts = detail::rank_population(merged);

        std::vector<Individual> next;
        next.reserve(cfg.pop_size);
        for (const auto& front : fronts) {
            if (next.size() + front.size() <= cfg.pop_size) {
                for (std::size_t i : front) next.push_back(merged[i]);
                continue;
            }
            std::vector<std::size_t> order = front;
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return merged[a].crowding > merged[b].crowding; });
            for (std::size_t k = 0; next.size() < cfg.pop_size; ++k) next.push_back(merged[order[k]]);
            break;
        }
        pop = std::move(next);
        detail::rank_population(pop);
        record(gen);
    }

    for (const auto& ind : pop)
        if (ind.rank == 0 && ind.fitness.feasible()) result.front.push_back(ind);
    if (result.front.empty()) {
        result.status = Nsga2Status::no_feasible_found;
        std::vector<Individual> sorted = pop;
        std::stable_sort(sorted.begin(), sorted.end(), [](const Individual& a, const Individual& b) {
            return a.fitness.violation < b.fitness.violation;
        });
        sorted.resize(std::min<std::size_t>(sorted.size(), 5));
        result.best_infeasible = std::move(sorted);
    }
    result.population = std::move(pop);
    return result;
}

}  // namespace ankle::moo
