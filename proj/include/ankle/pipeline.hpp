#pragma once

// Orchestration shared by the command-line tool and the tests: optimization
// runs producing bundles, baseline injection and cross-bundle ranking.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ankle/io.hpp"
#include "ankle/metrics.hpp"
#include "ankle/nsga2.hpp"
#include "ankle/optimizer.hpp"
#include "ankle/ranking.hpp"

namespace ankle {

inline WeightMap weight_map_for(const io::ProblemConfig& cfg) {
    return build_weight_map(cfg.core_region(), cfg.metrics_region());
}

inline AnkleMetrics mechanism_metrics(const Mechanism& m, const ActuatorSpec& act, const io::ProblemConfig& cfg,
                                      const WeightMap& map) {
    const double ground = cfg.require_ground_offset();
    return std::visit([&](const auto& p) { return evaluate_metrics(p, act, map, ground, cfg.branch); }, m);
}

inline AnkleMetrics mechanism_metrics(const Mechanism& m, const ActuatorSpec& act, const io::ProblemConfig& cfg) {
    return mechanism_metrics(m, act, cfg, weight_map_for(cfg));
}

inline ProblemSetup make_setup(const io::ProblemConfig& cfg, Architecture arch, const ActuatorSpec& act,
                               std::vector<TaskTrajectory> tasks) {
    ProblemSetup s;
    s.space = make_design_space(arch, cfg.symmetric, cfg.bounds_for(arch));
    s.tasks = std::move(tasks);
    s.actuator = act;
    s.region = cfg.region;
    s.constraints = cfg.constraints;
    s.branch = cfg.branch;
    s.realize = cfg.realize;
    return s;
}

inline std::string candidate_id(Architecture arch, const std::string& actuator, std::uint64_t seed, std::size_t k) {
    char num[16];
    std::snprintf(num, sizeof num, "%04zu", k);
    return std::string(to_string(arch)) + "-" + actuator + "-s" + std::to_string(seed) + "-" + num;
}

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct OptimizeOutcome {
    moo::Nsga2Status status{moo::Nsga2Status::ok};
    io::ResultBundle bundle;
    std::vector<moo::Individual> best_infeasible;
    std::size_t dropped{0};  // front members whose metrics could not be evaluated
};

/// One actuator-architecture optimization. The bundle holds the feasible front
/// ordered by (f1, f2), each member with realized parameters and raw metrics.
inline OptimizeOutcome run_optimize(const io::ProblemConfig& cfg, Architecture arch, const ActuatorSpec& act,
                                    std::vector<TaskTrajectory> tasks, const moo::Nsga2Config& ncfg,
                                    const std::function<void(const moo::ProgressRecord&)>& on_progress = {}) {
    (void)cfg.require_ground_offset();
    const AnkleProblem problem(make_setup(cfg, arch, act, std::move(tasks)));
    const moo::Nsga2Result res = moo::nsga2(problem, ncfg, on_progress);

    OptimizeOutcome out;
    out.status = res.status;
    out.best_infeasible = res.best_infeasible;
    out.bundle.config = cfg.snapshot;
    out.bundle.catalog = {act};
    out.bundle.provenance = {ncfg.seed, ncfg.pop_size, ncfg.generations, utc_timestamp(), {}};

    std::vector<moo::Individual> front = res.front;
    std::stable_sort(front.begin(), front.end(), [](const moo::Individual& a, const moo::Individual& b) {
        return a.fitness.objectives < b.fitness.objectives;
    });
    // Offspring can duplicate a parent exactly; keep one copy.
    front.erase(std::unique(front.begin(), front.end(),
                            [](const moo::Individual& a, const moo::Individual& b) { return a.genes == b.genes; }),
                front.end());

    const WeightMap map = weight_map_for(cfg);
    std::size_t k = 0;
    for (const auto& ind : front) {
        io::CandidateRecord c;
        c.architecture = std::string(to_string(arch));
        c.actuator = act.name;
        c.genes = ind.genes;
        c.evaluation = problem.evaluate_design(ind.genes);
        try {
            const Mechanism m = realize_design(problem.setup(), ind.genes);
            io::fill_metrics(c, mechanism_metrics(m, act, cfg, map));
            c.params = m;
        } catch (const Error&) {
            ++out.dropped;
            continue;
        }
        c.id = candidate_id(arch, act.name, ncfg.seed, k++);
        out.bundle.candidates.push_back(std::move(c));
    }
    out.bundle.provenance.pool_hash = io::pool_hash(out.bundle.rank_inputs());
    return out;
}

// ---------------------------------------------------------------------------
// Baselines

/// Baseline file: {"baselines": [ {id, architecture, actuator, design | metrics}, ... ]}.
/// "design" is a design file evaluated with the named catalog actuator; "metrics"
/// gives the seven raw values directly (used for serial drives).
inline std::vector<io::CandidateRecord> load_baselines(const std::filesystem::path& path,
                                                       const std::vector<ActuatorSpec>& catalog,
                                                       const io::ProblemConfig& cfg) {
    using namespace io::detail;
    const io::json j = read_json_file(path);
    const io::json& list = j.is_array() ? j : field(j, "baselines", "baseline");
    if (!list.is_array()) throw SchemaError("baseline.baselines: expected an array");
    std::vector<io::CandidateRecord> out;
    for (std::size_t k = 0; k < list.size(); ++k) {
        const std::string p = "baselines[" + std::to_string(k) + "]";
        const io::json& e = list[k];
        io::CandidateRecord c;
        c.id = text(e, "id", p);
        c.actuator = text(e, "actuator", p);
        c.baseline = true;
        if (e.contains("metrics")) {
            c.architecture = text(e, "architecture", p);
            const io::json& m = e.at("metrics");
            for (std::size_t i = 0; i < kMetricCount; ++i) {
                const std::string name(kMetricNames[i]);
                const io::json& v = field(m, name, p + ".metrics");
                if (v.is_object()) {
                    c.mean[i] = number(v, "mean", p + ".metrics." + name);
                    c.variance[i] = number_or(v, "variance", 0.0, p + ".metrics." + name);
                } else {
                    c.mean[i] = number(v, p + ".metrics." + name);
                }
            }
        } else {
            const io::DesignFile d = io::design_from_json(field(e, "design", p), p + ".design");
            const ActuatorSpec& act = io::find_actuator(catalog, c.actuator);
            if (act.architecture() != d.arch)
                throw InputError(p + ": actuator '" + act.name + "' does not fit the design architecture");
            const Mechanism m = d.mechanism(&cfg.region, &act, cfg.realize);
            c.architecture = std::string(to_string(d.arch));
            io::fill_metrics(c, mechanism_metrics(m, act, cfg));
            c.params = m;
        }
        out.push_back(std::move(c));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ranking across bundles

/// Bundles may be ranked together only if regions, grids, ground offset and directions agree.
inline void check_compatible(const std::vector<io::ResultBundle>& bundles) {
    if (bundles.empty()) throw InputError("no bundles to rank");
    const io::ProblemConfig ref = io::config_from_json(bundles.front().config);
    for (std::size_t k = 1; k < bundles.size(); ++k) {
        const io::ProblemConfig c = io::config_from_json(bundles[k].config);
        auto fail = [&](const std::string& what) {
            throw IncompatibleBundles("bundle " + std::to_string(k + 1) + " differs from bundle 1 in " + what);
        };
        if (!(c.region == ref.region)) fail("operational region");
        if (!(c.core == ref.core)) fail("core region");
        if (c.metrics_step != ref.metrics_step) fail("metrics grid step");
        if (c.ground_offset != ref.ground_offset) fail("ground offset");
        if (c.directions != ref.directions) fail("metric directions");
        if (c.branch != ref.branch) fail("RSU branch selection");
    }
}

struct RankReport {
    std::vector<RankedCandidate> ranked;
    std::string pool_hash;
    MetricDirections directions{kDefaultDirections};
    Weights weights;
};

inline RankReport rank_bundles(const std::vector<io::ResultBundle>& bundles,
                               const std::vector<io::CandidateRecord>& baselines, const Weights& w) {
    check_compatible(bundles);
    w.validate();
    std::vector<RankInput> pool;
    std::set<std::string> ids;
    auto add = [&](const RankInput& r) {
        if (!ids.insert(r.id).second) throw IncompatibleBundles("duplicate candidate id '" + r.id + "'");
        pool.push_back(r);
    };
    for (const auto& b : bundles)
        for (const auto& c : b.candidates) add(c.rank_input());
    for (const auto& c : baselines) add(c.rank_input());
    if (pool.empty()) throw InputError("candidate pool is empty");

    RankReport rep;
    rep.directions = io::config_from_json(bundles.front().config).directions;
    rep.weights = w;
    rep.ranked = rank_population(pool, w, {rep.directions});
    rep.pool_hash = io::pool_hash(pool);
    return rep;
}

/// Parses "uniform", a metric name (one-hot), or "name=value,..." / seven comma-separated values.
inline Weights parse_weights(const std::string& spec) {
    if (spec.empty() || spec == "uniform") return Weights::uniform();
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : spec) {
        if (ch == ',') {
            parts.push_back(cur);
            cur.clear();
        } else if (ch != ' ') {
            cur += ch;
        }
    }
    parts.push_back(cur);
    auto num = [](const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw BadWeights("invalid weight '" + s + "'");
        }
    };
    Weights w;
    if (parts.size() == 1 && parts[0].find('=') == std::string::npos) {
        try {
            return Weights::one_hot(metric_index(parts[0]));
        } catch (const InputError&) {
            throw BadWeights("unknown weight preset '" + parts[0] + "'");
        }
    }
    if (parts.size() == kMetricCount && parts[0].find('=') == std::string::npos) {
        for (std::size_t j = 0; j < kMetricCount; ++j) w.eta[j] = num(parts[j]);
    } else {
        for (const auto& p : parts) {
            const auto eq = p.find('=');
            if (eq == std::string::npos) throw BadWeights("expected name=value, got '" + p + "'");
            const std::string name = p.substr(0, eq);
            if (name == "variance") {
                w.variance_weight = num(p.substr(eq + 1));
                continue;
            }
            try {
                w.eta[metric_index(name)] = num(p.substr(eq + 1));
            } catch (const BadWeights&) {
                throw;
            } catch (const InputError& e) {
                throw BadWeights(e.what());
            }
        }
    }
    w.validate();
    return w;
}

/// Per actuator-architecture group: the cost of every candidate, sorted ascending.
inline std::map<std::string, std::vector<double>> cost_distributions(const std::vector<RankedCandidate>& ranked) {
    std::map<std::string, std::vector<double>> out;
    for (const auto& r : ranked)
        if (!r.baseline) out[r.architecture + "/" + r.actuator].push_back(r.cost);
    for (auto& [_, v] : out) std::sort(v.begin(), v.end());
    return out;
}

inline io::json rank_report_to_json(const RankReport& rep) {
    io::json rows = io::json::array();
    for (std::size_t k = 0; k < rep.ranked.size(); ++k) {
        const auto& r = rep.ranked[k];
        io::json raw = io::json::object(), norm = io::json::object();
        for (std::size_t j = 0; j < kMetricCount; ++j) {
            raw[std::string(kMetricNames[j])] = r.raw[j];
            norm[std::string(kMetricNames[j])] = r.normalized[j];
        }
        rows.push_back({{"rank", k + 1},
                        {"id", r.id},
                        {"architecture", r.architecture},
                        {"actuator", r.actuator},
                        {"baseline", r.baseline},
                        {"cost", r.cost},
                        {"raw", raw},
                        {"normalized", norm}});
    }
    io::json weights = io::json::object(), dirs = io::json::object();
    for (std::size_t j = 0; j < kMetricCount; ++j) {
        weights[std::string(kMetricNames[j])] = rep.weights.eta[j];
        dirs[std::string(kMetricNames[j])] = std::string(to_string(rep.directions[j]));
    }
    io::json dist = io::json::object();
    for (const auto& [group, costs] : cost_distributions(rep.ranked)) dist[group] = costs;
    io::json baselines = io::json::object();
    for (const auto& r : rep.ranked)
        if (r.baseline) baselines[r.id] = r.cost;
    return {{"pool_hash", rep.pool_hash},
            {"weights", weights},
            {"variance_weight", rep.weights.variance_weight},
            {"directions", dirs},
            {"ranking", rows},
            {"cost_distributions", dist},
            {"baselines", baselines}};
}

inline void write_rank_csv(std::ostream& out, const RankReport& rep) {
    out << "rank,id,architecture,actuator,baseline,cost";
    for (const auto& n : kMetricNames) out << ',' << n;
    for (const auto& n : kMetricNames) out << ",norm_" << n;
    out << '\n';
    out.precision(17);
    for (std::size_t k = 0; k < rep.ranked.size(); ++k) {
        const auto& r = rep.ranked[k];
        out << k + 1 << ',' << r.id << ',' << r.architecture << ',' << r.actuator << ',' << (r.baseline ? 1 : 0)
            << ',' << r.cost;
        for (double v : r.raw) out << ',' << v;
        for (double v : r.normalized) out << ',' << v;
        out << '\n';
    }
}

}  // namespace ankle
