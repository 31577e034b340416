// ankle: optimize, rank, validate and inspect two-DoF parallel ankle designs.
//
// Exit codes: 0 success, 1 domain infeasibility, 2 input error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ankle/ankle.hpp"

namespace fs = std::filesystem;
using namespace ankle;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 1;
constexpr int kExitInput = 2;

struct ActuatorRef {
    std::vector<ActuatorSpec> catalog;
    ActuatorSpec spec;
};

/// "path:NAME", or "NAME" together with --catalog.
ActuatorRef resolve_actuator(const std::string& ref, const std::string& catalog_path) {
    std::string path = catalog_path, name = ref;
    if (const auto colon = ref.rfind(':'); colon != std::string::npos) {
        path = ref.substr(0, colon);
        name = ref.substr(colon + 1);
    }
    if (path.empty()) throw InputError("actuator '" + ref + "': give a catalog with --catalog or as path:NAME");
    ActuatorRef out;
    out.catalog = io::load_catalog(path);
    out.spec = io::find_actuator(out.catalog, name);
    return out;
}

FootOrientation parse_pose(const std::string& s) {
    const auto comma = s.find(',');
    if (comma == std::string::npos) throw InputError("pose must be 'roll,pitch' in degrees");
    try {
        return {deg2rad(std::stod(s.substr(0, comma))), deg2rad(std::stod(s.substr(comma + 1)))};
    } catch (const std::exception&) {
        throw InputError("pose must be 'roll,pitch' in degrees");
    }
}

io::json nullable(double v) { return std::isfinite(v) ? io::json(v) : io::json(nullptr); }

void emit_progress(const moo::ProgressRecord& r) {
    io::json j{{"event", "generation"}, {"generation", r.generation}, {"feasible", r.feasible}};
    j["best_f1"] = r.best.empty() ? io::json(nullptr) : nullable(r.best[0]);
    j["best_f2"] = r.best.size() < 2 ? io::json(nullptr) : nullable(r.best[1]);
    std::cerr << j.dump() << '\n';
}

void write_file(const fs::path& path, const std::string& content) { io::detail::write_text_file(path, content); }

void check_arch(const std::string& flag, Architecture actual) {
    if (!flag.empty() && parse_architecture(flag) != actual)
        throw InputError("--arch " + flag + " does not match the parameter file (" + std::string(to_string(actual)) +
                         ")");
}

fs::path indexed_path(const fs::path& base, std::size_t k, std::size_t n) {
    if (n == 1) return base;
    fs::path p = base;
    p.replace_filename(base.stem().string() + "_" + std::to_string(k + 1) + base.extension().string());
    return p;
}

std::string deg_range(const AngleInterval& iv) {
    std::ostringstream s;
    s << '[' << rad2deg(iv.lo) << ", " << rad2deg(iv.hi) << ']';
    return s.str();
}

// ---------------------------------------------------------------------------

struct OptimizeArgs {
    std::string arch, actuator, catalog, tasks, region, out;
    std::uint64_t seed{1};
    std::size_t pop{100}, gens{200}, threads{0};
    bool quiet{false};
};

int cmd_optimize(const OptimizeArgs& a) {
    const Architecture arch = parse_architecture(a.arch);
    const ActuatorRef act = resolve_actuator(a.actuator, a.catalog);
    if (act.spec.architecture() != arch)
        throw InputError("actuator '" + act.spec.name + "' is " + std::string(to_string(act.spec.kind)) +
                         " and cannot drive the " + a.arch + " architecture");
    const io::ProblemConfig cfg = io::load_config(a.region);
    auto tasks = io::load_tasks(a.tasks);
    for (const auto& s : io::samples_outside(tasks, cfg.region))
        std::cerr << io::json{{"event", "warning"},
                              {"message", "task sample outside the operational region"},
                              {"task", s.task},
                              {"index", s.index},
                              {"roll_deg", rad2deg(s.pose.roll)},
                              {"pitch_deg", rad2deg(s.pose.pitch)}}
                         .dump()
                  << '\n';

    moo::Nsga2Config ncfg;
    ncfg.seed = a.seed;
    ncfg.pop_size = a.pop;
    ncfg.generations = a.gens;
    ncfg.threads = a.threads;
    const OptimizeOutcome res = run_optimize(cfg, arch, act.spec, std::move(tasks), ncfg,
                                             a.quiet ? std::function<void(const moo::ProgressRecord&)>{} : emit_progress);
    if (res.status == moo::Nsga2Status::no_feasible_found || res.bundle.candidates.empty()) {
        std::cerr << "NoFeasibleFound: no feasible design for " << a.arch << " with " << act.spec.name << '\n';
        for (const auto& ind : res.best_infeasible)
            std::cerr << "  closest design: violation " << ind.fitness.violation << '\n';
        if (res.dropped > 0) std::cerr << "  " << res.dropped << " front members failed metric evaluation\n";
        return kExitInfeasible;
    }
    io::save_bundle(res.bundle, a.out);
    std::cerr << io::json{{"event", "done"},
                          {"candidates", res.bundle.candidates.size()},
                          {"dropped", res.dropped},
                          {"out", a.out}}
                     .dump()
              << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct RankArgs {
    std::vector<std::string> in, baselines;
    std::string weights{"uniform"}, out, catalog;
    std::size_t top{10};
};

int cmd_rank(const RankArgs& a) {
    std::vector<io::ResultBundle> bundles;
    for (const auto& p : a.in) bundles.push_back(io::load_bundle(p));
    const Weights w = parse_weights(a.weights);
    check_compatible(bundles);

    std::vector<io::CandidateRecord> baselines;
    if (!a.baselines.empty()) {
        std::vector<ActuatorSpec> catalog;
        if (!a.catalog.empty()) catalog = io::load_catalog(a.catalog);
        for (const auto& b : bundles) catalog.insert(catalog.end(), b.catalog.begin(), b.catalog.end());
        const io::ProblemConfig cfg = io::config_from_json(bundles.front().config);
        for (const auto& p : a.baselines) {
            auto more = load_baselines(p, catalog, cfg);
            baselines.insert(baselines.end(), more.begin(), more.end());
        }
    }
    const RankReport rep = rank_bundles(bundles, baselines, w);

    if (!a.out.empty()) {
        const fs::path out(a.out);
        if (out.extension() == ".csv") {
            std::ostringstream s;
            write_rank_csv(s, rep);
            write_file(out, s.str());
        } else {
            write_file(out, rank_report_to_json(rep).dump(2) + "\n");
        }
    }
    std::printf("%zu candidates, pool %s\n", rep.ranked.size(), rep.pool_hash.c_str());
    std::printf("%5s  %-32s %-5s %-16s %10s\n", "rank", "id", "arch", "actuator", "cost");
    for (std::size_t k = 0; k < rep.ranked.size(); ++k) {
        const auto& r = rep.ranked[k];
        if (k >= a.top && !r.baseline) continue;
        std::printf("%5zu  %-32s %-5s %-16s %10.6f%s\n", k + 1, r.id.c_str(), r.architecture.c_str(),
                    r.actuator.c_str(), r.cost, r.baseline ? "  (baseline)" : "");
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct ValidateArgs {
    std::string arch{"rsu"}, params, region, out;
    double window{180.0};
    double step{0.0};
};

int cmd_validate(const ValidateArgs& a) {
    if (parse_architecture(a.arch) != Architecture::rsu) throw InputError("validate supports --arch rsu only");
    const io::DesignFile design = io::load_design(a.params);
    check_arch(a.arch, design.arch);
    auto regions = io::load_regions(a.region);
    if (a.step > 0.0)
        for (auto& r : regions) r.step = deg2rad(a.step);

    bool all_contained = true;
    for (std::size_t k = 0; k < regions.size(); ++k) {
        const OperationalRegion& region = regions[k];
        std::string label = "region " + std::to_string(k + 1) + " roll " + deg_range(region.roll) + " pitch " +
                            deg_range(region.pitch);
        RsuParams p;
        try {
            p = std::get<RsuParams>(design.mechanism(&region, nullptr));
        } catch (const InfeasibleDesign& e) {
            std::printf("%s: VIOLATED (realization failed: %s)\n", label.c_str(), e.what());
            all_contained = false;
            continue;
        }
        const auto violation = find_containment_violation(p, region);
        if (violation) {
            std::printf("%s: VIOLATED at roll %.6g deg, pitch %.6g deg (leg %zu, margin %.6g)\n", label.c_str(),
                        rad2deg(violation->pose.roll), rad2deg(violation->pose.pitch), violation->leg + 1,
                        violation->margin);
            all_contained = false;
        } else {
            std::printf("%s: CONTAINED (crank %.6g/%.6g mm, rod %.6g/%.6g mm)\n", label.c_str(), p.crank[0],
                        p.crank[1], p.rod[0], p.rod[1]);
        }
        if (!a.out.empty()) {
            const double half = deg2rad(a.window);
            const SolvabilityMap map = configuration_space_scan(p, OperationalRegion::symmetric(half, region.step));
            std::ostringstream s;
            io::write_solvability_csv(s, map);
            write_file(indexed_path(a.out, k, regions.size()), s.str());
        }
    }
    return all_contained ? kExitOk : kExitInfeasible;
}

// ---------------------------------------------------------------------------

struct IkArgs {
    std::string arch, params, pose, region, actuator, catalog;
    std::string branch{"primary"};
};

int cmd_ik(const IkArgs& a) {
    const io::DesignFile design = io::load_design(a.params);
    check_arch(a.arch, design.arch);
    std::optional<OperationalRegion> region;
    if (!a.region.empty()) region = io::load_config(a.region).region;
    std::optional<ActuatorRef> act;
    if (!a.actuator.empty()) act = resolve_actuator(a.actuator, a.catalog);
    const Mechanism m = design.mechanism(region ? &*region : nullptr, act ? &act->spec : nullptr);
    const FootOrientation pose = parse_pose(a.pose);
    const Branch b = parse_branch(a.branch);

    try {
        std::visit(
            [&](const auto& p) {
                const JointSolution q = inverse_kinematics(p, pose, {b, b});
                const bool linear = architecture_of(m) == Architecture::spu;
                for (std::size_t i = 0; i < 2; ++i) {
                    if (linear)
                        std::printf("leg %zu: zeta = %.12g mm\n", i + 1, q.q[i]);
                    else
                        std::printf("leg %zu: alpha = %.12g deg (%s)\n", i + 1, rad2deg(q.q[i]),
                                    std::string(to_string(b)).c_str());
                }
                std::printf("loop closure residual: %.3g\n", loop_closure_residual(p, pose, q));
                try {
                    const AnkleJacobian jac = jacobian(p, pose, q);
                    std::printf("manipulability ratio: %.12g\n", manipulability_ratio(jac));
                } catch (const Singular&) {
                    std::printf("manipulability ratio: singular\n");
                }
            },
            m);
    } catch (const Unreachable& e) {
        std::printf("UNREACHABLE: leg %zu, existence-condition excess %.12g\n", e.leg() + 1, e.excess());
        return kExitInfeasible;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct MetricsArgs {
    std::string arch, params, actuator, catalog, region, out, diagnostics;
};

int cmd_metrics(const MetricsArgs& a) {
    const io::DesignFile design = io::load_design(a.params);
    check_arch(a.arch, design.arch);
    const io::ProblemConfig cfg = io::load_config(a.region);
    const ActuatorRef act = resolve_actuator(a.actuator, a.catalog);
    if (act.spec.architecture() != design.arch)
        throw InputError("actuator '" + act.spec.name + "' does not fit the design architecture");
    const Mechanism m = design.mechanism(&cfg.region, &act.spec, cfg.realize);
    const WeightMap map = weight_map_for(cfg);
    const AnkleMetrics met = mechanism_metrics(m, act.spec, cfg, map);
    io::CandidateRecord rec;
    io::fill_metrics(rec, met);

    for (std::size_t j = 0; j < kMetricCount; ++j) {
        if (kRegionMetric[j])
            std::printf("%-20s mean %.12g  sd %.12g\n", std::string(kMetricNames[j]).c_str(), rec.mean[j],
                        std::sqrt(rec.variance[j]));
        else
            std::printf("%-20s %.12g\n", std::string(kMetricNames[j]).c_str(), rec.mean[j]);
    }
    std::printf("excluded poses: %zu (%zu in core)\n", rec.excluded_poses, rec.excluded_in_core);

    if (!a.out.empty()) {
        io::json metrics = io::json::object();
        for (std::size_t j = 0; j < kMetricCount; ++j)
            metrics[std::string(kMetricNames[j])] = {{"mean", rec.mean[j]}, {"variance", rec.variance[j]}};
        write_file(a.out, io::json{{"params", io::mechanism_to_json(m)},
                                   {"actuator", act.spec.name},
                                   {"metrics", metrics},
                                   {"excluded_poses", rec.excluded_poses},
                                   {"excluded_in_core", rec.excluded_in_core}}
                                  .dump(2) +
                              "\n");
    }
    if (!a.diagnostics.empty()) {
        std::ostringstream s;
        std::visit([&](const auto& p) { io::write_pose_diagnostics_csv(s, pose_diagnostics(p, act.spec, map, cfg.branch)); },
                   m);
        write_file(a.diagnostics, s.str());
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Design, evaluate and rank two-DoF parallel ankle mechanisms"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(io::kToolVersion));

    OptimizeArgs opt;
    auto* optimize = app.add_subcommand("optimize", "Run the multi-objective design optimization");
    optimize->add_option("--arch", opt.arch, "Architecture")->required()->check(CLI::IsMember({"spu", "rsu"}));
    optimize->add_option("--actuator", opt.actuator, "Actuator: NAME (with --catalog) or catalog.json:NAME")->required();
    optimize->add_option("--catalog", opt.catalog, "Actuator catalog");
    optimize->add_option("--tasks", opt.tasks, "Directory of task CSV files")->required();
    optimize->add_option("--region", opt.region, "Problem config (JSON)")->required();
    optimize->add_option("--seed", opt.seed, "Random seed");
    optimize->add_option("--pop", opt.pop, "Population size (even)");
    optimize->add_option("--gens", opt.gens, "Generations");
    optimize->add_option("--threads", opt.threads, "Worker threads (default: ANKLE_THREADS or all cores)");
    optimize->add_flag("--quiet", opt.quiet, "No progress output");
    optimize->add_option("--out", opt.out, "Output bundle")->required();

    RankArgs rk;
    auto* rank = app.add_subcommand("rank", "Rank candidates from one or more bundles");
    rank->add_option("--in", rk.in, "Input bundles")->required();
    rank->add_option("--weights", rk.weights, "'uniform', a metric name, 'name=value,...' or seven values");
    rank->add_option("--baseline", rk.baselines, "Baseline files");
    rank->add_option("--catalog", rk.catalog, "Extra catalog for baseline actuators");
    rank->add_option("--out", rk.out, "Ranking output (.csv or .json)");
    rank->add_option("--top", rk.top, "Rows printed to stdout");

    ValidateArgs va;
    auto* validate = app.add_subcommand("validate", "Check that realized RSU designs close over their regions");
    validate->add_option("--arch", va.arch, "Architecture")->check(CLI::IsMember({"rsu"}));
    validate->add_option("--params", va.params, "Design file")->required();
    validate->add_option("--region", va.region, "Config with operational_region or a regions list")->required();
    validate->add_option("--window", va.window, "Half-width of the scan window in degrees");
    validate->add_option("--step", va.step, "Override the grid step in degrees");
    validate->add_option("--out", va.out, "Solvability grid CSV (one per region)");

    IkArgs ik;
    auto* ikc = app.add_subcommand("ik", "Joint solution for one pose");
    ikc->add_option("--arch", ik.arch, "Architecture")->check(CLI::IsMember({"spu", "rsu"}));
    ikc->add_option("--params", ik.params, "Design file")->required();
    ikc->add_option("--pose", ik.pose, "roll,pitch in degrees")->required()->allow_extra_args(false);
    ikc->add_option("--region", ik.region, "Config used to realize gamma/delta designs");
    ikc->add_option("--actuator", ik.actuator, "Actuator for SPU stroke limits");
    ikc->add_option("--catalog", ik.catalog, "Actuator catalog");
    ikc->add_option("--branch", ik.branch, "RSU branch")->check(CLI::IsMember({"primary", "secondary"}));

    MetricsArgs me;
    auto* metrics = app.add_subcommand("metrics", "Seven performance metrics of one design");
    metrics->add_option("--arch", me.arch, "Architecture")->check(CLI::IsMember({"spu", "rsu"}));
    metrics->add_option("--params", me.params, "Design file")->required();
    metrics->add_option("--actuator", me.actuator, "Actuator: NAME (with --catalog) or catalog.json:NAME")->required();
    metrics->add_option("--catalog", me.catalog, "Actuator catalog");
    metrics->add_option("--region", me.region, "Problem config (JSON)")->required();
    metrics->add_option("--out", me.out, "Metrics JSON");
    metrics->add_option("--diagnostics", me.diagnostics, "Per-pose capability CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*optimize) return cmd_optimize(opt);
        if (*rank) return cmd_rank(rk);
        if (*validate) return cmd_validate(va);
        if (*ikc) return cmd_ik(ik);
        if (*metrics) return cmd_metrics(me);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitInput;
}
