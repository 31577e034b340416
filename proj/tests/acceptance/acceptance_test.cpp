// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>

#include "support.hpp"

using namespace ankle;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass{true};
    std::string detail;
};

struct Command {
    int status{-1};
    std::string output;
};

Command run(const std::string& cmd) {
    Command c;
    FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
    if (!pipe) return c;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) c.output.append(buf, n);
    const int raw = pclose(pipe);
    c.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return c;
}

std::string cli() { return std::string(ANKLE_CLI); }
std::string data(const std::string& rel) { return fx::data_path(rel); }

std::size_t count_of(const std::string& text, const std::string& word) {
    std::size_t n = 0;
    for (auto pos = text.find(word); pos != std::string::npos; pos = text.find(word, pos + word.size())) ++n;
    return n;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// 1 -------------------------------------------------------------------------

Outcome fig4_reproduction() {
    const Command c =
        run(cli() + " validate --arch rsu --params " + data("fig4_params.json") + " --region " + data("fig4_regions.json"));
    const std::size_t contained = count_of(c.output, "CONTAINED");
    Outcome o;
    o.pass = c.status == 0 && contained == 6 && count_of(c.output, "VIOLATED") == 0;
    o.detail = std::to_string(contained) + "/6 regions contained, exit " + std::to_string(c.status);
    return o;
}

// 2 -------------------------------------------------------------------------

Outcome reparam_fuzz() {
    fx::Rng rng(2024);
    int draws = 0, rejected = 0;
    std::size_t solves = 0, failures = 0;
    while (draws < 1000) {
        RsuFreeParams f;
        f.geom = fx::random_rsu_geometry(rng);
        f.gamma = {rng.uniform(0.0, 0.9), rng.uniform(0.0, 0.9)};
        f.delta = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
        const OperationalRegion region = fx::random_region(rng, 60.0, 2.0);
        RsuParams p;
        try {
            p = realize(f, region);
        } catch (const InfeasibleDesign&) {
            ++rejected;
            continue;
        }
        ++draws;
        for (const auto& x : region.grid())
            for (Branch b : {Branch::primary, Branch::secondary}) {
                ++solves;
                try {
                    (void)ik_rsu(p, x, {b, b});
                } catch (const Error&) {
                    ++failures;
                }
            }
    }
    return {failures == 0, std::to_string(draws) + " designs, " + std::to_string(solves) + " IK solves, " +
                               std::to_string(failures) + " failures, " + std::to_string(rejected) +
                               " draws rejected at realization"};
}

// 3 -------------------------------------------------------------------------

struct RoundTrip {
    int done{0};
    double max_err{0.0}, max_res{0.0};
    int root_switches{0};  // wide seeds that converged to a different pose with the same joints
};

template <class Draw>
RoundTrip round_trips(fx::Rng& rng, Draw draw) {
    RoundTrip out;
    while (out.done < 1000) {
        const auto [p, x] = draw(rng);
        JointSolution q;
        try {
            q = inverse_kinematics(p, x, kPrimaryBranches);
            if (manipulability_ratio(jacobian(p, x, q)) > 100.0) continue;
        } catch (const Error&) {
            continue;
        }
        const FootOrientation seed{x.roll + rng.uniform(-1e-3, 1e-3), x.pitch + rng.uniform(-1e-3, 1e-3)};
        const FootOrientation y = fk_numeric(p, q, seed);
        out.max_err = std::max({out.max_err, std::abs(y.roll - x.roll), std::abs(y.pitch - x.pitch)});
        out.max_res = std::max(out.max_res, loop_closure_residual(p, x, q));

        const FootOrientation wide{x.roll + rng.uniform(-0.03, 0.03), x.pitch + rng.uniform(-0.03, 0.03)};
        try {
            const FootOrientation z = fk_numeric(p, q, wide);
            if (std::max(std::abs(z.roll - x.roll), std::abs(z.pitch - x.pitch)) > 1e-8) ++out.root_switches;
        } catch (const NoConvergence&) {
        }
        ++out.done;
    }
    return out;
}

Outcome ik_fk_round_trip() {
    fx::Rng rng(3);
    const RoundTrip spu = round_trips(rng, [](fx::Rng& r) {
        const SpuParams p = fx::random_spu(r);
        return std::pair{p, FootOrientation{r.uniform(-0.6, 0.6), r.uniform(-0.9, 0.5)}};
    });
    const RoundTrip rsu = round_trips(rng, [](fx::Rng& r) {
        const auto d = fx::random_rsu_design(r);
        return std::pair{d.params, fx::random_pose_in(r, d.region)};
    });
    const bool pass = spu.max_err < 1e-8 && rsu.max_err < 1e-8 && spu.max_res < 1e-9 && rsu.max_res < 1e-9;
    return {pass, "SPU max err " + fmt("%.2e", spu.max_err) + " rad, residual " + fmt("%.2e", spu.max_res) +
                      "; RSU max err " + fmt("%.2e", rsu.max_err) + " rad, residual " + fmt("%.2e", rsu.max_res) +
                      "; seeds within 1e-3 rad; with 0.03 rad seeds " +
                      std::to_string(spu.root_switches + rsu.root_switches) + "/2000 reach a neighbouring root"};
}

// 4 -------------------------------------------------------------------------

Outcome jacobian_vs_fd() {
    fx::Rng rng(4);
    double worst_spu = 0, worst_rsu = 0;
    int n_spu = 0, n_rsu = 0;
    while (n_spu < 500) {
        const SpuParams p = fx::random_spu(rng);
        const FootOrientation x{rng.uniform(-0.6, 0.6), rng.uniform(-0.9, 0.5)};
        AnkleJacobian jac;
        try {
            jac = jacobian(p, x, ik_spu(p, x));
            if (manipulability_ratio(jac) > 100.0) continue;
        } catch (const Error&) {
            continue;
        }
        const Mat2 fd = fx::fd_ik_jacobian(p, x, kPrimaryBranches);
        worst_spu = std::max(worst_spu, (jac.G - fd).norm() / jac.G.norm());
        ++n_spu;
    }
    while (n_rsu < 500) {
        const auto d = fx::random_rsu_design(rng);
        const FootOrientation x = fx::random_pose_in(rng, d.region);
        AnkleJacobian jac;
        try {
            jac = jacobian(d.params, x, ik_rsu(d.params, x));
            if (manipulability_ratio(jac) > 100.0) continue;
        } catch (const Error&) {
            continue;
        }
        const Mat3 R = foot_rotation(x);
        if (std::min(existence_margin(rsu_leg_polar(d.params, 0, R)),
                     existence_margin(rsu_leg_polar(d.params, 1, R))) < 1e-4)
            continue;
        const Mat2 fd = fx::fd_ik_jacobian(d.params, x, kPrimaryBranches);
        worst_rsu = std::max(worst_rsu, (jac.G - fd).norm() / jac.G.norm());
        ++n_rsu;
    }
    return {worst_spu < 1e-6 && worst_rsu < 1e-6,
            "worst relative error SPU " + fmt("%.2e", worst_spu) + ", RSU " + fmt("%.2e", worst_rsu) + " (500 each)"};
}

// 5 -------------------------------------------------------------------------

Outcome manipulability() {
    fx::Rng rng(5);
    double min_kappa = HUGE_VAL, worst = 0.0;
    for (int k = 0; k < 2000; ++k) {
        Mat2 J;
        J << rng.normal(), rng.normal(), rng.normal(), rng.normal();
        double kappa;
        try {
            kappa = manipulability_ratio(J);
        } catch (const Singular&) {
            continue;
        }
        const Vec2 s = fx::svd_singular_values(J);
        min_kappa = std::min(min_kappa, kappa);
        worst = std::max(worst, std::abs(kappa - s[0] / s[1]) / kappa);
    }
    Mat2 D = Mat2::Zero();
    D(0, 0) = 2.0;
    D(1, 1) = 1.0;
    const double diag = manipulability_ratio(D);
    return {min_kappa >= 1.0 && diag == 2.0 && worst < 1e-10,
            "min kappa " + fmt("%.6f", min_kappa) + ", kappa(diag(2,1)) = " + fmt("%.15g", diag) +
                ", worst SVD mismatch " + fmt("%.2e", worst)};
}

// 6 -------------------------------------------------------------------------

Outcome nsga2_sanity() {
    moo::Nsga2Config cfg;
    cfg.pop_size = 100;
    cfg.generations = 100;
    cfg.seed = 7;
    const auto a = moo::nsga2(fx::DiagonalFront{5}, cfg);
    const auto b = moo::nsga2(fx::DiagonalFront{5}, cfg);
    std::vector<std::vector<double>> f;
    for (const auto& i : a.front) f.push_back(i.fitness.objectives);
    const double hv = fx::hypervolume_2d(f, 1.1, 1.1);
    bool nondominated = true;
    for (const auto& p : f)
        for (const auto& q : f) nondominated = nondominated && !moo::dominates(p, q);
    const auto ranks = fx::brute_force_ranks(f);
    nondominated = nondominated && std::all_of(ranks.begin(), ranks.end(), [](std::size_t r) { return r == 0; });
    bool identical = a.population.size() == b.population.size();
    for (std::size_t k = 0; identical && k < a.population.size(); ++k)
        identical = a.population[k].genes == b.population[k].genes;
    return {hv >= 0.99 * 0.71 && nondominated && identical,
            "hypervolume " + fmt("%.4f", hv) + " (ideal 0.71), front " + std::to_string(f.size()) +
                (nondominated ? " nondominated" : " DOMINATED") + (identical ? ", repeat identical" : ", repeat differs")};
}

// 7 -------------------------------------------------------------------------

Outcome ranking_algebra() {
    fx::Rng rng(7);
    bool ok = true;
    int trials = 0;
    for (; trials < 200; ++trials) {
        const int n = rng.integer(1, 25);
        std::vector<RankInput> pool(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) {
            auto& r = pool[static_cast<std::size_t>(k)];
            r.id = "c" + std::to_string(k);
            for (std::size_t j = 0; j < kMetricCount; ++j) {
                r.raw[j] = rng.uniform(-50, 50);
                r.variance[j] = kRegionMetric[j] ? rng.uniform(0, 3) : 0.0;
            }
        }
        const std::size_t flat = static_cast<std::size_t>(rng.integer(0, kMetricCount - 1));
        for (auto& r : pool) r.raw[flat] = 3.0;
        Weights w;
        double sum = 0;
        for (double& e : w.eta) sum += (e = rng.uniform(0, 1));
        for (double& e : w.eta) e /= sum;
        w.variance_weight = rng.uniform(0, 1);

        const auto before = rank_population(pool, w);
        for (const auto& r : before) {
            ok = ok && r.cost >= 0.0 && r.cost <= 1.0 + 1e-15 && r.normalized[flat] == 0.0;
            for (double m : r.normalized) ok = ok && m >= 0.0 && m <= 1.0;
        }
        const std::size_t j = static_cast<std::size_t>(rng.integer(0, kMetricCount - 1));
        const double scale = rng.uniform(0.01, 100.0), shift = rng.uniform(-1e3, 1e3);
        for (auto& r : pool) {
            r.raw[j] = scale * r.raw[j] + shift;
            r.variance[j] *= scale * scale;
        }
        const auto after = rank_population(pool, w);
        ok = ok && before.front().id == after.front().id;
        for (std::size_t k = 0; k < before.size(); ++k) {
            const auto& a = before[k];
            const auto it = std::find_if(after.begin(), after.end(), [&](const auto& r) { return r.id == a.id; });
            for (std::size_t m = 0; m < kMetricCount; ++m)
                ok = ok && std::abs(a.normalized[m] - it->normalized[m]) < 1e-12;
        }
    }
    return {ok, std::to_string(trials) + " random pools: bounds, affine invariance, degenerate span"};
}

// 8 -------------------------------------------------------------------------

Outcome weight_map() {
    const io::ProblemConfig cfg = io::load_config(data("config.json"));
    const OperationalRegion& ext = cfg.region;
    const OperationalRegion& core = cfg.core;
    const WeightMap map = build_weight_map(core, ext);
    bool core_one = true, boundary_zero = true, monotone = true;
    for (std::size_t k = 0; k < map.poses.size(); ++k) {
        const auto& x = map.poses[k];
        if (core.contains(x)) core_one = core_one && map.weights[k] == 1.0;
        const bool edge = std::abs(x.roll - ext.roll.lo) < 1e-12 || std::abs(x.roll - ext.roll.hi) < 1e-12 ||
                          std::abs(x.pitch - ext.pitch.lo) < 1e-12 || std::abs(x.pitch - ext.pitch.hi) < 1e-12;
        if (edge) boundary_zero = boundary_zero && map.weights[k] == 0.0;
    }
    const auto rs = grid_samples(ext.roll, ext.step), ps = grid_samples(ext.pitch, ext.step);
    auto w = [&](std::size_t i, std::size_t j) { return map.weights[i * ps.size() + j]; };
    for (std::size_t i = 0; i < rs.size(); ++i)
        for (std::size_t j = 0; j + 1 < ps.size(); ++j) {
            if (ps[j + 1] > core.pitch.hi) monotone = monotone && w(i, j + 1) <= w(i, j);
            if (ps[j] < core.pitch.lo) monotone = monotone && w(i, j + 1) >= w(i, j);
        }
    for (std::size_t j = 0; j < ps.size(); ++j)
        for (std::size_t i = 0; i + 1 < rs.size(); ++i) {
            if (rs[i + 1] > core.roll.hi) monotone = monotone && w(i + 1, j) <= w(i, j);
            if (rs[i] < core.roll.lo) monotone = monotone && w(i + 1, j) >= w(i, j);
        }
    const double half_roll = region_weight({0.5 * (core.roll.hi + ext.roll.hi), 0.0}, core, ext);
    const double half_pitch = region_weight({0.0, 0.5 * (core.pitch.lo + ext.pitch.lo)}, core, ext);
    const bool half = std::abs(half_roll - 0.5) < 1e-12 && std::abs(half_pitch - 0.5) < 1e-12;
    return {core_one && boundary_zero && monotone && half,
            std::to_string(map.poses.size()) + " poses: core " + (core_one ? "1" : "not 1") + ", boundary " +
                (boundary_zero ? "0" : "not 0") + ", s=0.5 gives " + fmt("%.12g", half_roll) +
                (monotone ? ", monotone" : ", NOT monotone")};
}

// 9 -------------------------------------------------------------------------

Outcome end_to_end() {
    const fs::path dir = fs::temp_directory_path() / ("ankle_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const std::string bundle = (dir / "rsu.json").string();
    const Command opt = run(cli() + " optimize --arch rsu --actuator RMD-X6-P20-60 --catalog " + data("catalog.json") +
                            " --tasks " + data("tasks") + " --region " + data("config.json") +
                            " --seed 1 --pop 8 --gens 5 --quiet --out " + bundle);
    Outcome o;
    if (opt.status != 0) {
        fs::remove_all(dir);
        return {false, "optimize exit " + std::to_string(opt.status) + ": " + opt.output};
    }
    std::size_t n = 0;
    try {
        const io::ResultBundle b = io::load_bundle(bundle);
        n = b.candidates.size();
        o.pass = n > 0 && b.provenance.pool_hash == io::pool_hash(b.rank_inputs());
    } catch (const std::exception& e) {
        fs::remove_all(dir);
        return {false, std::string("bundle invalid: ") + e.what()};
    }
    const Command rk = run(cli() + " rank --in " + bundle + " --out " + (dir / "rank.csv").string());
    o.pass = o.pass && rk.status == 0 && fs::exists(dir / "rank.csv");
    o.detail = std::to_string(n) + " candidates, rank exit " + std::to_string(rk.status);
    fs::remove_all(dir);
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> check;
        double limit_s;
    };
    const Criterion criteria[] = {
        {1, "validate reproduces the six contained regions", fig4_reproduction, 5.0},
        {2, "reparameterization fuzz", reparam_fuzz, 60.0},
        {3, "IK/FK round trip", ik_fk_round_trip, 0.0},
        {4, "Jacobian vs finite differences", jacobian_vs_fd, 0.0},
        {5, "manipulability ratio", manipulability, 0.0},
        {6, "NSGA-II sanity", nsga2_sanity, 0.0},
        {7, "ranking algebra", ranking_algebra, 0.0},
        {8, "weight map", weight_map, 0.0},
        {9, "end-to-end smoke", end_to_end, 10.0},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.limit_s > 0.0 && s >= c.limit_s) {
            o.pass = false;
            o.detail += "; over the " + fmt("%.0f", c.limit_s) + " s limit";
        }
        std::printf("%s criterion %d: %s (%.2f s) - %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, s, o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
