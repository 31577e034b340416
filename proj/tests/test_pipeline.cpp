#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace ankle;

namespace {

struct Shipped {
    io::ProblemConfig cfg = io::load_config(fx::data_path("config.json"));
    std::vector<ActuatorSpec> catalog = io::load_catalog(fx::data_path("catalog.json"));
    std::vector<TaskTrajectory> tasks = io::load_tasks(fx::data_path("tasks"));
};

moo::Nsga2Config tiny(std::uint64_t seed = 1) {
    moo::Nsga2Config n;
    n.pop_size = 8;
    n.generations = 5;
    n.seed = seed;
    return n;
}

const Shipped& shipped() {
    static const Shipped s;
    return s;
}

const io::ResultBundle& rsu_bundle() {
    static const io::ResultBundle b = run_optimize(shipped().cfg, Architecture::rsu,
                                                   io::find_actuator(shipped().catalog, "RMD-X6-P20-60"),
                                                   shipped().tasks, tiny())
                                          .bundle;
    return b;
}

const io::ResultBundle& spu_bundle() {
    static const io::ResultBundle b =
        run_optimize(shipped().cfg, Architecture::spu, io::find_actuator(shipped().catalog, "AL32"), shipped().tasks,
                     tiny())
            .bundle;
    return b;
}

}  // namespace

TEST(RunOptimize, BundleIsCompleteAndConsistent) {
    const io::ResultBundle& b = rsu_bundle();
    ASSERT_FALSE(b.candidates.empty());
    EXPECT_EQ(b.provenance.pop_size, 8u);
    EXPECT_EQ(b.provenance.pool_hash, io::pool_hash(b.rank_inputs()));
    EXPECT_EQ(b.catalog.size(), 1u);
    EXPECT_EQ(b.config, shipped().cfg.snapshot);
    for (std::size_t k = 0; k < b.candidates.size(); ++k) {
        const auto& c = b.candidates[k];
        EXPECT_EQ(c.id, candidate_id(Architecture::rsu, "RMD-X6-P20-60", 1, k));
        EXPECT_TRUE(c.evaluation.feasible);
        ASSERT_TRUE(c.params.has_value());
        EXPECT_GE(c.mean[3], 1.0);
        if (k > 0) {
            EXPECT_LE(b.candidates[k - 1].evaluation.f1, c.evaluation.f1);
        }
    }
}

TEST(RunOptimize, StoredMetricsMatchRecomputation) {
    const auto& c = rsu_bundle().candidates.front();
    const ActuatorSpec& act = io::find_actuator(shipped().catalog, "RMD-X6-P20-60");
    const AnkleMetrics m = mechanism_metrics(*c.params, act, shipped().cfg);
    EXPECT_EQ(m.speed.mean, c.mean[0]);
    EXPECT_EQ(m.manipulability.variance, c.variance[3]);
    EXPECT_EQ(m.com_height, c.mean[6]);
}

TEST(RunOptimize, DeterministicApartFromTimestamp) {
    io::ResultBundle a = rsu_bundle();
    io::ResultBundle b = run_optimize(shipped().cfg, Architecture::rsu,
                                      io::find_actuator(shipped().catalog, "RMD-X6-P20-60"), shipped().tasks, tiny())
                             .bundle;
    a.provenance.created_utc = b.provenance.created_utc = "";
    EXPECT_EQ(io::bundle_to_string(a), io::bundle_to_string(b));
}

TEST(RunOptimize, ReportsNoFeasibleFound) {
    const auto out = run_optimize(shipped().cfg, Architecture::rsu, io::find_actuator(shipped().catalog, "JD10"),
                                  shipped().tasks, tiny());
    EXPECT_EQ(out.status, moo::Nsga2Status::no_feasible_found);
    EXPECT_TRUE(out.bundle.candidates.empty());
    EXPECT_FALSE(out.best_infeasible.empty());
}

TEST(RunOptimize, RequiresGroundOffset) {
    io::ProblemConfig cfg = shipped().cfg;
    cfg.ground_offset.reset();
    EXPECT_THROW((void)run_optimize(cfg, Architecture::spu, io::find_actuator(shipped().catalog, "AL32"),
                                    shipped().tasks, tiny()),
                 MissingSpec);
}

TEST(Baselines, LoadsMetricsAndDesignEntries) {
    const auto base = load_baselines(fx::data_path("baselines.json"), shipped().catalog, shipped().cfg);
    ASSERT_EQ(base.size(), 2u);
    EXPECT_TRUE(base[0].baseline);
    EXPECT_EQ(base[0].architecture, "serial");
    EXPECT_EQ(base[0].mean[1], 20.0);
    EXPECT_EQ(base[1].architecture, "rsu");
    EXPECT_TRUE(base[1].params.has_value());
    EXPECT_GE(base[1].mean[3], 1.0);
}

TEST(RankBundles, PoolsBundlesAndBaselines) {
    const auto base = load_baselines(fx::data_path("baselines.json"), shipped().catalog, shipped().cfg);
    const RankReport rep = rank_bundles({rsu_bundle(), spu_bundle()}, base, Weights::uniform());
    EXPECT_EQ(rep.ranked.size(), rsu_bundle().candidates.size() + spu_bundle().candidates.size() + 2);
    for (std::size_t k = 1; k < rep.ranked.size(); ++k) EXPECT_LE(rep.ranked[k - 1].cost, rep.ranked[k].cost);
    const auto dist = cost_distributions(rep.ranked);
    EXPECT_EQ(dist.size(), 2u);
    EXPECT_TRUE(dist.count("rsu/RMD-X6-P20-60"));
    const io::json j = rank_report_to_json(rep);
    EXPECT_EQ(j["ranking"].size(), rep.ranked.size());
    EXPECT_EQ(j["baselines"].size(), 2u);
    EXPECT_EQ(j["pool_hash"], rep.pool_hash);
    std::ostringstream csv;
    write_rank_csv(csv, rep);
    const std::string text = csv.str();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), static_cast<long>(rep.ranked.size() + 1));
}

TEST(RankBundles, RejectsDuplicatesAndIncompatibleBundles) {
    EXPECT_THROW((void)rank_bundles({rsu_bundle(), rsu_bundle()}, {}, Weights::uniform()), IncompatibleBundles);
    io::ResultBundle other = spu_bundle();
    other.config["ground_offset_mm"] = 70.0;
    EXPECT_THROW((void)rank_bundles({rsu_bundle(), other}, {}, Weights::uniform()), IncompatibleBundles);
    other = spu_bundle();
    other.config["core_region"]["roll_deg"] = {-10, 10};
    EXPECT_THROW((void)rank_bundles({rsu_bundle(), other}, {}, Weights::uniform()), IncompatibleBundles);
    EXPECT_THROW((void)rank_bundles({}, {}, Weights::uniform()), InputError);
}

TEST(ParseWeights, Forms) {
    EXPECT_EQ(parse_weights("uniform").eta, Weights::uniform().eta);
    EXPECT_EQ(parse_weights("").eta, Weights::uniform().eta);
    EXPECT_EQ(parse_weights("torque").eta, Weights::one_hot(1).eta);
    const Weights w = parse_weights("speed=0.5, torque=0.5,variance=0.2");
    EXPECT_EQ(w.eta[0], 0.5);
    EXPECT_EQ(w.eta[1], 0.5);
    EXPECT_EQ(w.variance_weight, 0.2);
    const Weights v = parse_weights("0.1,0.1,0.1,0.1,0.2,0.2,0.2");
    EXPECT_EQ(v.eta[6], 0.2);
    EXPECT_THROW((void)parse_weights("speed=0.5"), BadWeights);
    EXPECT_THROW((void)parse_weights("speed=abc,torque=1"), BadWeights);
    EXPECT_THROW((void)parse_weights("warp=1"), BadWeights);
    EXPECT_THROW((void)parse_weights("fastest"), BadWeights);
    EXPECT_THROW((void)parse_weights("1,0,0"), BadWeights);
}

TEST(WeightMapFor, UsesMetricsGrid) {
    const WeightMap map = weight_map_for(shipped().cfg);
    EXPECT_EQ(map.poses.size(), 36u * 51u);
}
