#include <gtest/gtest.h>

#include <fstream>

#include "support.hpp"

using namespace ankle;

namespace {

std::string fixture(const std::string& name) { return std::string(ANKLE_FIXTURE_DIR) + "/" + name; }

io::json read_json(const std::string& path) {
    std::ifstream in(path);
    return io::json::parse(in);
}

std::vector<io::ResultBundle> golden_bundles() {
    return {io::load_bundle(fixture("golden_rsu.json")), io::load_bundle(fixture("golden_spu.json"))};
}

}  // namespace

TEST(Golden, BundlesLoadAndHashesMatch) {
    for (const auto& b : golden_bundles()) {
        EXPECT_EQ(b.candidates.size(), 8u);
        EXPECT_EQ(b.provenance.pool_hash, io::pool_hash(b.rank_inputs()));
    }
}

TEST(Golden, UniformRankingMatchesStoredReport) {
    const io::json expected = read_json(fixture("golden_rank_uniform.json"));
    const RankReport rep = rank_bundles(golden_bundles(), {}, Weights::uniform());
    EXPECT_EQ(rep.pool_hash, expected["pool_hash"]);
    ASSERT_EQ(rep.ranked.size(), expected["ranking"].size());
    for (std::size_t k = 0; k < rep.ranked.size(); ++k) {
        const auto& e = expected["ranking"][k];
        EXPECT_EQ(rep.ranked[k].id, e["id"]);
        EXPECT_NEAR(rep.ranked[k].cost, e["cost"].get<double>(), 1e-12);
        for (std::size_t j = 0; j < kMetricCount; ++j)
            EXPECT_NEAR(rep.ranked[k].normalized[j], e["normalized"][std::string(kMetricNames[j])].get<double>(),
                        1e-12);
    }
}

TEST(Golden, CostIsWeightedSumOfStoredNormalizedMetrics) {
    const io::json expected = read_json(fixture("golden_rank_uniform.json"));
    const auto bundles = golden_bundles();
    fx::Rng rng(20);
    for (int t = 0; t < 20; ++t) {
        Weights w;
        double sum = 0.0;
        for (double& e : w.eta) sum += (e = rng.uniform(0, 1));
        for (double& e : w.eta) e /= sum;
        const RankReport rep = rank_bundles(bundles, {}, w);
        std::vector<std::pair<double, std::string>> ref;
        for (const auto& e : expected["ranking"]) {
            double xi = 0.0;
            for (std::size_t j = 0; j < kMetricCount; ++j)
                xi += w.eta[j] * e["normalized"][std::string(kMetricNames[j])].get<double>();
            ref.emplace_back(xi, e["id"].get<std::string>());
        }
        std::sort(ref.begin(), ref.end());
        for (std::size_t k = 0; k < ref.size(); ++k) {
            EXPECT_EQ(rep.ranked[k].id, ref[k].second);
            EXPECT_NEAR(rep.ranked[k].cost, ref[k].first, 1e-12);
        }
    }
}

TEST(Golden, RegenerationReproducesFixture) {
    const io::ProblemConfig cfg = io::load_config(fx::data_path("config.json"));
    const auto catalog = io::load_catalog(fx::data_path("catalog.json"));
    moo::Nsga2Config n;
    n.pop_size = 8;
    n.generations = 5;
    n.seed = 1;
    const io::ResultBundle fresh = run_optimize(cfg, Architecture::rsu, io::find_actuator(catalog, "RMD-X6-P20-60"),
                                                io::load_tasks(fx::data_path("tasks")), n)
                                       .bundle;
    const io::ResultBundle golden = io::load_bundle(fixture("golden_rsu.json"));
    ASSERT_EQ(fresh.candidates.size(), golden.candidates.size());
    for (std::size_t k = 0; k < fresh.candidates.size(); ++k) {
        EXPECT_EQ(fresh.candidates[k].id, golden.candidates[k].id);
        for (std::size_t j = 0; j < kMetricCount; ++j)
            EXPECT_NEAR(fresh.candidates[k].mean[j], golden.candidates[k].mean[j],
                        1e-9 * std::max(1.0, std::abs(golden.candidates[k].mean[j])));
    }
}
