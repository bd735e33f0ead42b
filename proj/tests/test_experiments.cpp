#include "octolb/experiments.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

using namespace octolb;

namespace {

ExperimentConfig small_static() {
    ExperimentConfig cfg = validate_config(R"({
        "scenario": {
            "type": "static",
            "domain": {"min": [0, 0, 0], "max": [2, 2, 1]},
            "root_dims": [2, 2, 1],
            "initial_level": 1,
            "fill_fraction": 0.125,
            "particle_radius": 0.02
        },
        "balancers": ["sfc_hilbert", "sfc_morton", "diffusive", "greedy_global"],
        "p_sweep": [32],
        "window": 10
    })");
    return cfg;
}

} // namespace

TEST_CASE("static experiment produces one complete row per (p, balancer)") {
    const auto rows = run_static_experiment(small_static());
    REQUIRE(rows.size() == 4);
    for (const ExperimentRecord& r : rows) {
        CHECK(r.scenario == "static");
        CHECK(r.p == 32);
        CHECK(r.leaves > 0);
        CHECK(r.l_max_before > 0);
        CHECK(r.l_max_after > 0);
        CHECK(r.l_max_after <= r.l_max_before);
        CHECK(r.l_avg > 0.0);
        CHECK(r.eta >= 1.0);
        CHECK(r.t_lbp > 0.0);
        CHECK(r.msgs > 0);
        CHECK(r.mem_bytes_max_rank > 0);
        CHECK(r.balancer_work_max_rank > 0);
    }
}

TEST_CASE("single rank: nothing to balance, eta is one") {
    ExperimentConfig cfg = validate_config(R"({
        "scenario": {
            "type": "static",
            "domain": {"min": [0, 0, 0], "max": [1, 1, 1]},
            "root_dims": [1, 1, 1],
            "initial_level": 0,
            "particle_radius": 0.05
        },
        "p_sweep": [1],
        "window": 5
    })");
    const auto rows = run_static_experiment(cfg);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].eta == 1.0);
    CHECK(rows[0].blocks_moved == 0);
}

TEST_CASE("static experiment rejects a rank count without a 1:1 start") {
    ExperimentConfig cfg = small_static();
    cfg.p_sweep = {33};
    CHECK_THROWS_AS(run_static_experiment(cfg), ValidationError);
}

TEST_CASE("end-to-end determinism: identical configs give identical CSV bytes") {
    const std::string a = render_csv(run_static_experiment(small_static()));
    const std::string b = render_csv(run_static_experiment(small_static()));
    CHECK(a == b);
}

TEST_CASE("sweep experiment rows cover the p grid") {
    ExperimentConfig cfg = validate_config(R"({
        "scenario": {"type": "sweep", "leaves_per_rank": 8, "leaf_weight": 100},
        "balancers": ["sfc_hilbert", "diffusive"],
        "p_sweep": [8, 64]
    })");
    const auto rows = run_sweep_experiment(cfg);
    REQUIRE(rows.size() == 4);
    // uniform weights: nothing to refine and the balance stays perfect;
    // only diffusive is guaranteed to leave owners untouched
    for (const ExperimentRecord& r : rows) {
        CHECK(r.l_max_before == 800);
        CHECK(r.l_max_after == 800);
        if (r.balancer == "diffusive")
            CHECK(r.blocks_moved == 0);
    }
    // global view doubles with p at fixed leaves per rank
    const auto find = [&](const std::string& b, std::uint32_t p) {
        for (const auto& r : rows)
            if (r.balancer == b && r.p == p)
                return r;
        FAIL("row missing");
        return rows[0];
    };
    CHECK(find("sfc_hilbert", 64).mem_bytes_max_rank ==
          8 * find("sfc_hilbert", 8).mem_bytes_max_rank);
    CHECK(find("diffusive", 64).mem_bytes_max_rank <=
          2 * find("diffusive", 8).mem_bytes_max_rank);

    ExperimentConfig bad = cfg;
    bad.p_sweep = {10};
    CHECK_THROWS_AS(run_sweep_experiment(bad), ValidationError);
}

TEST_CASE("hopper experiment: control never mutates, balanced runs do better") {
    ExperimentConfig cfg = validate_config(R"({
        "scenario": {
            "type": "hopper",
            "tank": {"min": [-8, -8, -6], "max": [8, 8, 0]},
            "orifice_radius": 2.0,
            "dt": 0.02,
            "drain_time": 2.0,
            "root_dims": [2, 2, 2]
        },
        "balancers": ["sfc_hilbert"],
        "p_sweep": [8],
        "rebalance_interval": 50,
        "total_steps": 150
    })");
    const auto rows = run_hopper_experiment(cfg);
    REQUIRE(rows.size() == 6); // 3 intervals x (control + 1 balancer)

    std::size_t control_rows = 0;
    for (const ExperimentRecord& r : rows) {
        CHECK(r.scenario.rfind("hopper@", 0) == 0);
        if (r.balancer == "unbalanced") {
            ++control_rows;
            CHECK(r.blocks_moved == 0);
            CHECK(r.leaves == 8); // forest untouched
            CHECK(r.l_max_after == r.l_max_before);
            CHECK(r.t_lbp == 0.0);
        }
    }
    CHECK(control_rows == 3);

    // determinism of the full time series
    const auto again = run_hopper_experiment(cfg);
    CHECK(render_csv(rows) == render_csv(again));
}

TEST_CASE("eighth-filled 4x4x1 pipeline reproduces the reference partitioning shape") {
    // one refinement round splits the 20 loaded blocks, merges the 13 empty
    // bricks and re-refines the 3 of them that border the fine region:
    // 160 + 4 + 24 + 10 = 198 leaves
    Forest forest({4, 4, 1}, {{0, 0, 0}, {4, 4, 1}}, 1, 10);
    StaticScenarioConfig sc;
    sc.domain = forest.domain();
    sc.fill_fraction = 0.125;
    sc.particle_radius = 0.01;
    const ParticleSet particles = generate_hcp_fill(sc);
    WeightMap w = assign_weights(forest, WeightSource::ParticleCount, particles);
    RankAssignment a;
    a.p = 128;
    std::uint32_t r = 0;
    for (const BlockId& id : forest.leaves())
        a.owner[id] = r++;
    Cluster cluster(forest, a, w, 128);
    const RefinementThresholds t = RefinementThresholds::defaults_for(w.total_comp(), 128);
    const PipelineReport rep = run_pipeline(cluster, {BalancerKind::SfcHilbert, 10}, t,
                                            &particles, WeightSource::ParticleCount);
    CHECK(rep.refined == 20);
    CHECK(rep.coarsened == 13);
    CHECK(rep.ripple_refined == 3);
    CHECK(cluster.forest().size() == 198);
    std::size_t level0 = 0, level2 = 0;
    for (const BlockId& id : cluster.forest().leaves()) {
        level0 += id.level == 0;
        level2 += id.level == 2;
    }
    CHECK(level0 == 10);
    CHECK(level2 == 160);
}

TEST_CASE("snapshot directory receives parseable forests") {
    ExperimentConfig cfg = small_static();
    const auto dir = std::filesystem::temp_directory_path() / "octolb_snapshots";
    std::filesystem::remove_all(dir);
    cfg.snapshot_dir = dir.string();
    cfg.balancers = {{BalancerKind::SfcHilbert, 10}};
    run_static_experiment(cfg);
    std::ifstream in(dir / "static_sfc_hilbert_p32.forest");
    REQUIRE(in);
    const Forest parsed = Forest::parse_leaves({2, 2, 1}, {{0, 0, 0}, {2, 2, 1}},
                                               cfg.max_level, in);
    CHECK(parsed.size() > 32); // refined relative to the 1:1 start
    std::filesystem::remove_all(dir);
}

TEST_CASE("zero-interval hopper run yields no rows") {
    ExperimentConfig cfg = validate_config(R"({
        "scenario": {"type": "hopper", "tank": {"min": [-8, -8, -6], "max": [8, 8, 0]},
                     "orifice_radius": 2.0, "root_dims": [2, 2, 2]},
        "p_sweep": [8],
        "rebalance_interval": 100,
        "total_steps": 100
    })");
    cfg.total_steps = 0; // below one interval: only possible programmatically
    const auto rows = run_hopper_experiment(cfg);
    CHECK(rows.empty());
}
