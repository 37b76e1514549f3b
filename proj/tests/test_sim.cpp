#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ehpc/policies.hpp"
#include "ehpc/sim.hpp"

using namespace ehpc;

namespace {

// hand-built action table implementing u = min(b, e) on a battery grid that
// contains e as a node, so interpolation reproduces the kink exactly
PolicySolution greedy_table(double e, double c, int nodes) {
    PolicySolution sol;
    sol.mode = LookaheadMode::None;
    sol.gamma_nodes = {1.0};
    for (int i = 0; i < nodes; ++i) {
        const double b = c * i / (nodes - 1);
        sol.battery_nodes.push_back(b);
        sol.actions.push_back(std::min(b, e));
        sol.bias.push_back(0.0);
    }
    return sol;
}

EvalPlan tiny_plan() {
    EvalPlan plan = EvalPlan::desk();
    plan.families = {ArrivalFamily::Bernoulli};
    plan.nmcr_values = {0.5};
    plan.nsnr_values_db = {0.0};
    plan.schemes = {SchemeId::Opt, SchemeId::Rca};
    plan.episodes = 4;
    plan.steps_per_episode = 300;
    plan.seed = 99;
    plan.grid_plain = GridSpec{40, 8, 40, 0, 0.999};
    plan.grid_lookahead = GridSpec{24, 6, 24, 6, 0.999};
    return plan;
}

} // namespace

TEST_CASE("scheme catalogue") {
    CHECK(all_scheme_ids().size() == 11);
    for (SchemeId s : all_scheme_ids()) {
        CHECK(scheme_id_from_name(scheme_id_name(s)) == s);
    }
    CHECK(scheme_id_name(SchemeId::ElkOca) == "ELK-OCA");
    CHECK_THROWS_AS(scheme_id_from_name("ECLK-OPT"), std::invalid_argument);

    CHECK_FALSE(scheme_is_learned(SchemeId::Opt));
    CHECK_FALSE(scheme_is_learned(SchemeId::ElkOpt));
    CHECK(scheme_is_learned(SchemeId::Rca));
    CHECK(scheme_is_learned(SchemeId::EclkOca));

    CHECK(scheme_baseline(SchemeId::Oca) == SchemeId::Opt);
    CHECK(scheme_baseline(SchemeId::Rca) == SchemeId::Opt);
    CHECK(scheme_baseline(SchemeId::ElkRca) == SchemeId::ElkOpt);
    CHECK(scheme_baseline(SchemeId::ClkOca) == SchemeId::ClkOpt);
    CHECK(scheme_baseline(SchemeId::EclkRca) == SchemeId::ClkOpt);
    CHECK(scheme_baseline(SchemeId::Opt) == SchemeId::Opt);

    CHECK(scheme_baseline_mode(SchemeId::Rca) == LookaheadMode::None);
    CHECK(scheme_baseline_mode(SchemeId::ElkOca) == LookaheadMode::Energy);
    CHECK(scheme_baseline_mode(SchemeId::ClkRca) == LookaheadMode::Channel);

    CHECK(scheme_policy_kind(SchemeId::Oca) == PolicyKind::Optimistic);
    CHECK(scheme_policy_kind(SchemeId::ClkRca) == PolicyKind::Robust);
    CHECK(scheme_agent_scheme(SchemeId::EclkOca) == Scheme::EnergyChannelLookahead);
    CHECK_THROWS_AS(scheme_policy_kind(SchemeId::Opt), std::logic_error);
}

TEST_CASE("plan presets and validation") {
    const auto paper = EvalPlan::paper();
    CHECK(paper.families.size() == 3);
    CHECK(paper.nmcr_values == std::vector<double>{0.1, 0.5, 0.9});
    CHECK(paper.nsnr_values_db.size() == 7);
    CHECK(paper.episodes == 1000);
    CHECK(paper.steps_per_episode == 10000);
    CHECK(paper.schemes.size() == 11);
    CHECK(paper.grid_plain.battery_levels == 250);
    CHECK(paper.grid_lookahead.lookahead_levels == 20);
    CHECK(paper.agent.alpha1 == 1e-3);
    CHECK(paper.agent.memory_capacity == 128);
    CHECK(paper.agent.minibatch == 64);
    CHECK(paper.agent.epsilon == 0.02);

    const auto desk = EvalPlan::desk();
    CHECK(desk.nsnr_values_db == std::vector<double>{0, 10, 20, 30});
    CHECK(desk.episodes == 50);
    CHECK(desk.steps_per_episode == 5000);
    CHECK(desk.grid_plain.battery_levels == 100);
    CHECK(desk.grid_lookahead.battery_levels == 60);

    EvalPlan bad = tiny_plan();
    bad.schemes.clear();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = tiny_plan();
    bad.episodes = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = tiny_plan();
    bad.nmcr_values = {1.5};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("episode means approach the quasi-static throughput") {
    const double e = 1.0, c = 4.0;
    ScenarioSpec sc{c, EnergyArrivalModel(OnePointArrival{e}),
                    ChannelModel(DeterministicChannel{1.0}), 0.0, 0.0};
    Environment env(sc);
    Rng rng(1);
    const auto table = greedy_table(e, c, 5);
    const double mean = run_episode(table, env, 100000, rng);
    CHECK(mean == doctest::Approx(rate(e)).epsilon(1e-3));
}

TEST_CASE("zero-action policy earns zero reward") {
    const auto sc = scenario_from(ArrivalFamily::Exponential, 0.5, 10.0);
    PolicySolution zero;
    zero.mode = LookaheadMode::None;
    zero.battery_nodes = {0.0, sc.capacity_c};
    zero.gamma_nodes = {1.0};
    zero.actions = {0.0, 0.0};
    zero.bias = {0.0, 0.0};
    Environment env(sc);
    Rng rng(2);
    CHECK(run_episode(zero, env, 2000, rng) == 0.0);
}

TEST_CASE("episodes replay bit-identically under a fixed seed") {
    const auto sc = scenario_from(ArrivalFamily::Uniform, 0.9, 0.0);
    const auto table = greedy_table(0.5 * sc.capacity_c, sc.capacity_c, 11);
    Environment e1(sc), e2(sc);
    Rng r1(7, 3), r2(7, 3);
    CHECK(run_episode(table, e1, 5000, r1) == run_episode(table, e2, 5000, r2));

    AgentConfig cfg;
    Agent a1(PolicyKind::Robust, Scheme::Online, sc.capacity_c, cfg);
    Agent a2(PolicyKind::Robust, Scheme::Online, sc.capacity_c, cfg);
    Environment e3(sc), e4(sc);
    Rng env1(7, 4), env2(7, 4), ag1(7, 5), ag2(7, 5);
    CHECK(run_episode(a1, e3, 2000, env1, ag1, true) ==
          run_episode(a2, e4, 2000, env2, ag2, true));
}

TEST_CASE("evaluate: OMF bookkeeping, determinism, loss aggregation") {
    const auto plan = tiny_plan();
    const auto report = evaluate(plan);
    REQUIRE(report.cells.size() == 2);

    const auto& opt = report.cells[0];
    CHECK(opt.scheme == SchemeId::Opt);
    CHECK(opt.omf == 1.0);
    CHECK(opt.loss_pct == 0.0);
    CHECK(opt.g_star == opt.throughput);
    CHECK(opt.throughput > 0.0);

    const auto& rca = report.cells[1];
    CHECK(rca.scheme == SchemeId::Rca);
    CHECK(rca.g_star == opt.throughput);
    CHECK(rca.omf == doctest::Approx(rca.throughput / opt.throughput));
    CHECK(rca.loss_pct == doctest::Approx(100.0 * (1.0 - rca.omf)));
    CHECK(rca.throughput >= 0.0);

    for (const auto& loss : report.losses) {
        CHECK(loss.average_pct <= loss.maximum_pct + 1e-12);
    }

    // identical plan, identical report
    const auto again = evaluate(plan);
    REQUIRE(again.cells.size() == report.cells.size());
    for (std::size_t i = 0; i < report.cells.size(); ++i) {
        CHECK(again.cells[i].throughput == report.cells[i].throughput);
        CHECK(again.cells[i].std_error == report.cells[i].std_error);
    }

    // learned schemes normalize against internally simulated baselines even
    // when those are not requested
    EvalPlan only_rca = plan;
    only_rca.schemes = {SchemeId::Rca};
    const auto solo = evaluate(only_rca);
    REQUIRE(solo.cells.size() == 1);
    CHECK(solo.cells[0].g_star == opt.throughput);
    CHECK(solo.cells[0].throughput == rca.throughput);
}

TEST_CASE("worker threads do not change the result") {
    EvalPlan plan = tiny_plan();
    plan.nsnr_values_db = {0.0, 10.0};
    const auto serial = evaluate(plan);
    plan.jobs = 2;
    const auto parallel = evaluate(plan);
    REQUIRE(serial.cells.size() == parallel.cells.size());
    for (std::size_t i = 0; i < serial.cells.size(); ++i) {
        CHECK(serial.cells[i].throughput == parallel.cells[i].throughput);
    }
}

TEST_CASE("standard error shrinks like one over root episodes") {
    EvalPlan plan = tiny_plan();
    plan.schemes = {SchemeId::Opt};
    plan.steps_per_episode = 200;
    plan.episodes = 10;
    const double se10 = evaluate(plan).cells[0].std_error;
    plan.episodes = 40;
    const double se40 = evaluate(plan).cells[0].std_error;
    CHECK(se10 / se40 == doctest::Approx(2.0).epsilon(0.30));
}

TEST_CASE("CSV and summary emission") {
    const auto plan = tiny_plan();
    const auto report = evaluate(plan);

    std::stringstream csv;
    write_csv(report, csv);
    std::string header;
    std::getline(csv, header);
    CHECK(header == "scheme,family,nmcr,nsnr_db,throughput,stderr,g_star,omf,loss_pct");
    std::string line;
    int rows = 0;
    while (std::getline(csv, line)) {
        if (!line.empty()) ++rows;
    }
    CHECK(rows == 2);

    // two evaluations serialize byte-identically
    std::stringstream csv2;
    write_csv(evaluate(plan), csv2);
    std::stringstream csv1;
    write_csv(report, csv1);
    CHECK(csv1.str() == csv2.str());

    std::stringstream losses;
    write_loss_summary(report, losses);
    std::getline(losses, header);
    CHECK(header == "scheme,average_loss_pct,maximum_loss_pct");

    const auto dir =
        (std::filesystem::temp_directory_path() / "ehpc_series_test").string();
    std::filesystem::remove_all(dir);
    const auto files = write_series_files(report, dir);
    REQUIRE(files.size() == 1); // one per (family, nmcr)
    std::ifstream in(files[0]);
    std::getline(in, header);
    CHECK(header == "nsnr_db,OPT,RCA");
    std::getline(in, line);
    CHECK(line.rfind("0,", 0) == 0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("battery stays admissible across schemes over long traces") {
    const auto sc = scenario_from(ArrivalFamily::Exponential, 0.9, 0.0);
    for (SchemeId id : {SchemeId::Oca, SchemeId::Rca, SchemeId::ElkRca,
                        SchemeId::ClkOca, SchemeId::EclkRca}) {
        Agent agent(scheme_policy_kind(id), scheme_agent_scheme(id), sc.capacity_c,
                    AgentConfig{});
        Environment env(sc);
        Rng env_rng(13), agent_rng(14);
        env.reset(env_rng);
        for (int t = 0; t < 20000; ++t) {
            agent.agent_step(env, env_rng, agent_rng);
            REQUIRE(env.state().battery >= 0.0);
            REQUIRE(env.state().battery <= sc.capacity_c);
        }
    }
}
