#include <doctest.h>

#include "langnav/episode_runner.hpp"
#include "langnav/errors.hpp"
#include "test_util.hpp"

using namespace langnav;

namespace {

SceneGraph house_graph() {
    return SceneGraph::load(testutil::fixture_path("house_scene.json"));
}

Episode house_episode() {
    return load_episodes(testutil::fixture_path("house_episodes.jsonl")).front();
}

}  // namespace

TEST_CASE("compute_metrics formulas") {
    const SceneGraph g = house_graph();
    const Episode ep = house_episode();

    SUBCASE("gold path, stopped") {
        const auto m = compute_metrics(g, ep, ep.gold_path, true);
        CHECK(m.sr == 1);
        CHECK(m.osr == 1);
        CHECK(m.ne == doctest::Approx(0.0));
        CHECK(m.spl == doctest::Approx(1.0));
        const auto geo = geodesic(g, ep.start(), ep.goal());
        CHECK(m.tl == doctest::Approx(geo->distance));
    }
    SUBCASE("detours shrink SPL by l / p") {
        // Two extra out-and-back traversals of the first edge before the gold
        // path: four surplus edges of length d(a, b).
        double detour = 4 * euclidean_distance(g.viewpoint("vp_a").position,
                                               g.viewpoint("vp_b").position);
        std::vector<std::string> walk = {"vp_a", "vp_b", "vp_a", "vp_b", "vp_a",
                                         "vp_b", "vp_c", "vp_d", "vp_e"};
        const auto m = compute_metrics(g, ep, walk, true);
        const auto geo = geodesic(g, ep.start(), ep.goal());
        CHECK(m.sr == 1);
        CHECK(m.spl == doctest::Approx(geo->distance / m.tl));
        CHECK(m.tl == doctest::Approx(geo->distance + detour));
        CHECK(m.spl == doctest::Approx(geo->distance / (geo->distance + detour)));
    }
    SUBCASE("passed within 3 m but did not stop") {
        std::vector<std::string> walk = {"vp_a", "vp_b", "vp_c", "vp_d", "vp_c"};
        const auto m = compute_metrics(g, ep, walk, false);
        CHECK(m.sr == 0);
        CHECK(m.osr == 1);  // vp_d is 2 m from vp_e
        CHECK(m.spl == 0.0);
    }
    SUBCASE("stop at start when start = goal") {
        Episode self = ep;
        self.gold_path = {"vp_a"};
        const auto m = compute_metrics(g, self, {"vp_a"}, true);
        CHECK(m.sr == 1);
        CHECK(m.tl == 0.0);
        CHECK(m.spl == doctest::Approx(1.0));
    }
    SUBCASE("stopping without Stop does not count for SR") {
        const auto m = compute_metrics(g, ep, ep.gold_path, false);
        CHECK(m.sr == 0);
        CHECK(m.osr == 1);
        CHECK(m.spl == 0.0);
    }
    SUBCASE("metrics are translation invariant") {
        auto doc = g.to_json();
        for (auto& vp : doc["viewpoints"]) {
            vp["position"][0] = vp["position"][0].get<double>() + 100.0;
            vp["position"][1] = vp["position"][1].get<double>() - 55.5;
            vp["position"][2] = vp["position"][2].get<double>() + 7.25;
        }
        const SceneGraph shifted = SceneGraph::from_json(doc);
        const auto m1 = compute_metrics(g, ep, ep.gold_path, true);
        const auto m2 = compute_metrics(shifted, ep, ep.gold_path, true);
        CHECK(m1.tl == doctest::Approx(m2.tl).epsilon(1e-12));
        CHECK(m1.ne == doctest::Approx(m2.ne).epsilon(1e-12));
        CHECK(m1.spl == doctest::Approx(m2.spl).epsilon(1e-12));
    }
}

TEST_CASE("oracle run matches the geodesic") {
    const SceneGraph g = house_graph();
    const Episode ep = house_episode();
    OracleAgent oracle;
    const auto result = run_episode(g, ep, oracle);
    CHECK(result.termination == Termination::stopped);
    CHECK(result.executed_path == geodesic(g, ep.start(), ep.goal())->path);
    CHECK(result.metrics.sr == 1);
    CHECK(result.metrics.spl == doctest::Approx(1.0));
    CHECK(result.decisions.size() == result.executed_path.size());  // hops + stop
}

TEST_CASE("replay run reproduces the fixture path") {
    const SceneGraph g = house_graph();
    const Episode ep = house_episode();
    const auto scripts = load_replay_scripts(testutil::fixture_path("house_replay.jsonl"));
    ReplayAgent agent(scripts.at(ep.id));
    const auto result = run_episode(g, ep, agent);
    CHECK(result.termination == Termination::stopped);
    CHECK(result.executed_path == ep.gold_path);
    CHECK(result.metrics.sr == 1);
}

TEST_CASE("caption overrides reach the agent") {
    const SceneGraph g = house_graph();
    const Episode ep = house_episode();
    CaptionOverrideMap overrides;
    overrides[{"vp_a", 2}] = "an edited caption about a sun room";

    struct Probe : Agent {
        std::string seen;
        AgentDecision decide(const DecisionContext&, const ObservationSnapshot& obs) override {
            for (const auto& c : obs.candidates) seen += c.caption + "|";
            return {Action::stop(), "stop", MatchKind::exact};
        }
    } probe;
    RunOptions options;
    options.overrides = &overrides;
    run_episode(g, ep, probe, options);
    CHECK(probe.seen.find("an edited caption about a sun room") != std::string::npos);
    CHECK(probe.seen.find("a living room filled with furniture and a fire place") ==
          std::string::npos);
}

TEST_CASE("no-match policies") {
    const SceneGraph g = house_graph();
    const Episode ep = house_episode();
    struct NoMatchAgent : Agent {
        AgentDecision decide(const DecisionContext&, const ObservationSnapshot&) override {
            throw NoMatchError("nothing matches");
        }
    } agent;
    RunOptions options;
    options.no_match_policy = NoMatchPolicy::abort;
    auto aborted = run_episode(g, ep, agent, options);
    CHECK(aborted.termination == Termination::no_match_abort);
    CHECK(aborted.metrics.sr == 0);

    options.no_match_policy = NoMatchPolicy::forced_stop;
    auto forced = run_episode(g, ep, agent, options);
    CHECK(forced.termination == Termination::stopped);
    CHECK(forced.decisions.back().matched_by == MatchKind::forced);
}

TEST_CASE("max_steps terminates without stopped status") {
    const SceneGraph g = SceneGraph::load(testutil::fixture_path("line_scene.json"));
    Episode ep;
    ep.id = "line-1";
    ep.scan_id = "line";
    ep.instructions = {"Keep walking."};
    ep.gold_path = {"vp_a", "vp_b", "vp_c"};
    struct ForwardAgent : Agent {
        AgentDecision decide(const DecisionContext&, const ObservationSnapshot& obs) override {
            return {Action::move(0), obs.candidates[0].caption, MatchKind::exact};
        }
    } agent;
    RunOptions options;
    options.max_steps = 2;
    const auto result = run_episode(g, ep, agent, options);
    CHECK(result.termination == Termination::max_steps);
    CHECK(result.executed_path.size() == 3);
    CHECK(result.metrics.sr == 0);
}

TEST_CASE("aggregate means and percentages") {
    EpisodeResult a, b;
    a.episode_id = "b-2";
    a.metrics = {10.0, 2.0, 1, 1, 1.0};
    b.episode_id = "a-1";
    b.metrics = {6.0, 8.0, 0, 1, 0.0};
    const auto report = aggregate({a, b});
    CHECK(report.per_episode[0].episode_id == "a-1");  // sorted by id
    CHECK(report.tl == doctest::Approx(8.0));
    CHECK(report.ne == doctest::Approx(5.0));
    CHECK(report.sr == doctest::Approx(50.0));
    CHECK(report.osr == doctest::Approx(100.0));
    CHECK(report.spl == doctest::Approx(50.0));
    CHECK_THROWS_AS(aggregate({}), DataError);

    const auto json = report_to_json(report);
    CHECK(json["aggregate"]["SR"] == 50.0);
    CHECK(json["per_episode"].size() == 2);
    const std::string csv = report_to_csv(report);
    CHECK(csv.rfind("episode_id,TL,NE,SR,OSR,SPL,termination\n", 0) == 0);
    CHECK(csv.find("a-1,") != std::string::npos);
}

TEST_CASE("run_all parallel equals sequential") {
    const SceneGraph g = house_graph();
    std::vector<Episode> eps;
    for (int i = 0; i < 8; ++i) {
        Episode ep = house_episode();
        ep.id = "ep-" + std::to_string(i);
        eps.push_back(ep);
    }
    AgentFactory factory = [](const Episode&, std::size_t) {
        return std::make_unique<OracleAgent>();
    };
    const auto seq = report_to_json(run_all(g, eps, factory, {}, 1));
    const auto par = report_to_json(run_all(g, eps, factory, {}, 4));
    CHECK(seq == par);
}

TEST_CASE("override file loading validates targets") {
    const SceneGraph g = house_graph();
    const std::string path = "/tmp/langnav_test_overrides.json";
    {
        std::ofstream out(path);
        out << R"({"vp_a/2": "an edited caption"})";
    }
    const auto map = load_overrides(path, g);
    CHECK(map.at({"vp_a", 2}) == "an edited caption");
    {
        std::ofstream out(path);
        out << R"({"vp_a/99": "nope"})";
    }
    CHECK_THROWS_AS(load_overrides(path, g), DataError);
}
