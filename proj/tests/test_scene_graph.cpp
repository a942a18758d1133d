#include <doctest.h>

#include "langnav/errors.hpp"
#include "langnav/scene_graph.hpp"
#include "test_util.hpp"

using namespace langnav;

TEST_CASE("heading offset normalization") {
    CHECK(normalize_heading_offset(0) == 0);
    CHECK(normalize_heading_offset(180) == 180);
    CHECK(normalize_heading_offset(-180) == 180);
    CHECK(normalize_heading_offset(190) == -170);
    CHECK(normalize_heading_offset(-190) == 170);
    CHECK(normalize_heading_offset(360) == 0);
    // Exhaustive 12x12 heading table against modular arithmetic.
    for (int pose = 0; pose < 360; pose += 30) {
        for (int view = 0; view < 360; view += 30) {
            const int off = relative_direction({"x", pose, 0}, view, 0).heading_offset_deg;
            CHECK(off > -180);
            CHECK(off <= 180);
            CHECK(((off - (view - pose)) % 360 + 360) % 360 == 0);
        }
    }
    CHECK(relative_direction({"x", 90, 0}, 120, 0).heading_offset_deg == 30);
    CHECK(relative_direction({"x", 0, 0}, 180, 0).heading_offset_deg == 180);
    CHECK(relative_direction({"x", 330, 0}, 0, 0).heading_offset_deg == 30);
}

TEST_CASE("scene load validation") {
    nlohmann::json doc = {
        {"scan_id", "s"},
        {"viewpoints",
         {{{"id", "a"},
           {"position", {0, 0, 0}},
           {"views",
            {{{"heading_deg", 30},
              {"elevation_deg", 0},
              {"caption", "a hallway"},
              {"objects", nlohmann::json::array()},
              {"leads_to", "b"}}}}},
          {{"id", "b"}, {"position", {1, 0, 0}}, {"views", nlohmann::json::array()}}}}};
    CHECK_NOTHROW(SceneGraph::from_json(doc));

    SUBCASE("bad heading") {
        doc["viewpoints"][0]["views"][0]["heading_deg"] = 45;
        CHECK_THROWS_AS(SceneGraph::from_json(doc), DataError);
    }
    SUBCASE("bad elevation") {
        doc["viewpoints"][0]["views"][0]["elevation_deg"] = 60;
        CHECK_THROWS_AS(SceneGraph::from_json(doc), DataError);
    }
    SUBCASE("dangling leads_to") {
        doc["viewpoints"][0]["views"][0]["leads_to"] = "zz";
        CHECK_THROWS_AS(SceneGraph::from_json(doc), DataError);
    }
    SUBCASE("empty caption") {
        doc["viewpoints"][0]["views"][0]["caption"] = "  \n ";
        CHECK_THROWS_AS(SceneGraph::from_json(doc), DataError);
    }
    SUBCASE("duplicate viewpoint id") {
        doc["viewpoints"].push_back(doc["viewpoints"][1]);
        CHECK_THROWS_AS(SceneGraph::from_json(doc), DataError);
    }
    SUBCASE("duplicate edge triple") {
        doc["viewpoints"][0]["views"].push_back(doc["viewpoints"][0]["views"][0]);
        CHECK_THROWS_AS(SceneGraph::from_json(doc), DataError);
    }
    SUBCASE("unknown key") {
        doc["viewpoints"][0]["extra"] = 1;
        CHECK_THROWS_AS(SceneGraph::from_json(doc), DataError);
    }
}

TEST_CASE("canonical writer round-trips") {
    const SceneGraph g = SceneGraph::load(testutil::fixture_path("house_scene.json"));
    const auto dumped = g.to_json();
    const SceneGraph g2 = SceneGraph::from_json(dumped);
    CHECK(g2.to_json() == dumped);
    CHECK(g2.size() == g.size());
}

TEST_CASE("geodesic on the line fixture") {
    const SceneGraph g = SceneGraph::load(testutil::fixture_path("line_scene.json"));
    const auto r = geodesic(g, "vp_a", "vp_c");
    REQUIRE(r.has_value());
    CHECK(r->distance == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(r->path == std::vector<std::string>{"vp_a", "vp_b", "vp_c"});

    const auto self = geodesic(g, "vp_b", "vp_b");
    REQUIRE(self.has_value());
    CHECK(self->distance == 0.0);
    CHECK(self->path == std::vector<std::string>{"vp_b"});

    CHECK_THROWS_AS(geodesic(g, "vp_a", "nope"), DataError);
}

TEST_CASE("geodesic ties pick the lexicographically smallest path") {
    // Diamond: s -> {m1, m2} -> t with equal costs.
    nlohmann::json doc;
    doc["scan_id"] = "tie";
    auto vp = [&](const std::string& id, double x, double y,
                  std::vector<std::pair<int, std::string>> edges) {
        nlohmann::json v;
        v["id"] = id;
        v["position"] = {x, y, 0};
        v["views"] = nlohmann::json::array();
        for (const auto& [h, to] : edges)
            v["views"].push_back({{"heading_deg", h},
                                  {"elevation_deg", 0},
                                  {"caption", "a room"},
                                  {"objects", nlohmann::json::array()},
                                  {"leads_to", to}});
        doc["viewpoints"].push_back(std::move(v));
    };
    vp("s", 0, 0, {{0, "m2"}, {30, "m1"}});
    vp("m1", 1, 1, {{0, "t"}});
    vp("m2", 1, -1, {{0, "t"}});
    vp("t", 2, 0, {});
    const SceneGraph g = SceneGraph::from_json(doc);
    const auto r = geodesic(g, "s", "t");
    REQUIRE(r.has_value());
    CHECK(r->path == std::vector<std::string>{"s", "m1", "t"});

    CHECK_FALSE(geodesic(g, "t", "s").has_value());  // edges are directed
}

TEST_CASE("navigable candidates are sorted by signed offset") {
    const SceneGraph g = SceneGraph::load(testutil::fixture_path("house_scene.json"));
    const auto cands = navigable_candidates(g, {"vp_a", 0, 0});
    REQUIRE(cands.size() == 4);
    CHECK(cands[0].rel.heading_offset_deg == -60);
    CHECK(cands[1].rel.heading_offset_deg == -30);
    CHECK(cands[2].rel.heading_offset_deg == 60);
    CHECK(cands[3].rel.heading_offset_deg == 180);
    CHECK(*cands[2].view->leads_to == "vp_b");

    // Elevation breaks heading ties; pose elevation shifts the offsets.
    const auto c4 = navigable_candidates(g, {"vp_d", 90, -30});
    REQUIRE(c4.size() == 3);
    CHECK(c4[0].rel.heading_offset_deg == -90);
    CHECK(c4[1].rel.heading_offset_deg == 0);
    CHECK(c4[1].rel.elevation_offset_deg == 30);
    CHECK(c4[2].rel.heading_offset_deg == 180);
    CHECK(c4[2].rel.elevation_offset_deg == 60);
}

TEST_CASE("random graphs load and stay connected") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng.next_below(12));
        const SceneGraph g = testutil::make_random_graph(rng, n);
        CHECK(static_cast<int>(g.size()) == n);
        for (const auto& vp : g.viewpoints()) {
            const auto r = geodesic(g, g.viewpoints().front().id, vp.id);
            CHECK(r.has_value());
        }
    }
}
