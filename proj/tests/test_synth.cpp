#include <doctest.h>

#include "langnav/errors.hpp"
#include "langnav/synthetic_pipeline.hpp"
#include "test_util.hpp"

using namespace langnav;

namespace {

SeedBank tiny_bank(Gateway& gateway) {
    const SceneGraph g = SceneGraph::load(testutil::fixture_path("house_scene.json"));
    auto episodes = load_episodes(testutil::fixture_path("house_episodes.jsonl"));
    // Three instruction variants over the same fixture episode.
    episodes.push_back(episodes[0]);
    episodes.push_back(episodes[0]);
    episodes[1].id = "fixture-ep-2";
    episodes[1].instructions = {"Leave the kitchen and walk until you reach the bed."};
    episodes[2].id = "fixture-ep-3";
    episodes[2].instructions = {"Head past the stove, down the stairs, and wait in the bedroom."};
    return build_seed_bank(g, episodes, gateway);
}

}  // namespace

TEST_CASE("parse_trajectory on the golden fixture") {
    const std::string golden = testutil::read_file(testutil::fixture_path("golden_record.txt"));
    const std::size_t start = golden.find("### Trajectory:");
    REQUIRE(start != std::string::npos);
    const auto steps = parse_trajectory(golden.substr(start));
    REQUIRE(steps.size() == 5);
    CHECK(steps[0].blocks.size() == 4);
    CHECK(steps[0].blocks[0].phrase == "60 degree left");
    CHECK(steps[0].blocks[0].caption == "a kitchen with a stove, sink, and refrigerator");
    CHECK(steps[0].blocks[0].objects ==
          std::vector<std::string>{"oven", "bowl", "dining table", "microwave", "refrigerator"});
    CHECK(steps[0].chosen == "a living room filled with furniture and a fire place");
    CHECK(steps[4].chosen == "stop");
    CHECK(validate_trajectory(steps).empty());
}

TEST_CASE("parse_trajectory error paths") {
    CHECK_THROWS_AS(parse_trajectory(""), DataError);
    CHECK_THROWS_AS(parse_trajectory("no steps here"), DataError);
    try {
        parse_trajectory("Step 1:\nTo your left lies chaos\nYou chose:\nstop");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    // Tolerates markdown emphasis and inline choices.
    const auto steps = parse_trajectory(
        "**Step 1:**\n\nTo your straight ahead is,\n*a kitchen*\n\nYou chose: a kitchen\n");
    REQUIRE(steps.size() == 1);
    CHECK(steps[0].blocks[0].caption == "a kitchen");
    CHECK(steps[0].chosen == "a kitchen");
}

TEST_CASE("validate_trajectory rules") {
    auto make = [](int n, bool final_stop) {
        std::vector<SynthStep> steps;
        for (int t = 0; t < n; ++t) {
            SynthStep s;
            s.blocks.push_back({"straight ahead", "a room number " + std::to_string(t), {}});
            s.chosen = (t + 1 == n && final_stop) ? "stop" : "a room number " + std::to_string(t);
            steps.push_back(std::move(s));
        }
        return steps;
    };
    CHECK(validate_trajectory(make(6, true)).empty());
    CHECK_FALSE(validate_trajectory(make(4, true)).empty());   // too short
    CHECK_FALSE(validate_trajectory(make(8, true)).empty());   // too long
    CHECK_FALSE(validate_trajectory(make(6, false)).empty());  // final not stop

    auto bad = make(6, true);
    bad[2].chosen = "a caption that is not there";
    const auto violations = validate_trajectory(bad);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].find("chosen not among candidates") != std::string::npos);
}

TEST_CASE("gen_instructions parses lists and dedups") {
    ScriptedGateway gateway;
    SeedBank bank;
    bank.entries = {{"s1", "Walk to the kitchen.", "demo", hash_embedding("Walk to the kitchen.")},
                    {"s2", "Find the bed.", "demo", hash_embedding("Find the bed.")},
                    {"s3", "Exit the garage.", "demo", hash_embedding("Exit the garage.")}};
    std::string ten;
    for (int i = 0; i < 10; ++i) ten += "- instruction number " + std::to_string(i) + "\n";
    gateway.push_completion(ten);
    const auto out = gen_instructions(gateway, bank, 10, 0);
    CHECK(out.size() == 10);
    CHECK(out[0] == "instruction number 0");

    SUBCASE("seed duplicates and repeats are dropped") {
        ScriptedGateway gw2;
        gw2.push_completion("- Walk to the kitchen.\n- brand new one\n- brand new one\n"
                            "\xe2\x80\xa2 bullet style\n3. numbered style\nnoise line\n");
        const auto items = gen_instructions(gw2, bank, 3, 0);
        REQUIRE(items.size() == 3);
        CHECK(items[0] == "brand new one");
        CHECK(items[1] == "bullet style");
        CHECK(items[2] == "numbered style");
    }
    SUBCASE("call budget exhaustion") {
        ScriptedGateway gw3;
        for (int i = 0; i < 6; ++i) gw3.push_completion("no list items at all");
        CHECK_THROWS_AS(gen_instructions(gw3, bank, 20, 0), DataError);
    }
}

TEST_CASE("nearest_seed matches a brute-force scan") {
    TemplateGateway gateway(1);
    SeedBank bank;
    for (int i = 0; i < 25; ++i) {
        const std::string instr = "seed instruction " + std::to_string(i);
        bank.entries.push_back(
            {"s" + std::to_string(i), instr, "demo", hash_embedding(instr)});
    }
    const std::string query = "seed instruction 13";
    CHECK(nearest_seed(bank, query, gateway).id == "s13");  // cosine 1 with itself

    const std::string other = "walk around the blue sofa twice";
    const auto q = hash_embedding(other);
    double best = -2;
    std::string best_id;
    for (const auto& e : bank.entries) {
        double dot = 0;
        for (std::size_t i = 0; i < q.size(); ++i) dot += q[i] * e.embedding[i];
        if (dot > best || (dot == best && e.id < best_id)) {
            best = dot;
            best_id = e.id;
        }
    }
    CHECK(nearest_seed(bank, other, gateway).id == best_id);

    SeedBank one;
    one.entries = {bank.entries[7]};
    CHECK(nearest_seed(one, "anything", gateway).id == "s7");
    SeedBank empty;
    CHECK_THROWS_AS(nearest_seed(empty, "x", gateway), DataError);
}

TEST_CASE("gen_trajectory retries and reports reasons") {
    SeedEntry seed{"s1", "Walk to the kitchen.", "Step 1:\nYou chose:\nstop", {}};
    SUBCASE("bad then good") {
        ScriptedGateway gateway;
        gateway.push_completion("Step 1:\nTo your straight ahead is,\na room\nYou chose:\nstop\n");
        std::string good;
        for (int t = 1; t <= 5; ++t) {
            good += "Step " + std::to_string(t) + ":\nTo your straight ahead is,\na room " +
                    std::to_string(t) + "\nYou chose:\n" +
                    (t == 5 ? "stop" : "a room " + std::to_string(t)) + "\n";
        }
        gateway.push_completion(good);
        const auto t = gen_trajectory(gateway, "Go.", seed);
        CHECK(t.steps.size() == 5);
        CHECK(t.attempt == 2);
        CHECK(t.seed_demo_id == "s1");
    }
    SUBCASE("all attempts fail") {
        ScriptedGateway gateway;
        for (int i = 0; i < 3; ++i) gateway.push_completion("complete nonsense");
        try {
            gen_trajectory(gateway, "Go.", seed);
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("attempt 3") != std::string::npos);
        }
    }
}

TEST_CASE("full pipeline with the template mock is deterministic and idempotent") {
    TemplateGateway g1(9), g2(9);
    SeedBank b1 = tiny_bank(g1);
    const auto r1 = run_synthesis(g1, b1, 12, 3);
    SeedBank b2 = tiny_bank(g2);
    const auto r2 = run_synthesis(g2, b2, 12, 3);
    REQUIRE(r1.records.size() == 12);
    CHECK(r1.rejects.empty());
    for (std::size_t i = 0; i < r1.records.size(); ++i) {
        CHECK(r1.records[i].text == r2.records[i].text);
        CHECK(r1.records[i].source == "synthetic");
        // parse(render(x)) re-validates: idempotence of the record format.
        const std::size_t start = r1.records[i].text.find("### Trajectory:");
        const auto steps = parse_trajectory(r1.records[i].text.substr(start));
        CHECK(validate_trajectory(steps).empty());
    }
}

TEST_CASE("mix_datasets shuffles deterministically") {
    auto record = [](const std::string& id, const std::string& source) {
        TrajectoryRecord r = render_record("T.", "U.", {{{}, "stop", false}});
        r.episode_id = id;
        r.source = source;
        return r;
    };
    std::vector<TrajectoryRecord> synth, real;
    for (int i = 0; i < 30; ++i) synth.push_back(record("s" + std::to_string(i), "synthetic"));
    for (int i = 0; i < 5; ++i) real.push_back(record("r" + std::to_string(i), "real"));

    const auto m1 = mix_datasets(synth, real, 11);
    const auto m2 = mix_datasets(synth, real, 11);
    const auto m3 = mix_datasets(synth, real, 12);
    REQUIRE(m1.size() == 35);
    bool same = true, differs = false;
    for (std::size_t i = 0; i < m1.size(); ++i) {
        same = same && m1[i].episode_id == m2[i].episode_id;
        differs = differs || m1[i].episode_id != m3[i].episode_id;
    }
    CHECK(same);
    CHECK(differs);

    const auto real_only = mix_datasets({}, real, 1);
    CHECK(real_only.size() == 5);
}

TEST_CASE("lint warns without rejecting") {
    std::vector<SynthStep> steps;
    SynthStep s1;
    s1.blocks.push_back({"straight ahead", "a kitchen with an oven", {}});
    s1.chosen = "a kitchen with an oven";
    SynthStep s2;
    s2.blocks.push_back({"straight ahead", "a submarine control panel", {}});
    s2.chosen = "stop";
    steps = {s1, s2};
    CHECK_FALSE(lint_trajectory(steps).empty());
    CHECK(validate_trajectory(steps, 2, 3).empty());  // lint never rejects
}
