#include <doctest.h>

#include <set>

#include "langnav/errors.hpp"
#include "langnav/teacher_dataset.hpp"
#include "langnav/text_serialization.hpp"
#include "test_util.hpp"

using namespace langnav;

TEST_CASE("phrase_direction covers the offset grid") {
    CHECK(phrase_direction({30, 0}) == "30 degree right");
    CHECK(phrase_direction({-30, 0}) == "30 degree left");
    CHECK(phrase_direction({0, 0}) == "straight ahead");
    CHECK(phrase_direction({180, 0}) == "back");
    CHECK(phrase_direction({0, -30}) == "straight ahead and 30 degree down");
    CHECK(phrase_direction({180, 60}) == "back and 60 degree up");
    CHECK(phrase_direction({90, 30}) == "90 degree right and 30 degree up");
    // The worked example: agent heading 90, candidate heading 120.
    CHECK(phrase_direction(relative_direction({"x", 90, 0}, 120, 0)) == "30 degree right");

    CHECK_THROWS_AS(phrase_direction({45, 0}), DataError);
    CHECK_THROWS_AS(phrase_direction({-180, 0}), DataError);
    CHECK_THROWS_AS(phrase_direction({0, 90}), DataError);

    // Injective over heading offsets, total over the grid.
    std::set<std::string> seen;
    for (int h = -150; h <= 180; h += 30)
        CHECK(seen.insert(phrase_direction({h, 0})).second);
    CHECK(seen.size() == 12);
    for (int h = -150; h <= 180; h += 30)
        for (int e = -60; e <= 60; e += 30) CHECK_NOTHROW(phrase_direction({h, e}));
}

TEST_CASE("render_observation blocks") {
    ObservationSnapshot obs;
    CHECK(render_observation(obs, true).empty());

    obs.candidates.push_back({0, "a kitchen with a stove", {"oven", "bowl"}, {0, 0}});
    CHECK(render_observation(obs, true) ==
          "To your straight ahead is,\na kitchen with a stove\nDetails:  oven, bowl");
    CHECK(render_observation(obs, false) == "To your straight ahead is,\na kitchen with a stove");

    obs.candidates.push_back({1, "a bedroom", {}, {180, 0}});
    CHECK(render_observation(obs, true) ==
          "To your straight ahead is,\na kitchen with a stove\nDetails:  oven, bowl\n\n"
          "To your back is,\na bedroom");
}

TEST_CASE("render_history") {
    CHECK(render_history({}).empty());
    HistoryEntry e1{1, {{"straight ahead", "a kitchen"}}, "a kitchen"};
    CHECK(render_history_step(e1) ==
          "Step 1: To your straight ahead is a kitchen; You chose: a kitchen.");
    HistoryEntry e2{2, {{"30 degree left", "a den"}, {"back", "a hall"}}, "stop"};
    CHECK(render_history_step(e2) ==
          "Step 2: To your 30 degree left is a den; To your back is a hall; You chose: stop.");
    CHECK(render_history({e1, e2}) == render_history_step(e1) + "\n" + render_history_step(e2));
}

TEST_CASE("assemble_prompt drops oldest history first") {
    PromptProfile profile{default_task_description(), PromptMode::finetune, std::nullopt};
    ObservationSnapshot obs;
    obs.step_index = 4;
    obs.candidates.push_back({0, "a kitchen", {}, {0, 0}});
    HistoryLog history;
    for (int t = 1; t <= 3; ++t)
        history.push_back({t, {{"straight ahead", "room number " + std::to_string(t)}},
                           "room number " + std::to_string(t)});

    const std::string full = assemble_prompt(profile, "Go to the kitchen.", history, obs, true,
                                             whitespace_token_count, 100000);
    CHECK(full.find(default_task_description()) == 0);
    CHECK(full.find("### Instruction:\nGo to the kitchen.") != std::string::npos);
    CHECK(full.find("room number 1") != std::string::npos);
    CHECK(full.rfind("You chose:") == full.size() - 10);
    CHECK(full.find("Step 4:") != std::string::npos);

    // Tighten the budget until exactly step 1 is dropped.
    const int full_count = whitespace_token_count(full);
    const std::string trimmed = assemble_prompt(profile, "Go to the kitchen.", history, obs, true,
                                                whitespace_token_count, full_count - 1);
    CHECK(trimmed.find("room number 1") == std::string::npos);
    CHECK(trimmed.find("room number 2") != std::string::npos);
    CHECK(trimmed.find("room number 3") != std::string::npos);
    CHECK(whitespace_token_count(trimmed) <= full_count - 1);

    CHECK_THROWS_AS(assemble_prompt(profile, "Go to the kitchen.", history, obs, true,
                                    whitespace_token_count, 5),
                    DataError);
}

TEST_CASE("assemble_prompt few_shot requires a demonstration") {
    PromptProfile profile{default_task_description(), PromptMode::few_shot, std::nullopt};
    ObservationSnapshot obs;
    CHECK_THROWS_AS(
        assemble_prompt(profile, "U", {}, obs, true, whitespace_token_count, 10000), DataError);
    profile.demonstration = "Step 1:\nYou chose:\nstop";
    const std::string p =
        assemble_prompt(profile, "U", {}, obs, true, whitespace_token_count, 10000);
    CHECK(p.find("Here is an example trajectory:") != std::string::npos);
    CHECK(p.find(*profile.demonstration) != std::string::npos);
}

TEST_CASE("record spans decode to the chosen text") {
    std::vector<RecordStep> steps;
    steps.push_back({{{"straight ahead", "a kitchen", {"oven"}}}, "a kitchen", false});
    steps.push_back({{{"30 degree right", "a bedroom", {}}}, "a bedroom", true});
    steps.push_back({{}, "stop", false});
    const TrajectoryRecord rec = render_record("Task.", "Go.", steps);

    REQUIRE(rec.action_spans.size() == 3);
    const std::vector<std::string> expect = {"a kitchen", "a bedroom", "stop"};
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& span = rec.action_spans[i];
        CHECK(rec.text.substr(span.begin, span.end - span.begin) == expect[i]);
    }
    CHECK(rec.action_spans[1].is_random);
    CHECK_FALSE(rec.action_spans[0].is_random);
    CHECK(rec.text.rfind("stop\n") == rec.text.size() - 5);

    SUBCASE("one-step stop record") {
        const TrajectoryRecord one = render_record("Task.", "Go.", {{{}, "stop", false}});
        REQUIRE(one.action_spans.size() == 1);
        CHECK(one.text.substr(one.action_spans[0].begin,
                              one.action_spans[0].end - one.action_spans[0].begin) == "stop");
    }
}

TEST_CASE("record json round trip and random-span masking") {
    std::vector<RecordStep> steps;
    steps.push_back({{{"straight ahead", "a kitchen", {}}}, "a kitchen", true});
    steps.push_back({{}, "stop", false});
    TrajectoryRecord rec = render_record("Task.", "Go.", steps);
    rec.episode_id = "ep1";
    rec.source = "real";

    const auto masked = record_to_json(rec);
    CHECK(masked["action_spans"].size() == 1);  // the random span is masked out
    const auto full = record_to_json(rec, true);
    CHECK(full["action_spans"].size() == 2);

    const TrajectoryRecord back = record_from_json(full);
    CHECK(back.text == rec.text);
    CHECK(back.action_spans.size() == 2);
    CHECK(back.action_spans[0].is_random);
    CHECK(back.episode_id == "ep1");

    auto bad = full;
    bad["source"] = "martian";
    CHECK_THROWS_AS(record_from_json(bad), DataError);
}

TEST_CASE("normalize_action_text") {
    CHECK(normalize_action_text("  Stop. ") == "stop");
    CHECK(normalize_action_text("\"A  Kitchen\"") == "a kitchen");
    CHECK(normalize_action_text("'a den.'") == "a den");
    CHECK(normalize_action_text("A   ROOM\nwith stairs!!") == "a room with stairs");
    CHECK(normalize_action_text("") == "");
}

TEST_CASE("fixture golden renders byte-for-byte") {
    const SceneGraph g = SceneGraph::load(testutil::fixture_path("house_scene.json"));
    const auto episodes = load_episodes(testutil::fixture_path("house_episodes.jsonl"));
    REQUIRE(episodes.size() == 1);
    const Demonstration demo = build_demonstration(g, episodes[0], 0.0, 0);
    const TrajectoryRecord rec = demonstration_record(g, episodes[0], demo);
    const std::string golden = testutil::read_file(testutil::fixture_path("golden_record.txt"));
    REQUIRE_FALSE(golden.empty());
    CHECK(rec.text == golden);
    CHECK(rec.text.find("To your 30 degree right is,") != std::string::npos);
    CHECK(rec.text.find("Details:  oven, bowl, dining table, microwave, refrigerator") !=
          std::string::npos);
    CHECK(rec.text.find("You chose:") != std::string::npos);
    CHECK(rec.text.find("straight ahead and 30 degree down") != std::string::npos);
    CHECK(rec.text.find("back and 60 degree up") != std::string::npos);
}
