#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "langnav/action.hpp"
#include "langnav/text_serialization.hpp"

namespace langnav {

struct Episode {
    std::string id;
    std::string scan_id;
    std::vector<std::string> instructions;  // 1..3 variants
    std::vector<std::string> gold_path;     // viewpoint ids, >= 1; goal = back()
    int initial_heading_deg = 0;

    const std::string& start() const { return gold_path.front(); }
    const std::string& goal() const { return gold_path.back(); }
};

// JSONL: { "id", "scan_id", "instructions": [str], "path": [str], "heading_deg": int }
std::vector<Episode> load_episodes(const std::filesystem::path& path);
void validate_episode(const SceneGraph& graph, const Episode& episode);

// Stop at the goal; otherwise move through the candidate whose leads_to is the
// next node on the recomputed shortest path. The returned index addresses the
// sorted candidate list of make_observation at this pose.
Action teacher_action(const SceneGraph& graph, const AgentPose& pose, const std::string& goal);

struct DemoStep {
    ObservationSnapshot observation;
    Action chosen;
    bool is_random = false;
    Action teacher_choice;
};

struct Demonstration {
    std::string episode_id;
    std::vector<DemoStep> steps;
    std::vector<std::string> executed_path;  // start..goal
    double rho_used = 0;
    uint64_t seed_used = 0;
};

// Rollout mixing teacher actions with uniformly random Moves (probability rho,
// Stop excluded from the random choice); the teacher recovers via recomputed
// shortest paths. max_steps = 0 means 2 * gold hops + 5.
// Throws DataError when the budget runs out before the goal (rejected sample).
Demonstration build_demonstration(const SceneGraph& graph, const Episode& episode, double rho,
                                  uint64_t seed, int max_steps = 0);

// repeats seeded builds per episode; per-build seed is derived from
// (seed, episode index, repeat index, attempt); rejected samples retried
// up to 5 times before the error propagates.
std::vector<Demonstration> build_dataset(const SceneGraph& graph,
                                         const std::vector<Episode>& episodes, double rho,
                                         uint64_t seed, int repeats = 1);

// Serialize a demonstration in the training record format. The instruction is
// picked from the episode by instruction_index.
TrajectoryRecord demonstration_record(const SceneGraph& graph, const Episode& episode,
                                      const Demonstration& demo, bool include_objects = true,
                                      std::size_t instruction_index = 0);

}  // namespace langnav
