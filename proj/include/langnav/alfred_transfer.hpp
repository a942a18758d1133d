#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "langnav/text_serialization.hpp"

namespace langnav {

enum class SimAction { move_ahead, rotate_left, rotate_right, look_up, look_down, interact };

struct SimStep {
    SimAction action = SimAction::move_ahead;
    std::string interact_kind;  // set when action == interact
    std::string tag;            // e.g. "GotoLocation"
    int heading_deg = 0;
    std::string caption;
    std::vector<std::string> objects;
    double displacement_m = 0;  // set by consolidate_moves
    // 12-slot panorama state, set by panoramize: slot = heading/30; true =
    // masked out of the rendered observation.
    std::vector<bool> masked_slots;
};

struct SimTrajectory {
    std::string goal;
    std::string instruction;
    std::vector<SimStep> steps;
};

// JSONL { "goal", "instruction", "steps": [ { "action", "tag", "heading_deg",
// "caption", "objects" } ] }
std::vector<SimTrajectory> load_sim_trajectories(const std::filesystem::path& path);

// Maximal contiguous GotoLocation runs, each as its own trajectory; Interact
// steps never survive.
std::vector<SimTrajectory> split_goto_segments(const SimTrajectory& traj);

// Runs of k MoveAhead (0.25 m each) -> ceil(k/4) macro steps: full groups are
// 1.0 m, a remainder of r steps is 0.25*r m; each macro step keeps the view of
// its last constituent.
SimTrajectory consolidate_moves(const SimTrajectory& segment);

// Per-step heading offset drawn uniformly from {-30, 0, +30} (seeded).
// Requires headings that are multiples of 90.
SimTrajectory jitter_headings(const SimTrajectory& segment, uint64_t seed);

// Seeded mask count in [mask_min, mask_max] over the 11 non-ground-truth
// panorama slots; the true next-direction slot is never masked.
SimTrajectory panoramize(const SimTrajectory& segment, uint64_t seed, int mask_min = 0,
                         int mask_max = 8);

// One record per segment, source "alfred": N macro steps render as N Move
// choices plus a final stop (N+1 action spans).
std::vector<TrajectoryRecord> to_demonstrations(const std::vector<SimTrajectory>& segments);

// split + consolidate + jitter + panoramize + render, seeded per segment.
std::vector<TrajectoryRecord> transfer_trajectories(const std::vector<SimTrajectory>& trajs,
                                                    uint64_t seed, int mask_min = 0,
                                                    int mask_max = 8);

}  // namespace langnav
