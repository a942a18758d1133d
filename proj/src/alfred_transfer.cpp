#include "langnav/alfred_transfer.hpp"

#include <cstdio>
#include <fstream>

#include "langnav/errors.hpp"
#include "langnav/rng.hpp"

namespace langnav {
namespace {

constexpr double kStepMeters = 0.25;
constexpr const char* kGotoTag = "GotoLocation";

SimAction parse_action(const std::string& name, std::string& interact_kind) {
    if (name == "MoveAhead") return SimAction::move_ahead;
    if (name == "RotateLeft") return SimAction::rotate_left;
    if (name == "RotateRight") return SimAction::rotate_right;
    if (name == "LookUp") return SimAction::look_up;
    if (name == "LookDown") return SimAction::look_down;
    interact_kind = name;
    return SimAction::interact;
}

}  // namespace

std::vector<SimTrajectory> load_sim_trajectories(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("alfred: cannot open " + path.string());
    std::vector<SimTrajectory> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto obj = nlohmann::json::parse(line);
            SimTrajectory traj;
            traj.goal = obj.at("goal").get<std::string>();
            traj.instruction = obj.at("instruction").get<std::string>();
            for (const auto& step_json : obj.at("steps")) {
                SimStep step;
                step.action =
                    parse_action(step_json.at("action").get<std::string>(), step.interact_kind);
                step.tag = step_json.at("tag").get<std::string>();
                step.heading_deg = step_json.at("heading_deg").get<int>();
                step.caption = step_json.at("caption").get<std::string>();
                for (const auto& o : step_json.at("objects"))
                    step.objects.push_back(o.get<std::string>());
                if (step.action == SimAction::move_ahead) step.displacement_m = kStepMeters;
                traj.steps.push_back(std::move(step));
            }
            out.push_back(std::move(traj));
        } catch (const nlohmann::json::exception& e) {
            throw DataError("alfred: line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<SimTrajectory> split_goto_segments(const SimTrajectory& traj) {
    std::vector<SimTrajectory> segments;
    SimTrajectory current;
    current.goal = traj.goal;
    current.instruction = traj.instruction;
    for (const auto& step : traj.steps) {
        if (step.tag == kGotoTag) {
            current.steps.push_back(step);
        } else if (!current.steps.empty()) {
            segments.push_back(std::move(current));
            current = SimTrajectory{traj.goal, traj.instruction, {}};
        }
    }
    if (!current.steps.empty()) segments.push_back(std::move(current));
    return segments;
}

SimTrajectory consolidate_moves(const SimTrajectory& segment) {
    SimTrajectory out;
    out.goal = segment.goal;
    out.instruction = segment.instruction;
    std::size_t i = 0;
    while (i < segment.steps.size()) {
        if (segment.steps[i].action != SimAction::move_ahead) {
            out.steps.push_back(segment.steps[i]);
            ++i;
            continue;
        }
        std::size_t run = 0;
        while (i + run < segment.steps.size() &&
               segment.steps[i + run].action == SimAction::move_ahead)
            ++run;
        for (std::size_t done = 0; done < run;) {
            const std::size_t group = std::min<std::size_t>(4, run - done);
            SimStep macro = segment.steps[i + done + group - 1];  // last constituent's view
            macro.displacement_m = kStepMeters * static_cast<double>(group);
            out.steps.push_back(std::move(macro));
            done += group;
        }
        i += run;
    }
    return out;
}

SimTrajectory jitter_headings(const SimTrajectory& segment, uint64_t seed) {
    Rng rng(derive_seed(seed, 0xa1f2));
    SimTrajectory out = segment;
    for (auto& step : out.steps) {
        if (step.heading_deg % 90 != 0)
            throw DataError("alfred: heading " + std::to_string(step.heading_deg) +
                            " is not a multiple of 90 before jitter");
        const int offset = (static_cast<int>(rng.next_below(3)) - 1) * 30;
        step.heading_deg = ((step.heading_deg + offset) % 360 + 360) % 360;
    }
    return out;
}

SimTrajectory panoramize(const SimTrajectory& segment, uint64_t seed, int mask_min,
                         int mask_max) {
    if (mask_min < 0 || mask_max > 11 || mask_min > mask_max)
        throw DataError("alfred: mask range must satisfy 0 <= min <= max <= 11");
    Rng rng(derive_seed(seed, 0xb3c4));
    SimTrajectory out = segment;
    for (auto& step : out.steps) {
        if (step.action != SimAction::move_ahead) continue;
        if (step.heading_deg % 30 != 0)
            throw DataError("alfred: heading " + std::to_string(step.heading_deg) +
                            " is not a multiple of 30");
        const int gt_slot = step.heading_deg / 30;
        step.masked_slots.assign(12, false);
        std::vector<int> others;
        for (int s = 0; s < 12; ++s)
            if (s != gt_slot) others.push_back(s);
        const int count =
            mask_min + static_cast<int>(rng.next_below(static_cast<uint64_t>(mask_max - mask_min) + 1));
        for (int m = 0; m < count; ++m) {
            const std::size_t pick = rng.next_below(others.size());
            step.masked_slots[static_cast<std::size_t>(others[pick])] = true;
            others.erase(others.begin() + static_cast<std::ptrdiff_t>(pick));
        }
    }
    return out;
}

std::vector<TrajectoryRecord> to_demonstrations(const std::vector<SimTrajectory>& segments) {
    std::vector<TrajectoryRecord> records;
    for (const auto& segment : segments) {
        std::vector<const SimStep*> moves;
        for (const auto& step : segment.steps) {
            if (step.action == SimAction::interact)
                throw DataError("alfred: Interact step reached rendering");
            if (step.action == SimAction::move_ahead) moves.push_back(&step);
        }
        if (moves.empty()) continue;
        std::vector<RecordStep> steps;
        int prev_heading = moves.front()->heading_deg;
        for (const SimStep* step : moves) {
            const int slot = step->heading_deg / 30;
            const bool masked = !step->masked_slots.empty() &&
                                step->masked_slots[static_cast<std::size_t>(slot)];
            RecordStep rs;
            if (!masked) {
                RecordBlock block;
                block.phrase = phrase_direction(
                    {normalize_heading_offset(step->heading_deg - prev_heading), 0});
                block.caption = step->caption;
                block.objects = step->objects;
                rs.blocks.push_back(std::move(block));
            }
            rs.chosen = step->caption;
            steps.push_back(std::move(rs));
            prev_heading = step->heading_deg;
        }
        RecordStep stop_step;
        stop_step.chosen = "stop";
        steps.push_back(std::move(stop_step));

        TrajectoryRecord record =
            render_record(default_task_description(), segment.instruction, steps);
        char id[32];
        std::snprintf(id, sizeof(id), "alfred-%05zu", records.size());
        record.episode_id = id;
        record.source = "alfred";
        records.push_back(std::move(record));
    }
    return records;
}

std::vector<TrajectoryRecord> transfer_trajectories(const std::vector<SimTrajectory>& trajs,
                                                    uint64_t seed, int mask_min, int mask_max) {
    std::vector<SimTrajectory> segments;
    for (std::size_t ti = 0; ti < trajs.size(); ++ti) {
        const auto split = split_goto_segments(trajs[ti]);
        for (std::size_t si = 0; si < split.size(); ++si) {
            SimTrajectory seg = consolidate_moves(split[si]);
            seg = jitter_headings(seg, derive_seed(seed, ti, si, 1));
            seg = panoramize(seg, derive_seed(seed, ti, si, 2), mask_min, mask_max);
            segments.push_back(std::move(seg));
        }
    }
    return to_demonstrations(segments);
}

}  // namespace langnav
