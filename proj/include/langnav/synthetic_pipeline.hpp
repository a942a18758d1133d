#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "langnav/lm_gateway.hpp"
#include "langnav/teacher_dataset.hpp"
#include "langnav/text_serialization.hpp"

namespace langnav {

struct SeedEntry {
    std::string id;            // episode id
    std::string instruction;
    std::string demo_text;     // serialized trajectory steps (no task description)
    std::vector<double> embedding;  // unit norm
};

struct SeedBank {
    std::vector<SeedEntry> entries;
};

// JSONL { "id", "instruction", "demo_text" }; embeddings come from the gateway.
SeedBank load_seed_bank(const std::filesystem::path& path, Gateway& gateway);

// Renders rho=0 teacher demonstrations of the episodes as the seed bank.
SeedBank build_seed_bank(const SceneGraph& graph, const std::vector<Episode>& episodes,
                         Gateway& gateway, bool include_objects = true);

struct SynthStep {
    std::vector<RecordBlock> blocks;
    std::string chosen;  // caption or "stop"
};

struct SynthTrajectory {
    std::string instruction;
    std::vector<SynthStep> steps;
    std::string model_id;
    std::string seed_demo_id;
    int attempt = 0;
};

std::string phase1_prompt(const std::vector<std::string>& example_instructions);
std::string phase2_prompt(const std::string& demo_instruction, const std::string& demo_text,
                          const std::string& synth_instruction);

// Repeated Phase I calls (k seeded examples each, temperature 1/top_p 1),
// list-item parsing and dedup against seeds and prior outputs; stops at
// target_count or throws DataError when the call budget (3 x ceil(target/10))
// runs out first.
std::vector<std::string> gen_instructions(Gateway& gateway, const SeedBank& bank,
                                          int target_count, uint64_t seed, int k_examples = 3,
                                          int n_per_call = 10);

// Argmax cosine similarity over the bank; tie -> lexicographically smallest id.
const SeedEntry& nearest_seed(const SeedBank& bank, const std::string& synth_instruction,
                              Gateway& gateway);

// "Step N:" / "To your ... is," / "Details:" / "You chose:" grammar, tolerant
// of blank lines and markdown emphasis; throws DataError with a line number.
std::vector<SynthStep> parse_trajectory(const std::string& text);

// Empty result = ok.
std::vector<std::string> validate_trajectory(const std::vector<SynthStep>& steps,
                                             int min_steps = 5, int max_steps = 7);

// Heuristic cross-step consistency warnings; never a rejection criterion.
std::vector<std::string> lint_trajectory(const std::vector<SynthStep>& steps);

SynthTrajectory gen_trajectory(Gateway& gateway, const std::string& synth_instruction,
                               const SeedEntry& seed_demo, int retries = 3);

TrajectoryRecord trajectory_to_record(const SynthTrajectory& trajectory,
                                      const std::string& episode_id);

struct SynthesisResult {
    std::vector<TrajectoryRecord> records;
    std::vector<SynthTrajectory> trajectories;       // parallel to records
    std::vector<nlohmann::ordered_json> rejects;     // { instruction, reasons }
};

SynthesisResult run_synthesis(Gateway& gateway, const SeedBank& bank, int target_count,
                              uint64_t seed, int jobs = 1);

// Record JSONL object with provenance fields attached.
nlohmann::ordered_json synth_record_json(const TrajectoryRecord& record,
                                         const SynthTrajectory& trajectory);

// Concatenate, then deterministic Fisher-Yates shuffle by seed.
std::vector<TrajectoryRecord> mix_datasets(std::vector<TrajectoryRecord> synthetic,
                                           std::vector<TrajectoryRecord> real, uint64_t seed);

}  // namespace langnav
