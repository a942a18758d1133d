#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "langnav/scene_graph.hpp"

namespace langnav {

// text -> non-negative token count; must be monotone under concatenation.
using TokenCounter = std::function<int(std::string_view)>;

// Default counter: whitespace-delimited word count.
int whitespace_token_count(std::string_view text);

// "straight ahead", "back", "{n} degree left/right", optionally
// " and {30|60} degree up/down".
std::string phrase_direction(const RelativeDirection& rel);

// Textual O_t: the navigable candidates at step t, in candidate order.
struct ObservationSnapshot {
    struct Candidate {
        int view_index = 0;
        std::string caption;
        std::vector<std::string> objects;
        RelativeDirection rel;
    };
    int step_index = 1;
    std::vector<Candidate> candidates;
};

// (viewpoint_id, view_index) -> replacement caption, applied before rendering.
using CaptionOverrideMap = std::map<std::pair<std::string, int>, std::string>;

ObservationSnapshot make_observation(const SceneGraph& graph, const AgentPose& pose,
                                     int step_index,
                                     const CaptionOverrideMap* overrides = nullptr);

std::string render_observation(const ObservationSnapshot& obs, bool include_objects);

// Compact per-step summary lines used in assembled prompts (H_t).
struct HistoryEntry {
    int step_index = 1;
    std::vector<std::pair<std::string, std::string>> views;  // (direction phrase, caption)
    std::string chosen;                                      // caption or "stop"
};
using HistoryLog = std::vector<HistoryEntry>;

std::string render_history_step(const HistoryEntry& entry);
std::string render_history(const HistoryLog& log);

enum class PromptMode { finetune, zero_shot, few_shot };

struct PromptProfile {
    std::string task_description;
    PromptMode mode = PromptMode::finetune;
    std::optional<std::string> demonstration;  // required for few_shot
};

// The task description used throughout training and evaluation prompts.
const std::string& default_task_description();

// D + U (+ demonstration for few_shot) + H_t + O_t + "You chose:" cue.
// Oldest whole history steps are dropped first when over budget; the task
// description, instruction, and current observation are never dropped.
// Throws DataError when the budget cannot fit even an empty history.
std::string assemble_prompt(const PromptProfile& profile, const std::string& instruction,
                            const HistoryLog& history, const ObservationSnapshot& observation,
                            bool include_objects, const TokenCounter& counter, int budget_tokens);

// --- Trajectory records (the training serialization) ---

struct RecordBlock {
    std::string phrase;  // direction phrase, already rendered
    std::string caption;
    std::vector<std::string> objects;
};

struct RecordStep {
    std::vector<RecordBlock> blocks;
    std::string chosen;  // caption or "stop"
    bool is_random = false;
};

struct ActionSpan {
    std::size_t begin = 0;  // byte offsets into the record text
    std::size_t end = 0;
    bool is_random = false;
};

struct TrajectoryRecord {
    std::string text;
    std::vector<ActionSpan> action_spans;
    std::string episode_id;
    std::string source;  // "real" | "synthetic" | "alfred"
};

// Full-trajectory serialization; spans cover exactly each chosen-action text.
TrajectoryRecord render_record(const std::string& task_description,
                               const std::string& instruction,
                               const std::vector<RecordStep>& steps);

std::vector<RecordBlock> observation_blocks(const ObservationSnapshot& obs, bool include_objects);

// JSONL record object; random spans are omitted unless include_random_spans.
nlohmann::ordered_json record_to_json(const TrajectoryRecord& record,
                                      bool include_random_spans = false);
TrajectoryRecord record_from_json(const nlohmann::json& obj);

// Normalization used for action matching and instruction dedup: lowercase,
// trim, collapse whitespace, strip surrounding quotes and terminal punctuation.
std::string normalize_action_text(std::string_view text);

}  // namespace langnav
