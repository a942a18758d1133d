#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "langnav/agents.hpp"

namespace langnav {

struct MetricSet {
    double tl = 0;   // trajectory length, meters
    double ne = 0;   // navigation error, meters
    int sr = 0;      // success: stopped within 3 m
    int osr = 0;     // oracle success: came within 3 m
    double spl = 0;  // SR * l / max(p, l)
};

enum class Termination { stopped, max_steps, no_match_abort };
enum class NoMatchPolicy { abort, forced_stop };

struct EpisodeResult {
    std::string episode_id;
    std::vector<std::string> executed_path;
    std::vector<AgentDecision> decisions;
    Termination termination = Termination::stopped;
    MetricSet metrics;
};

struct RunOptions {
    int max_steps = 15;  // Move steps before forced cutoff
    NoMatchPolicy no_match_policy = NoMatchPolicy::abort;
    const CaptionOverrideMap* overrides = nullptr;
    PromptProfile profile;  // task_description defaulted when empty
    bool include_objects = true;
    TokenCounter counter;  // empty -> whitespace_token_count
    int budget_tokens = 2048;
    double success_radius_m = 3.0;
    std::size_t instruction_index = 0;
};

EpisodeResult run_episode(const SceneGraph& graph, const Episode& episode, Agent& agent,
                          const RunOptions& options = {});

MetricSet compute_metrics(const SceneGraph& graph, const Episode& episode,
                          const std::vector<std::string>& executed_path, bool stopped,
                          double success_radius_m = 3.0);

struct EvalReport {
    std::vector<EpisodeResult> per_episode;  // sorted by episode id
    double tl = 0, ne = 0;                   // means, meters
    double sr = 0, osr = 0, spl = 0;         // percentages
};

// Means of TL/NE; SR/OSR/SPL as mean x 100. Throws DataError on empty input.
EvalReport aggregate(std::vector<EpisodeResult> results);

// Runs every episode through its own agent instance in a worker pool.
using AgentFactory = std::function<std::unique_ptr<Agent>(const Episode&, std::size_t index)>;
EvalReport run_all(const SceneGraph& graph, const std::vector<Episode>& episodes,
                   const AgentFactory& factory, const RunOptions& options, int jobs = 1);

// { per_episode: [...], aggregate: {...} } plus an optional config echo.
nlohmann::ordered_json report_to_json(const EvalReport& report,
                                      const nlohmann::ordered_json* config_echo = nullptr);
std::string report_to_csv(const EvalReport& report);

// JSON object { "viewpoint_id/view_index": caption }.
CaptionOverrideMap load_overrides(const std::filesystem::path& path, const SceneGraph& graph);

}  // namespace langnav
