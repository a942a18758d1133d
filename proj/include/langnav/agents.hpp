#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "langnav/action.hpp"
#include "langnav/lm_gateway.hpp"
#include "langnav/rng.hpp"
#include "langnav/teacher_dataset.hpp"
#include "langnav/text_serialization.hpp"

namespace langnav {

enum class MatchKind { exact, overlap, forced };

struct AgentDecision {
    Action action;
    std::string raw_text;  // what the agent "said"
    MatchKind matched_by = MatchKind::exact;
};

// Per-step inputs shared by all agents; the runner keeps it current.
struct DecisionContext {
    const SceneGraph* graph = nullptr;
    AgentPose pose;
    std::string goal;
    std::string instruction;
    const HistoryLog* history = nullptr;
    PromptProfile profile;
    bool include_objects = true;
    TokenCounter counter;  // empty -> whitespace_token_count
    int budget_tokens = 2048;
};

class Agent {
public:
    virtual ~Agent() = default;
    virtual AgentDecision decide(const DecisionContext& ctx, const ObservationSnapshot& obs) = 0;
};

struct MatchResult {
    Action action;
    MatchKind matched_by = MatchKind::exact;
};

// Normalize; "stop" -> Stop; exact caption match -> that Move; else best
// token-set Jaccard overlap (tie -> lowest candidate index); < 0.2 -> NoMatchError.
MatchResult match_generated_action(const std::string& text, const ObservationSnapshot& obs);

// Shortest-path teacher.
class OracleAgent : public Agent {
public:
    AgentDecision decide(const DecisionContext& ctx, const ObservationSnapshot& obs) override;
};

// Uniform over candidates plus Stop (Stop probability 1/(n+1)).
class RandomAgent : public Agent {
public:
    explicit RandomAgent(uint64_t seed) : rng_(seed) {}
    AgentDecision decide(const DecisionContext& ctx, const ObservationSnapshot& obs) override;

private:
    Rng rng_;
};

// Plays back a scripted action list; throws DataError when exhausted.
class ReplayAgent : public Agent {
public:
    explicit ReplayAgent(std::vector<Action> actions) : actions_(std::move(actions)) {}
    AgentDecision decide(const DecisionContext& ctx, const ObservationSnapshot& obs) override;

private:
    std::vector<Action> actions_;
    std::size_t cursor_ = 0;
};

// JSONL: { "episode_id", "actions": [ {"move": int} | "stop" ] }
std::map<std::string, std::vector<Action>> load_replay_scripts(const std::filesystem::path& path);

struct LmAgentOptions {
    int max_tokens = 64;
    double temperature = 0;  // greedy action selection
    double top_p = 1;
    std::vector<std::string> stop_sequences = {"\n"};
};

// Assembles the prompt, completes it through the gateway, and matches the
// reply against the candidate captions.
class LmAgent : public Agent {
public:
    explicit LmAgent(Gateway& gateway, LmAgentOptions options = {})
        : gateway_(gateway), options_(std::move(options)) {}
    AgentDecision decide(const DecisionContext& ctx, const ObservationSnapshot& obs) override;

private:
    Gateway& gateway_;
    LmAgentOptions options_;
};

}  // namespace langnav
