#include "langnav/agents.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "langnav/errors.hpp"

namespace langnav {
namespace {

std::set<std::string> token_set(const std::string& normalized) {
    std::set<std::string> out;
    std::istringstream in(normalized);
    std::string tok;
    while (in >> tok) out.insert(tok);
    return out;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0;
    std::size_t inter = 0;
    for (const auto& t : a) inter += b.count(t);
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

std::string chosen_text(const ObservationSnapshot& obs, const Action& action) {
    if (action.is_stop()) return "stop";
    return obs.candidates.at(static_cast<std::size_t>(action.index)).caption;
}

}  // namespace

MatchResult match_generated_action(const std::string& text, const ObservationSnapshot& obs) {
    const std::string norm = normalize_action_text(text);
    if (norm == "stop") return {Action::stop(), MatchKind::exact};
    for (std::size_t i = 0; i < obs.candidates.size(); ++i)
        if (normalize_action_text(obs.candidates[i].caption) == norm)
            return {Action::move(static_cast<int>(i)), MatchKind::exact};

    const auto query = token_set(norm);
    double best = -1;
    int best_index = -1;
    for (std::size_t i = 0; i < obs.candidates.size(); ++i) {
        const double score =
            jaccard(query, token_set(normalize_action_text(obs.candidates[i].caption)));
        if (score > best) {
            best = score;
            best_index = static_cast<int>(i);
        }
    }
    if (best_index < 0 || best < 0.2)
        throw NoMatchError("no candidate matches generated action \"" + text + "\"");
    return {Action::move(best_index), MatchKind::overlap};
}

AgentDecision OracleAgent::decide(const DecisionContext& ctx, const ObservationSnapshot& obs) {
    if (!ctx.graph) throw DataError("oracle agent: missing graph in context");
    const Action action = teacher_action(*ctx.graph, ctx.pose, ctx.goal);
    return {action, chosen_text(obs, action), MatchKind::exact};
}

AgentDecision RandomAgent::decide(const DecisionContext&, const ObservationSnapshot& obs) {
    const std::size_t n = obs.candidates.size();
    if (n == 0) return {Action::stop(), "stop", MatchKind::forced};
    const uint64_t draw = rng_.next_below(n + 1);
    const Action action =
        draw == n ? Action::stop() : Action::move(static_cast<int>(draw));
    return {action, chosen_text(obs, action), MatchKind::exact};
}

AgentDecision ReplayAgent::decide(const DecisionContext&, const ObservationSnapshot& obs) {
    if (cursor_ >= actions_.size())
        throw DataError("replay agent: script exhausted at step " + std::to_string(cursor_ + 1));
    const Action action = actions_[cursor_++];
    if (action.is_move() &&
        (action.index < 0 || action.index >= static_cast<int>(obs.candidates.size())))
        throw DataError("replay agent: move index " + std::to_string(action.index) +
                        " out of range at step " + std::to_string(cursor_));
    return {action, chosen_text(obs, action), MatchKind::exact};
}

std::map<std::string, std::vector<Action>> load_replay_scripts(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("replay: cannot open " + path.string());
    std::map<std::string, std::vector<Action>> scripts;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("replay: line " + std::to_string(line_no) + ": " + e.what());
        }
        std::vector<Action> actions;
        for (const auto& a : obj.at("actions")) {
            if (a.is_string() && a.get<std::string>() == "stop")
                actions.push_back(Action::stop());
            else if (a.is_object() && a.contains("move"))
                actions.push_back(Action::move(a.at("move").get<int>()));
            else
                throw DataError("replay: line " + std::to_string(line_no) +
                                ": action must be {\"move\": int} or \"stop\"");
        }
        const std::string id = obj.at("episode_id").get<std::string>();
        if (!scripts.emplace(id, std::move(actions)).second)
            throw DataError("replay: duplicate episode_id \"" + id + "\"");
    }
    return scripts;
}

AgentDecision LmAgent::decide(const DecisionContext& ctx, const ObservationSnapshot& obs) {
    const TokenCounter counter = ctx.counter ? ctx.counter : whitespace_token_count;
    static const HistoryLog empty_history;
    const HistoryLog& history = ctx.history ? *ctx.history : empty_history;
    CompletionRequest request;
    request.prompt = assemble_prompt(ctx.profile, ctx.instruction, history, obs,
                                     ctx.include_objects, counter, ctx.budget_tokens);
    request.max_tokens = options_.max_tokens;
    request.temperature = options_.temperature;
    request.top_p = options_.top_p;
    request.stop_sequences = options_.stop_sequences;
    const std::string raw = gateway_.complete(request);
    MatchResult match = match_generated_action(raw, obs);
    return {match.action, raw, match.matched_by};
}

}  // namespace langnav
