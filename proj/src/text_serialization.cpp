#include "langnav/text_serialization.hpp"

#include <cctype>
#include <cstdlib>
#include <sstream>

#include "langnav/errors.hpp"

namespace langnav {

int whitespace_token_count(std::string_view text) {
    int count = 0;
    bool in_token = false;
    for (char c : text) {
        const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r';
        if (!space && !in_token) ++count;
        in_token = !space;
    }
    return count;
}

std::string phrase_direction(const RelativeDirection& rel) {
    const int h = rel.heading_offset_deg;
    if (h % 30 != 0 || h <= -180 || h > 180)
        throw DataError("phrase_direction: heading offset " + std::to_string(h) +
                        " not a normalized multiple of 30");
    const int e = rel.elevation_offset_deg;
    if (e % 30 != 0 || std::abs(e) > 60)
        throw DataError("phrase_direction: elevation offset " + std::to_string(e) +
                        " out of range");

    std::string phrase;
    if (h == 0)
        phrase = "straight ahead";
    else if (h == 180)
        phrase = "back";
    else if (h > 0)
        phrase = std::to_string(h) + " degree right";
    else
        phrase = std::to_string(-h) + " degree left";

    if (e != 0)
        phrase += " and " + std::to_string(std::abs(e)) + " degree " + (e > 0 ? "up" : "down");
    return phrase;
}

ObservationSnapshot make_observation(const SceneGraph& graph, const AgentPose& pose,
                                     int step_index, const CaptionOverrideMap* overrides) {
    ObservationSnapshot obs;
    obs.step_index = step_index;
    for (const auto& cand : navigable_candidates(graph, pose)) {
        ObservationSnapshot::Candidate c;
        c.view_index = cand.view_index;
        c.caption = cand.view->caption;
        c.objects = cand.view->objects;
        c.rel = cand.rel;
        if (overrides) {
            auto it = overrides->find({pose.viewpoint_id, cand.view_index});
            if (it != overrides->end()) c.caption = it->second;
        }
        obs.candidates.push_back(std::move(c));
    }
    return obs;
}

std::vector<RecordBlock> observation_blocks(const ObservationSnapshot& obs,
                                            bool include_objects) {
    std::vector<RecordBlock> blocks;
    for (const auto& c : obs.candidates) {
        RecordBlock b;
        b.phrase = phrase_direction(c.rel);
        b.caption = c.caption;
        if (include_objects) b.objects = c.objects;
        blocks.push_back(std::move(b));
    }
    return blocks;
}

namespace {

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::string render_block(const RecordBlock& b) {
    std::string out = "To your " + b.phrase + " is,\n" + b.caption;
    if (!b.objects.empty()) out += "\nDetails:  " + join(b.objects, ", ");
    return out;
}

}  // namespace

std::string render_observation(const ObservationSnapshot& obs, bool include_objects) {
    std::vector<std::string> blocks;
    for (const auto& b : observation_blocks(obs, include_objects))
        blocks.push_back(render_block(b));
    return join(blocks, "\n\n");
}

std::string render_history_step(const HistoryEntry& entry) {
    std::string out = "Step " + std::to_string(entry.step_index) + ":";
    for (const auto& [phrase, caption] : entry.views)
        out += " To your " + phrase + " is " + caption + ";";
    out += " You chose: " + entry.chosen + ".";
    return out;
}

std::string render_history(const HistoryLog& log) {
    std::vector<std::string> lines;
    for (const auto& entry : log) lines.push_back(render_history_step(entry));
    return join(lines, "\n");
}

const std::string& default_task_description() {
    static const std::string d =
        "You are a navigation agent who must navigate according to instructions given only "
        "descriptions of your current position via natural language. The natural language "
        "description is sometimes incorrect.";
    return d;
}

namespace {

std::string build_prompt(const PromptProfile& profile, const std::string& instruction,
                         const HistoryLog& history, std::size_t drop_steps,
                         const std::string& observation_text, int step_index) {
    std::string out = profile.task_description;
    if (profile.mode == PromptMode::few_shot)
        out += "\n\nHere is an example trajectory:\n\n" + *profile.demonstration;
    out += "\n\n### Instruction:\n" + instruction + "\n";
    if (drop_steps < history.size()) {
        HistoryLog kept(history.begin() + static_cast<std::ptrdiff_t>(drop_steps), history.end());
        out += "\n" + render_history(kept) + "\n";
    }
    out += "\nStep " + std::to_string(step_index) + ":\n";
    if (!observation_text.empty()) out += "\n" + observation_text + "\n";
    out += "\nYou chose:";
    return out;
}

}  // namespace

std::string assemble_prompt(const PromptProfile& profile, const std::string& instruction,
                            const HistoryLog& history, const ObservationSnapshot& observation,
                            bool include_objects, const TokenCounter& counter,
                            int budget_tokens) {
    if (profile.mode == PromptMode::few_shot && !profile.demonstration)
        throw DataError("assemble_prompt: few_shot profile requires a demonstration");
    const std::string obs_text = render_observation(observation, include_objects);
    for (std::size_t drop = 0; drop <= history.size(); ++drop) {
        std::string prompt =
            build_prompt(profile, instruction, history, drop, obs_text, observation.step_index);
        if (counter(prompt) <= budget_tokens) return prompt;
    }
    throw DataError("assemble_prompt: budget " + std::to_string(budget_tokens) +
                    " too small even with empty history");
}

TrajectoryRecord render_record(const std::string& task_description,
                               const std::string& instruction,
                               const std::vector<RecordStep>& steps) {
    TrajectoryRecord record;
    std::string& text = record.text;
    text = task_description + "\n\n### Instruction:\n" + instruction + "\n\n### Trajectory:\n";
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const RecordStep& step = steps[i];
        text += "Step " + std::to_string(i + 1) + ":\n\n";
        for (const auto& block : step.blocks) text += render_block(block) + "\n\n";
        text += "You chose:\n";
        ActionSpan span;
        span.begin = text.size();
        text += step.chosen;
        span.end = text.size();
        span.is_random = step.is_random;
        record.action_spans.push_back(span);
        text += "\n";
        if (i + 1 < steps.size()) text += "\n";
    }
    return record;
}

nlohmann::ordered_json record_to_json(const TrajectoryRecord& record,
                                      bool include_random_spans) {
    nlohmann::ordered_json obj;
    obj["text"] = record.text;
    obj["action_spans"] = nlohmann::ordered_json::array();
    for (const auto& span : record.action_spans) {
        if (span.is_random && !include_random_spans) continue;
        obj["action_spans"].push_back({span.begin, span.end, span.is_random});
    }
    obj["episode_id"] = record.episode_id;
    obj["source"] = record.source;
    return obj;
}

TrajectoryRecord record_from_json(const nlohmann::json& obj) {
    TrajectoryRecord record;
    record.text = obj.at("text").get<std::string>();
    for (const auto& span : obj.at("action_spans")) {
        if (!span.is_array() || span.size() != 3)
            throw DataError("record: action span must be [start, end, is_random]");
        record.action_spans.push_back(
            {span[0].get<std::size_t>(), span[1].get<std::size_t>(), span[2].get<bool>()});
    }
    record.episode_id = obj.at("episode_id").get<std::string>();
    record.source = obj.at("source").get<std::string>();
    if (record.source != "real" && record.source != "synthetic" && record.source != "alfred")
        throw DataError("record: bad source \"" + record.source + "\"");
    return record;
}

std::string normalize_action_text(std::string_view text) {
    std::string s;
    bool in_space = true;
    for (char raw : text) {
        char c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
        const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r';
        if (space) {
            if (!in_space) s.push_back(' ');
            in_space = true;
        } else {
            s.push_back(c);
            in_space = false;
        }
    }
    auto is_quote = [](char c) { return c == '"' || c == '\''; };
    auto is_terminal = [](char c) {
        return c == '.' || c == '!' || c == '?' || c == ',' || c == ';' || c == ':';
    };
    bool changed = true;
    while (changed && !s.empty()) {
        changed = false;
        while (!s.empty() && s.back() == ' ') s.pop_back(), changed = true;
        while (!s.empty() && s.front() == ' ') s.erase(s.begin()), changed = true;
        while (!s.empty() && is_terminal(s.back())) s.pop_back(), changed = true;
        if (s.size() >= 2 && is_quote(s.front()) && s.back() == s.front()) {
            s = s.substr(1, s.size() - 2);
            changed = true;
        }
    }
    return s;
}

}  // namespace langnav
