#include "langnav/synthetic_pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "langnav/errors.hpp"
#include "langnav/rng.hpp"

namespace langnav {
namespace {

constexpr const char* kTrajectoryMarker = "### Trajectory:\n";

void embed_bank(SeedBank& bank, Gateway& gateway) {
    if (bank.entries.empty()) return;
    EmbeddingRequest req;
    for (const auto& e : bank.entries) req.texts.push_back(e.instruction);
    auto vectors = gateway.embed(req);
    for (std::size_t i = 0; i < bank.entries.size(); ++i)
        bank.entries[i].embedding = std::move(vectors[i]);
}

}  // namespace

SeedBank load_seed_bank(const std::filesystem::path& path, Gateway& gateway) {
    std::ifstream in(path);
    if (!in) throw DataError("seed bank: cannot open " + path.string());
    SeedBank bank;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto obj = nlohmann::json::parse(line);
            SeedEntry e;
            e.id = obj.at("id").get<std::string>();
            e.instruction = obj.at("instruction").get<std::string>();
            e.demo_text = obj.at("demo_text").get<std::string>();
            bank.entries.push_back(std::move(e));
        } catch (const nlohmann::json::exception& ex) {
            throw DataError("seed bank: line " + std::to_string(line_no) + ": " + ex.what());
        }
    }
    embed_bank(bank, gateway);
    return bank;
}

SeedBank build_seed_bank(const SceneGraph& graph, const std::vector<Episode>& episodes,
                         Gateway& gateway, bool include_objects) {
    SeedBank bank;
    for (const auto& ep : episodes) {
        const Demonstration demo = build_demonstration(graph, ep, 0.0, 0);
        const TrajectoryRecord record =
            demonstration_record(graph, ep, demo, include_objects);
        const std::size_t pos = record.text.find(kTrajectoryMarker);
        SeedEntry e;
        e.id = ep.id;
        e.instruction = ep.instructions.front();
        e.demo_text = pos == std::string::npos
                          ? record.text
                          : record.text.substr(pos + std::string(kTrajectoryMarker).size());
        bank.entries.push_back(std::move(e));
    }
    embed_bank(bank, gateway);
    return bank;
}

std::string phase1_prompt(const std::vector<std::string>& example_instructions) {
    std::string p =
        "I am going to give you example instructions written by humans to train a deep "
        "learning-based navigation agent acting inside a home. These example instructions are "
        "intended to be completed by the navigation agent in 5-7 steps.\n\n";
    for (const auto& u : example_instructions) p += "- " + u + "\n";
    p += "\nYour goal is to write 10 more instructions like the above that can be used to train "
         "a navigation agent. Since the navigation agent will be navigating in different home "
         "environments, your instructions should also be diverse and cover a wide range of home "
         "environments and rooms. You should make sure that the instruction can be completed by "
         "an agent in 5 to 7 steps.\n";
    return p;
}

std::string phase2_prompt(const std::string& demo_instruction, const std::string& demo_text,
                          const std::string& synth_instruction) {
    std::string p =
        "Here is an example of a large language model acting as a blind navigation agent in an "
        "indoor environment through text descriptions. The agent is given an instruction at the "
        "start and must follow the instruction. At each time step, the agent is given "
        "descriptions of its field of view via the following template:\n\n"
        "To your [VIEW] is [CAPTION]\n"
        "- [VIEW] consists of the agent's visible field of view (e.g., 30 degrees right, 120 "
        "degrees left, etc.)\n"
        "- [CAPTION] is the text description of that view obtained from an image captioning "
        "model\n\n";
    p += "# Example 1\n### Instruction:\n" + demo_instruction + "\n### Trajectory:\n" +
         demo_text;
    if (!p.empty() && p.back() != '\n') p += "\n";
    p += "\nNow I will give you another instruction. Please generate a trajectory of 5-7 steps "
         "that would complete the instruction.\n\n"
         "# Example 2\n### Instruction:\n" +
         synth_instruction + "\n";
    return p;
}

namespace {

std::string strip_emphasis(std::string s) {
    while (!s.empty() && (s.front() == '*' || s.front() == '_' || s.front() == '`'))
        s.erase(s.begin());
    while (!s.empty() && (s.back() == '*' || s.back() == '_' || s.back() == '`')) s.pop_back();
    return s;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> parse_list_items(const std::string& text) {
    std::vector<std::string> items;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::string s = strip_emphasis(trim(line));
        if (s.rfind("- ", 0) == 0) {
            items.push_back(trim(s.substr(2)));
            continue;
        }
        if (s.rfind("\xe2\x80\xa2 ", 0) == 0) {  // "• "
            items.push_back(trim(s.substr(4)));
            continue;
        }
        std::size_t i = 0;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
        if (i > 0 && i + 1 < s.size() && s[i] == '.' &&
            (s[i + 1] == ' ' || s[i + 1] == '\t')) {
            items.push_back(trim(s.substr(i + 2)));
        }
    }
    items.erase(std::remove_if(items.begin(), items.end(),
                               [](const std::string& s) { return s.empty(); }),
                items.end());
    return items;
}

}  // namespace

std::vector<std::string> gen_instructions(Gateway& gateway, const SeedBank& bank,
                                          int target_count, uint64_t seed, int k_examples,
                                          int n_per_call) {
    if (static_cast<int>(bank.entries.size()) < k_examples)
        throw DataError("gen_instructions: bank smaller than k_examples");
    if (target_count <= 0) return {};

    std::set<std::string> seen;
    for (const auto& e : bank.entries) seen.insert(normalize_action_text(e.instruction));

    Rng rng(derive_seed(seed, 0x9e51));
    std::vector<std::string> out;
    const int call_budget = 3 * ((target_count + n_per_call - 1) / n_per_call);
    for (int call = 0; call < call_budget && static_cast<int>(out.size()) < target_count;
         ++call) {
        // Sample k distinct seed instructions without replacement.
        std::vector<std::size_t> indices(bank.entries.size());
        for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
        std::vector<std::string> examples;
        for (int k = 0; k < k_examples; ++k) {
            const std::size_t pick = rng.next_below(indices.size());
            examples.push_back(bank.entries[indices[pick]].instruction);
            indices.erase(indices.begin() + static_cast<std::ptrdiff_t>(pick));
        }
        CompletionRequest req;
        req.prompt = phase1_prompt(examples);
        req.max_tokens = 1024;
        req.temperature = 1;
        req.top_p = 1;
        const std::string reply = gateway.complete(req);
        for (const auto& item : parse_list_items(reply)) {
            if (static_cast<int>(out.size()) >= target_count) break;
            const std::string norm = normalize_action_text(item);
            if (norm.empty() || !seen.insert(norm).second) continue;
            out.push_back(item);
        }
    }
    if (static_cast<int>(out.size()) < target_count)
        throw DataError("gen_instructions: call budget " + std::to_string(call_budget) +
                        " exhausted with " + std::to_string(out.size()) + "/" +
                        std::to_string(target_count) + " instructions");
    return out;
}

const SeedEntry& nearest_seed(const SeedBank& bank, const std::string& synth_instruction,
                              Gateway& gateway) {
    if (bank.entries.empty()) throw DataError("nearest_seed: empty bank");
    const auto query = gateway.embed({{synth_instruction}}).front();
    const SeedEntry* best = nullptr;
    double best_score = 0;
    for (const auto& e : bank.entries) {
        double dot = 0;
        const std::size_t dim = std::min(query.size(), e.embedding.size());
        for (std::size_t i = 0; i < dim; ++i) dot += query[i] * e.embedding[i];
        if (!best || dot > best_score || (dot == best_score && e.id < best->id)) {
            best = &e;
            best_score = dot;
        }
    }
    return *best;
}

std::vector<SynthStep> parse_trajectory(const std::string& text) {
    std::vector<std::string> lines;
    {
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) lines.push_back(strip_emphasis(trim(line)));
    }
    auto fail = [](std::size_t line_no, const std::string& why) -> void {
        throw DataError("trajectory parse: line " + std::to_string(line_no + 1) + ": " + why);
    };
    auto is_step_header = [](const std::string& s) {
        if (s.rfind("Step ", 0) != 0 || s.back() != ':') return false;
        for (std::size_t i = 5; i + 1 < s.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
        return s.size() > 6;
    };
    auto next_nonblank = [&](std::size_t& i) -> bool {
        while (i < lines.size() && lines[i].empty()) ++i;
        return i < lines.size();
    };

    std::vector<SynthStep> steps;
    std::size_t i = 0;
    if (!next_nonblank(i)) throw DataError("trajectory parse: line 1: empty trajectory");
    if (lines[i] == "### Trajectory:") ++i;
    if (!next_nonblank(i)) fail(i ? i - 1 : 0, "no steps found");
    if (!is_step_header(lines[i])) fail(i, "expected \"Step N:\", got \"" + lines[i] + "\"");

    while (i < lines.size()) {
        if (!next_nonblank(i)) break;
        if (!is_step_header(lines[i])) fail(i, "expected \"Step N:\", got \"" + lines[i] + "\"");
        ++i;
        SynthStep step;
        bool chose = false;
        while (!chose) {
            if (!next_nonblank(i)) fail(lines.size() - 1, "step ended without \"You chose:\"");
            const std::string& s = lines[i];
            if (s.rfind("To your ", 0) == 0) {
                const std::size_t tail = s.rfind(" is,");
                RecordBlock block;
                if (tail != std::string::npos && tail + 4 == s.size()) {
                    block.phrase = s.substr(8, tail - 8);
                    ++i;
                    if (!next_nonblank(i)) fail(lines.size() - 1, "missing caption line");
                    block.caption = lines[i];
                    ++i;
                } else {
                    // Inline form: "To your X is, caption" or "To your X is caption".
                    std::size_t sep = s.find(" is, ");
                    std::size_t after = sep + 5;
                    if (sep == std::string::npos) {
                        sep = s.find(" is ");
                        after = sep + 4;
                    }
                    if (sep == std::string::npos) fail(i, "malformed view line \"" + s + "\"");
                    block.phrase = s.substr(8, sep - 8);
                    block.caption = trim(s.substr(after));
                    ++i;
                }
                if (i < lines.size() && lines[i].rfind("Details:", 0) == 0) {
                    std::istringstream objs(trim(lines[i].substr(8)));
                    std::string obj;
                    while (std::getline(objs, obj, ',')) {
                        obj = trim(obj);
                        if (!obj.empty()) block.objects.push_back(obj);
                    }
                    ++i;
                }
                step.blocks.push_back(std::move(block));
            } else if (s.rfind("You chose:", 0) == 0) {
                std::string choice = trim(s.substr(10));
                ++i;
                if (choice.empty()) {
                    if (!next_nonblank(i)) fail(lines.size() - 1, "missing chosen action");
                    choice = lines[i];
                    ++i;
                }
                step.chosen = choice;
                chose = true;
            } else {
                fail(i, "unexpected line \"" + s + "\"");
            }
        }
        steps.push_back(std::move(step));
    }
    return steps;
}

std::vector<std::string> validate_trajectory(const std::vector<SynthStep>& steps, int min_steps,
                                             int max_steps) {
    std::vector<std::string> violations;
    const int n = static_cast<int>(steps.size());
    if (n < min_steps || n > max_steps)
        violations.push_back("step count out of range: " + std::to_string(n) + " not in [" +
                             std::to_string(min_steps) + "," + std::to_string(max_steps) + "]");
    for (int t = 0; t < n; ++t) {
        const SynthStep& step = steps[static_cast<std::size_t>(t)];
        if (step.blocks.empty())
            violations.push_back("step " + std::to_string(t + 1) + ": no candidates");
        for (const auto& b : step.blocks)
            if (normalize_action_text(b.caption).empty())
                violations.push_back("step " + std::to_string(t + 1) + ": empty caption");
        const std::string chosen = normalize_action_text(step.chosen);
        if (t + 1 == n) {
            if (chosen != "stop")
                violations.push_back("final chosen is not stop: \"" + step.chosen + "\"");
        } else {
            bool found = false;
            for (const auto& b : step.blocks)
                if (normalize_action_text(b.caption) == chosen) found = true;
            if (!found)
                violations.push_back("step " + std::to_string(t + 1) +
                                     ": chosen not among candidates: \"" + step.chosen + "\"");
        }
    }
    return violations;
}

std::vector<std::string> lint_trajectory(const std::vector<SynthStep>& steps) {
    // Shared-noun tracking: the chosen caption of step t should share some
    // content word with step t+1's captions; purely advisory.
    std::vector<std::string> warnings;
    auto content_words = [](const std::string& text) {
        std::set<std::string> words;
        std::istringstream in(normalize_action_text(text));
        std::string w;
        while (in >> w)
            if (w.size() > 3) words.insert(w);
        return words;
    };
    for (std::size_t t = 0; t + 1 < steps.size(); ++t) {
        if (normalize_action_text(steps[t].chosen) == "stop") continue;
        const auto chosen_words = content_words(steps[t].chosen);
        bool shared = false;
        for (const auto& b : steps[t + 1].blocks) {
            for (const auto& w : content_words(b.caption))
                if (chosen_words.count(w)) shared = true;
        }
        if (!shared)
            warnings.push_back("step " + std::to_string(t + 1) +
                               ": chosen view shares no objects with the next observation");
    }
    return warnings;
}

SynthTrajectory gen_trajectory(Gateway& gateway, const std::string& synth_instruction,
                               const SeedEntry& seed_demo, int retries) {
    std::vector<std::string> reasons;
    for (int attempt = 1; attempt <= retries; ++attempt) {
        CompletionRequest req;
        req.prompt = phase2_prompt(seed_demo.instruction, seed_demo.demo_text, synth_instruction);
        req.max_tokens = 2048;
        req.temperature = 1;
        req.top_p = 1;
        const std::string reply = gateway.complete(req);
        try {
            SynthTrajectory t;
            t.instruction = synth_instruction;
            t.steps = parse_trajectory(reply);
            const auto violations = validate_trajectory(t.steps);
            if (!violations.empty()) {
                for (const auto& v : violations)
                    reasons.push_back("attempt " + std::to_string(attempt) + ": " + v);
                continue;
            }
            t.model_id = "mock";
            t.seed_demo_id = seed_demo.id;
            t.attempt = attempt;
            return t;
        } catch (const DataError& e) {
            reasons.push_back("attempt " + std::to_string(attempt) + ": " + e.what());
        }
    }
    std::string msg = "gen_trajectory: all retries failed for \"" + synth_instruction + "\":";
    for (const auto& r : reasons) msg += "\n  " + r;
    throw DataError(msg);
}

TrajectoryRecord trajectory_to_record(const SynthTrajectory& trajectory,
                                      const std::string& episode_id) {
    std::vector<RecordStep> steps;
    for (const auto& s : trajectory.steps) {
        RecordStep rs;
        rs.blocks = s.blocks;
        rs.chosen = normalize_action_text(s.chosen) == "stop" ? "stop" : s.chosen;
        steps.push_back(std::move(rs));
    }
    TrajectoryRecord record =
        render_record(default_task_description(), trajectory.instruction, steps);
    record.episode_id = episode_id;
    record.source = "synthetic";
    return record;
}

SynthesisResult run_synthesis(Gateway& gateway, const SeedBank& bank, int target_count,
                              uint64_t seed, int jobs) {
    SynthesisResult result;
    const auto instructions = gen_instructions(gateway, bank, target_count, seed);

    struct Slot {
        bool ok = false;
        SynthTrajectory trajectory;
        std::string error;
    };
    std::vector<Slot> slots(instructions.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= instructions.size()) return;
            try {
                const SeedEntry& demo = nearest_seed(bank, instructions[i], gateway);
                slots[i].trajectory = gen_trajectory(gateway, instructions[i], demo);
                slots[i].ok = true;
            } catch (const DataError& e) {
                slots[i].error = e.what();
            }
        }
    };
    if (jobs < 1) jobs = 1;
    std::vector<std::thread> pool;
    for (int j = 0; j < std::min<int>(jobs, static_cast<int>(instructions.size())); ++j)
        pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (!slots[i].ok) {
            nlohmann::ordered_json reject;
            reject["instruction"] = instructions[i];
            reject["reasons"] = slots[i].error;
            result.rejects.push_back(std::move(reject));
            continue;
        }
        char id[32];
        std::snprintf(id, sizeof(id), "synth-%05zu", result.records.size());
        result.records.push_back(trajectory_to_record(slots[i].trajectory, id));
        result.trajectories.push_back(std::move(slots[i].trajectory));
    }
    return result;
}

nlohmann::ordered_json synth_record_json(const TrajectoryRecord& record,
                                         const SynthTrajectory& trajectory) {
    nlohmann::ordered_json obj = record_to_json(record);
    obj["provenance"] = {{"model_id", trajectory.model_id},
                         {"seed_demo_id", trajectory.seed_demo_id},
                         {"attempt", trajectory.attempt}};
    return obj;
}

std::vector<TrajectoryRecord> mix_datasets(std::vector<TrajectoryRecord> synthetic,
                                           std::vector<TrajectoryRecord> real, uint64_t seed) {
    for (const auto& r : synthetic)
        if (r.source != "synthetic" && r.source != "alfred")
            throw DataError("mix: record " + r.episode_id + " is not synthetic");
    for (auto& r : real)
        if (r.source.empty()) r.source = "real";
    std::vector<TrajectoryRecord> all = std::move(synthetic);
    for (auto& r : real) all.push_back(std::move(r));
    Rng rng(derive_seed(seed, 0x3a1f));
    for (std::size_t i = all.size(); i > 1; --i)
        std::swap(all[i - 1], all[rng.next_below(i)]);
    return all;
}

}  // namespace langnav
