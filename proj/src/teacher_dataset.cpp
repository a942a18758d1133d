#include "langnav/teacher_dataset.hpp"

#include <fstream>

#include "langnav/errors.hpp"
#include "langnav/rng.hpp"

namespace langnav {

std::vector<Episode> load_episodes(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("episodes: cannot open " + path.string());
    std::vector<Episode> episodes;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("episodes: line " + std::to_string(line_no) + ": " + e.what());
        }
        Episode ep;
        try {
            ep.id = obj.at("id").get<std::string>();
            ep.scan_id = obj.at("scan_id").get<std::string>();
            for (const auto& u : obj.at("instructions")) ep.instructions.push_back(u.get<std::string>());
            for (const auto& node : obj.at("path")) ep.gold_path.push_back(node.get<std::string>());
            ep.initial_heading_deg = obj.at("heading_deg").get<int>();
        } catch (const nlohmann::json::exception& e) {
            throw DataError("episodes: line " + std::to_string(line_no) + ": " + e.what());
        }
        if (ep.instructions.empty() || ep.instructions.size() > 3)
            throw DataError("episodes: " + ep.id + ": need 1..3 instructions");
        if (ep.gold_path.empty()) throw DataError("episodes: " + ep.id + ": empty path");
        episodes.push_back(std::move(ep));
    }
    return episodes;
}

void validate_episode(const SceneGraph& graph, const Episode& episode) {
    for (const auto& node : episode.gold_path)
        if (!graph.contains(node))
            throw DataError("episode " + episode.id + ": unknown viewpoint \"" + node + "\"");
    for (std::size_t i = 0; i + 1 < episode.gold_path.size(); ++i) {
        const Viewpoint& vp = graph.viewpoint(episode.gold_path[i]);
        const std::string& next = episode.gold_path[i + 1];
        bool connected = false;
        for (const auto& v : vp.views)
            if (v.leads_to == next) connected = true;
        if (!connected)
            throw DataError("episode " + episode.id + ": no edge " + vp.id + " -> " + next);
    }
    if (episode.initial_heading_deg % 30 != 0 || episode.initial_heading_deg < 0 ||
        episode.initial_heading_deg > 330)
        throw DataError("episode " + episode.id + ": bad initial heading");
}

Action teacher_action(const SceneGraph& graph, const AgentPose& pose, const std::string& goal) {
    if (pose.viewpoint_id == goal) return Action::stop();
    auto geo = geodesic(graph, pose.viewpoint_id, goal);
    if (!geo) throw DataError("teacher: goal \"" + goal + "\" unreachable from " + pose.viewpoint_id);
    const std::string& next = geo->path[1];
    const auto candidates = navigable_candidates(graph, pose);
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (*candidates[i].view->leads_to == next) return Action::move(static_cast<int>(i));
    throw DataError("teacher: no candidate leads to " + next + " from " + pose.viewpoint_id);
}

Demonstration build_demonstration(const SceneGraph& graph, const Episode& episode, double rho,
                                  uint64_t seed, int max_steps) {
    validate_episode(graph, episode);
    if (rho < 0 || rho > 1) throw DataError("build_demonstration: rho out of [0,1]");
    const int gold_hops = static_cast<int>(episode.gold_path.size()) - 1;
    if (max_steps == 0) max_steps = 2 * gold_hops + 5;

    Rng rng(seed);
    Demonstration demo;
    demo.episode_id = episode.id;
    demo.rho_used = rho;
    demo.seed_used = seed;

    AgentPose pose{episode.start(), episode.initial_heading_deg, 0};
    demo.executed_path.push_back(pose.viewpoint_id);
    while (true) {
        if (static_cast<int>(demo.steps.size()) >= max_steps)
            throw DataError("build_demonstration: episode " + episode.id + ": step budget " +
                            std::to_string(max_steps) + " exhausted before goal (rejected sample)");
        DemoStep step;
        step.observation = make_observation(graph, pose, static_cast<int>(demo.steps.size()) + 1);
        if (pose.viewpoint_id == episode.goal()) {
            step.chosen = Action::stop();
            step.teacher_choice = Action::stop();
            demo.steps.push_back(std::move(step));
            break;
        }
        step.teacher_choice = teacher_action(graph, pose, episode.goal());
        const auto& cands = step.observation.candidates;
        if (!cands.empty() && rho > 0 && rng.next_bernoulli(rho)) {
            step.is_random = true;
            step.chosen = Action::move(static_cast<int>(rng.next_below(cands.size())));
        } else {
            step.chosen = step.teacher_choice;
        }
        const auto& cand = cands.at(static_cast<std::size_t>(step.chosen.index));
        const ViewDescriptor& view =
            graph.viewpoint(pose.viewpoint_id).views.at(static_cast<std::size_t>(cand.view_index));
        pose = {*view.leads_to, view.heading_deg, view.elevation_deg};
        demo.executed_path.push_back(pose.viewpoint_id);
        demo.steps.push_back(std::move(step));
    }
    return demo;
}

std::vector<Demonstration> build_dataset(const SceneGraph& graph,
                                         const std::vector<Episode>& episodes, double rho,
                                         uint64_t seed, int repeats) {
    std::vector<Demonstration> out;
    for (std::size_t ei = 0; ei < episodes.size(); ++ei) {
        for (int ri = 0; ri < repeats; ++ri) {
            std::string last_error;
            bool done = false;
            for (int attempt = 0; attempt < 5 && !done; ++attempt) {
                const uint64_t sub = derive_seed(seed, ei, static_cast<uint64_t>(ri),
                                                 static_cast<uint64_t>(attempt));
                try {
                    out.push_back(build_demonstration(graph, episodes[ei], rho, sub));
                    done = true;
                } catch (const DataError& e) {
                    last_error = e.what();
                }
            }
            if (!done)
                throw DataError("build_dataset: episode " + episodes[ei].id +
                                " rejected after 5 attempts: " + last_error);
        }
    }
    return out;
}

TrajectoryRecord demonstration_record(const SceneGraph&, const Episode& episode,
                                      const Demonstration& demo, bool include_objects,
                                      std::size_t instruction_index) {
    if (instruction_index >= episode.instructions.size())
        throw DataError("demonstration_record: instruction index out of range");
    std::vector<RecordStep> steps;
    for (const auto& ds : demo.steps) {
        RecordStep rs;
        rs.blocks = observation_blocks(ds.observation, include_objects);
        rs.is_random = ds.is_random;
        if (ds.chosen.is_stop())
            rs.chosen = "stop";
        else
            rs.chosen = ds.observation.candidates.at(static_cast<std::size_t>(ds.chosen.index)).caption;
        steps.push_back(std::move(rs));
    }
    TrajectoryRecord record = render_record(default_task_description(),
                                            episode.instructions[instruction_index], steps);
    record.episode_id = demo.episode_id;
    record.source = "real";
    return record;
}

}  // namespace langnav
