#include "langnav/episode_runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "langnav/errors.hpp"

namespace langnav {
namespace {

const char* termination_name(Termination t) {
    switch (t) {
        case Termination::stopped: return "stopped";
        case Termination::max_steps: return "max_steps";
        case Termination::no_match_abort: return "no_match_abort";
    }
    return "?";
}

const char* match_name(MatchKind m) {
    switch (m) {
        case MatchKind::exact: return "exact";
        case MatchKind::overlap: return "overlap";
        case MatchKind::forced: return "forced";
    }
    return "?";
}

double round1(double x) { return std::round(x * 10.0) / 10.0; }

}  // namespace

MetricSet compute_metrics(const SceneGraph& graph, const Episode& episode,
                          const std::vector<std::string>& executed_path, bool stopped,
                          double success_radius_m) {
    if (executed_path.empty())
        throw DataError("metrics: empty executed path for " + episode.id);
    if (executed_path.front() != episode.start())
        throw DataError("metrics: executed path does not start at gold start for " + episode.id);

    const Vec3 goal_pos = graph.viewpoint(episode.goal()).position;
    MetricSet m;
    double min_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < executed_path.size(); ++i) {
        const Vec3 pos = graph.viewpoint(executed_path[i]).position;
        if (i) m.tl += euclidean_distance(graph.viewpoint(executed_path[i - 1]).position, pos);
        min_dist = std::min(min_dist, euclidean_distance(pos, goal_pos));
    }
    m.ne = euclidean_distance(graph.viewpoint(executed_path.back()).position, goal_pos);
    m.sr = (stopped && m.ne <= success_radius_m) ? 1 : 0;
    m.osr = min_dist <= success_radius_m ? 1 : 0;

    const auto geo = geodesic(graph, episode.start(), episode.goal());
    if (!geo) throw DataError("metrics: goal unreachable for " + episode.id);
    const double l = geo->distance;
    const double p = m.tl;
    if (m.sr) {
        if (l == 0 && p == 0)
            m.spl = 1.0;
        else
            m.spl = l / std::max(p, l);
    }
    return m;
}

EpisodeResult run_episode(const SceneGraph& graph, const Episode& episode, Agent& agent,
                          const RunOptions& options) {
    validate_episode(graph, episode);
    if (options.max_steps < 1) throw DataError("run_episode: max_steps must be >= 1");
    if (options.instruction_index >= episode.instructions.size())
        throw DataError("run_episode: instruction index out of range for " + episode.id);

    EpisodeResult result;
    result.episode_id = episode.id;

    DecisionContext ctx;
    ctx.graph = &graph;
    ctx.goal = episode.goal();
    ctx.instruction = episode.instructions[options.instruction_index];
    ctx.profile = options.profile;
    if (ctx.profile.task_description.empty())
        ctx.profile.task_description = default_task_description();
    ctx.include_objects = options.include_objects;
    ctx.counter = options.counter ? options.counter : whitespace_token_count;
    ctx.budget_tokens = options.budget_tokens;

    HistoryLog history;
    ctx.history = &history;
    ctx.pose = {episode.start(), episode.initial_heading_deg, 0};
    result.executed_path.push_back(ctx.pose.viewpoint_id);

    int moves = 0;
    result.termination = Termination::max_steps;
    while (true) {
        const ObservationSnapshot obs =
            make_observation(graph, ctx.pose, moves + 1, options.overrides);
        AgentDecision decision;
        try {
            decision = agent.decide(ctx, obs);
        } catch (const NoMatchError&) {
            if (options.no_match_policy == NoMatchPolicy::abort) {
                result.termination = Termination::no_match_abort;
                break;
            }
            decision = {Action::stop(), "stop", MatchKind::forced};
        }
        result.decisions.push_back(decision);

        HistoryEntry entry;
        entry.step_index = moves + 1;
        for (const auto& c : obs.candidates)
            entry.views.emplace_back(phrase_direction(c.rel), c.caption);
        if (decision.action.is_stop())
            entry.chosen = "stop";
        else
            entry.chosen = obs.candidates.at(static_cast<std::size_t>(decision.action.index)).caption;
        history.push_back(std::move(entry));

        if (decision.action.is_stop()) {
            result.termination = Termination::stopped;
            break;
        }
        const auto& cand = obs.candidates.at(static_cast<std::size_t>(decision.action.index));
        const ViewDescriptor& view = graph.viewpoint(ctx.pose.viewpoint_id)
                                         .views.at(static_cast<std::size_t>(cand.view_index));
        ctx.pose = {*view.leads_to, view.heading_deg, view.elevation_deg};
        result.executed_path.push_back(ctx.pose.viewpoint_id);
        if (++moves >= options.max_steps) break;
    }
    result.metrics =
        compute_metrics(graph, episode, result.executed_path,
                        result.termination == Termination::stopped, options.success_radius_m);
    return result;
}

EvalReport aggregate(std::vector<EpisodeResult> results) {
    if (results.empty()) throw DataError("aggregate: no episode results");
    std::sort(results.begin(), results.end(),
              [](const EpisodeResult& a, const EpisodeResult& b) {
                  return a.episode_id < b.episode_id;
              });
    EvalReport report;
    for (const auto& r : results) {
        report.tl += r.metrics.tl;
        report.ne += r.metrics.ne;
        report.sr += r.metrics.sr;
        report.osr += r.metrics.osr;
        report.spl += r.metrics.spl;
    }
    const double n = static_cast<double>(results.size());
    report.tl /= n;
    report.ne /= n;
    report.sr = round1(report.sr / n * 100.0);
    report.osr = round1(report.osr / n * 100.0);
    report.spl = round1(report.spl / n * 100.0);
    report.per_episode = std::move(results);
    return report;
}

EvalReport run_all(const SceneGraph& graph, const std::vector<Episode>& episodes,
                   const AgentFactory& factory, const RunOptions& options, int jobs) {
    if (episodes.empty()) throw DataError("run_all: no episodes");
    if (jobs < 1) jobs = 1;
    std::vector<EpisodeResult> results(episodes.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= episodes.size()) return;
            try {
                auto agent = factory(episodes[i], i);
                results[i] = run_episode(graph, episodes[i], *agent, options);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int j = 0; j < std::min<int>(jobs, static_cast<int>(episodes.size())); ++j)
        pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return aggregate(std::move(results));
}

namespace {

nlohmann::ordered_json metrics_to_json(const MetricSet& m) {
    nlohmann::ordered_json obj;
    obj["TL"] = m.tl;
    obj["NE"] = m.ne;
    obj["SR"] = m.sr;
    obj["OSR"] = m.osr;
    obj["SPL"] = m.spl;
    return obj;
}

}  // namespace

nlohmann::ordered_json report_to_json(const EvalReport& report,
                                      const nlohmann::ordered_json* config_echo) {
    nlohmann::ordered_json doc;
    doc["per_episode"] = nlohmann::ordered_json::array();
    for (const auto& r : report.per_episode) {
        nlohmann::ordered_json obj;
        obj["episode_id"] = r.episode_id;
        obj["executed_path"] = r.executed_path;
        obj["termination"] = termination_name(r.termination);
        obj["decisions"] = nlohmann::ordered_json::array();
        for (const auto& d : r.decisions) {
            nlohmann::ordered_json dec;
            if (d.action.is_stop())
                dec["action"] = "stop";
            else
                dec["action"] = {{"move", d.action.index}};
            dec["raw_text"] = d.raw_text;
            dec["matched_by"] = match_name(d.matched_by);
            obj["decisions"].push_back(std::move(dec));
        }
        obj["metrics"] = metrics_to_json(r.metrics);
        doc["per_episode"].push_back(std::move(obj));
    }
    nlohmann::ordered_json agg;
    agg["TL"] = report.tl;
    agg["NE"] = report.ne;
    agg["SR"] = report.sr;
    agg["OSR"] = report.osr;
    agg["SPL"] = report.spl;
    doc["aggregate"] = std::move(agg);
    if (config_echo) doc["config"] = *config_echo;
    return doc;
}

std::string report_to_csv(const EvalReport& report) {
    std::string csv = "episode_id,TL,NE,SR,OSR,SPL,termination\n";
    char buf[128];
    for (const auto& r : report.per_episode) {
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%d,%d,%.6f", r.metrics.tl, r.metrics.ne,
                      r.metrics.sr, r.metrics.osr, r.metrics.spl);
        csv += r.episode_id + "," + buf + "," + termination_name(r.termination) + "\n";
    }
    return csv;
}

CaptionOverrideMap load_overrides(const std::filesystem::path& path, const SceneGraph& graph) {
    std::ifstream in(path);
    if (!in) throw DataError("overrides: cannot open " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("overrides: parse error: " + std::string(e.what()));
    }
    if (!doc.is_object()) throw DataError("overrides: top level must be an object");
    CaptionOverrideMap map;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const std::string& key = it.key();
        const std::size_t slash = key.rfind('/');
        if (slash == std::string::npos)
            throw DataError("overrides: key \"" + key + "\" must be viewpoint_id/view_index");
        const std::string vp_id = key.substr(0, slash);
        int view_index = 0;
        try {
            view_index = std::stoi(key.substr(slash + 1));
        } catch (const std::exception&) {
            throw DataError("overrides: bad view index in \"" + key + "\"");
        }
        const Viewpoint& vp = graph.viewpoint(vp_id);
        if (view_index < 0 || view_index >= static_cast<int>(vp.views.size()))
            throw DataError("overrides: view index out of range in \"" + key + "\"");
        map[{vp_id, view_index}] = it.value().get<std::string>();
    }
    return map;
}

}  // namespace langnav
