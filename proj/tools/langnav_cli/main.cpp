#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "langnav/agents.hpp"
#include "langnav/alfred_transfer.hpp"
#include "langnav/episode_runner.hpp"
#include "langnav/errors.hpp"
#include "langnav/synthetic_pipeline.hpp"

namespace {

using namespace langnav;

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<TrajectoryRecord> load_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::vector<TrajectoryRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            records.push_back(record_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

std::string records_to_jsonl(const std::vector<TrajectoryRecord>& records,
                             bool include_random_spans = false) {
    std::string out;
    for (const auto& r : records) {
        out += record_to_json(r, include_random_spans).dump();
        out += "\n";
    }
    return out;
}

struct CommonEvalFlags {
    std::string scenes, episodes, out_path, csv_path, overrides_path, config_path;
    uint64_t seed = 0;
    int max_steps = 15;
    int jobs = 0;
    int budget = 2048;
    bool no_objects = false;
};

nlohmann::ordered_json config_echo(const CLI::App& cmd, const std::string& config_path) {
    nlohmann::ordered_json echo;
    echo["file"] = config_path.empty() ? "" : read_file(config_path);
    nlohmann::ordered_json resolved;
    for (const CLI::Option* opt : cmd.get_options()) {
        const std::string name = opt->get_name();
        if (name.rfind("--", 0) != 0 || name == "--help" || name == "--config") continue;
        if (opt->count() == 0 && opt->get_default_str().empty()) continue;
        resolved[name.substr(2)] =
            opt->count() ? CLI::detail::join(opt->results(), ",") : opt->get_default_str();
    }
    echo["resolved"] = std::move(resolved);
    return echo;
}

void add_eval_flags(CLI::App& cmd, CommonEvalFlags& flags) {
    cmd.add_option("--scenes", flags.scenes, "Scene graph JSON file")->required();
    cmd.add_option("--episodes", flags.episodes, "Episode JSONL file")->required();
    cmd.add_option("--out", flags.out_path, "Report JSON output path")->required();
    cmd.add_option("--csv", flags.csv_path, "Per-episode CSV output path");
    cmd.add_option("--overrides", flags.overrides_path, "Caption override JSON file");
    cmd.add_option("--seed", flags.seed, "RNG seed")->default_val(0)->capture_default_str();
    cmd.add_option("--max-steps", flags.max_steps, "Move-step cap per episode")
        ->default_val(15)
        ->capture_default_str();
    cmd.add_option("--jobs", flags.jobs, "Worker threads (0 = logical cores)")
        ->default_val(0)
        ->capture_default_str();
    cmd.add_option("--budget", flags.budget, "Prompt token budget")
        ->default_val(2048)
        ->capture_default_str();
    cmd.add_flag("--no-objects", flags.no_objects, "Omit Details: lines from observations");
    cmd.set_config("--config", "", "Key-value config file; command-line flags override");
}

int resolve_jobs(int jobs) {
    if (jobs > 0) return jobs;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

void run_eval_like(const CLI::App& cmd, const CommonEvalFlags& flags,
                   const RunOptions& base_options, const AgentFactory& factory) {
    const SceneGraph graph = SceneGraph::load(flags.scenes);
    const auto episodes = load_episodes(flags.episodes);
    RunOptions options = base_options;
    options.max_steps = flags.max_steps;
    options.include_objects = !flags.no_objects;
    options.budget_tokens = flags.budget;
    CaptionOverrideMap overrides;
    if (!flags.overrides_path.empty()) {
        overrides = load_overrides(flags.overrides_path, graph);
        options.overrides = &overrides;
    }
    const EvalReport report =
        run_all(graph, episodes, factory, options, resolve_jobs(flags.jobs));
    std::string config_file;
    try {
        config_file = cmd.get_config_ptr() ? cmd.get_config_ptr()->as<std::string>() : "";
    } catch (const std::exception&) {
    }
    const nlohmann::ordered_json echo = config_echo(cmd, config_file);
    write_file(flags.out_path, report_to_json(report, &echo).dump(2) + "\n");
    if (!flags.csv_path.empty()) write_file(flags.csv_path, report_to_csv(report));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Text-based navigation harness: evaluation, dataset building, synthesis"};
    app.require_subcommand(1);

    // --- eval ---
    auto* eval_cmd = app.add_subcommand("eval", "Run episodes against an agent, write a report");
    CommonEvalFlags eval_flags;
    add_eval_flags(*eval_cmd, eval_flags);
    std::string agent_kind = "oracle";
    eval_cmd->add_option("--agent", agent_kind, "Agent kind")
        ->check(CLI::IsMember({"oracle", "random", "lm"}))
        ->default_val("oracle")
        ->capture_default_str();
    std::string gateway_kind = "mock";
    eval_cmd->add_option("--gateway", gateway_kind, "LM gateway: mock or http")
        ->check(CLI::IsMember({"mock", "http"}))
        ->default_val("mock")
        ->capture_default_str();
    std::string prompt_mode = "finetune";
    eval_cmd->add_option("--mode", prompt_mode, "Prompt mode")
        ->check(CLI::IsMember({"finetune", "zero_shot", "few_shot"}))
        ->default_val("finetune")
        ->capture_default_str();
    std::string demo_path;
    eval_cmd->add_option("--demo", demo_path, "Demonstration text file for few_shot mode");
    std::string eval_no_match = "abort";
    eval_cmd->add_option("--no-match", eval_no_match, "NoMatch policy")
        ->check(CLI::IsMember({"abort", "forced-stop"}))
        ->default_val("abort")
        ->capture_default_str();

    // --- replay ---
    auto* replay_cmd = app.add_subcommand("replay", "Replay scripted actions, write a report");
    CommonEvalFlags replay_flags;
    add_eval_flags(*replay_cmd, replay_flags);
    std::string script_path;
    replay_cmd->add_option("--script", script_path, "Replay script JSONL")->required();
    std::string replay_no_match = "abort";
    replay_cmd->add_option("--no-match", replay_no_match, "NoMatch policy")
        ->check(CLI::IsMember({"abort", "forced-stop"}))
        ->default_val("abort")
        ->capture_default_str();

    // --- build-dataset ---
    auto* build_cmd =
        app.add_subcommand("build-dataset", "Build perturbed teacher demonstrations");
    std::string bd_scenes, bd_episodes, bd_out;
    double bd_rho = 0.2;
    uint64_t bd_seed = 0;
    int bd_repeats = 1;
    bool bd_random_spans = false, bd_no_objects = false;
    build_cmd->add_option("--scenes", bd_scenes, "Scene graph JSON file")->required();
    build_cmd->add_option("--episodes", bd_episodes, "Episode JSONL file")->required();
    build_cmd->add_option("--out", bd_out, "Record JSONL output path")->required();
    build_cmd->add_option("--rho", bd_rho, "Random-action probability")
        ->default_val(0.2)
        ->capture_default_str();
    build_cmd->add_option("--seed", bd_seed, "RNG seed")->default_val(0)->capture_default_str();
    build_cmd->add_option("--repeats", bd_repeats, "Seeded builds per episode")
        ->default_val(1)
        ->capture_default_str();
    build_cmd->add_flag("--include-random-spans", bd_random_spans,
                        "Keep is_random action spans in the emitted records");
    build_cmd->add_flag("--no-objects", bd_no_objects, "Omit Details: lines");
    build_cmd->set_config("--config", "", "Key-value config file; command-line flags override");

    // --- synth ---
    auto* synth_cmd = app.add_subcommand("synth", "Two-phase synthetic trajectory generation");
    std::string sy_bank, sy_scenes, sy_episodes, sy_out, sy_rejects, sy_gateway = "mock";
    int sy_target = 10, sy_jobs = 1;
    uint64_t sy_seed = 0;
    synth_cmd->add_option("--seed-bank", sy_bank,
                          "Seed bank JSONL { id, instruction, demo_text }");
    synth_cmd->add_option("--scenes", sy_scenes, "Scene file (to render a bank from episodes)");
    synth_cmd->add_option("--episodes", sy_episodes, "Episode JSONL (bank source)");
    synth_cmd->add_option("--out", sy_out, "Synthetic record JSONL output")->required();
    synth_cmd->add_option("--rejects", sy_rejects, "Rejected-generation JSONL log");
    synth_cmd->add_option("--target", sy_target, "Number of validated records to produce")
        ->default_val(10)
        ->capture_default_str();
    synth_cmd->add_option("--seed", sy_seed, "RNG seed")->default_val(0)->capture_default_str();
    synth_cmd->add_option("--jobs", sy_jobs, "Concurrent trajectory generations")
        ->default_val(1)
        ->capture_default_str();
    synth_cmd->add_option("--gateway", sy_gateway, "LM gateway: mock or http")
        ->check(CLI::IsMember({"mock", "http"}))
        ->default_val("mock")
        ->capture_default_str();
    synth_cmd->set_config("--config", "", "Key-value config file; command-line flags override");

    // --- transfer ---
    auto* transfer_cmd =
        app.add_subcommand("transfer", "Transform simulator trajectories into records");
    std::string tr_in, tr_out;
    uint64_t tr_seed = 0;
    int tr_mask_min = 0, tr_mask_max = 8;
    transfer_cmd->add_option("--in", tr_in, "Simulator trajectory JSONL")->required();
    transfer_cmd->add_option("--out", tr_out, "Record JSONL output path")->required();
    transfer_cmd->add_option("--seed", tr_seed, "RNG seed")->default_val(0)->capture_default_str();
    transfer_cmd->add_option("--mask-min", tr_mask_min, "Minimum masked panorama slots")
        ->default_val(0)
        ->capture_default_str();
    transfer_cmd->add_option("--mask-max", tr_mask_max, "Maximum masked panorama slots")
        ->default_val(8)
        ->capture_default_str();
    transfer_cmd->set_config("--config", "", "Key-value config file; command-line flags override");

    // --- mix ---
    auto* mix_cmd = app.add_subcommand("mix", "Mix and shuffle record datasets");
    std::string mx_synth, mx_real, mx_out;
    uint64_t mx_seed = 0;
    mix_cmd->add_option("--synthetic", mx_synth, "Synthetic record JSONL")->required();
    mix_cmd->add_option("--real", mx_real, "Real record JSONL")->required();
    mix_cmd->add_option("--out", mx_out, "Mixed JSONL output path")->required();
    mix_cmd->add_option("--seed", mx_seed, "Shuffle seed")->default_val(0)->capture_default_str();
    mix_cmd->set_config("--config", "", "Key-value config file; command-line flags override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (eval_cmd->parsed()) {
            RunOptions options;
            options.no_match_policy = eval_no_match == "abort" ? NoMatchPolicy::abort
                                                               : NoMatchPolicy::forced_stop;
            if (prompt_mode == "zero_shot") options.profile.mode = PromptMode::zero_shot;
            if (prompt_mode == "few_shot") {
                options.profile.mode = PromptMode::few_shot;
                if (demo_path.empty())
                    throw DataError("--mode few_shot requires --demo");
                options.profile.demonstration = read_file(demo_path);
            }
            std::unique_ptr<Gateway> gateway;
            if (agent_kind == "lm") {
                if (gateway_kind == "mock")
                    gateway = std::make_unique<TemplateGateway>(eval_flags.seed);
                else
                    gateway = std::make_unique<HttpGateway>(HttpGateway::options_from_env());
            }
            const uint64_t seed = eval_flags.seed;
            AgentFactory factory = [&](const Episode&, std::size_t i) -> std::unique_ptr<Agent> {
                if (agent_kind == "oracle") return std::make_unique<OracleAgent>();
                if (agent_kind == "random")
                    return std::make_unique<RandomAgent>(derive_seed(seed, i));
                return std::make_unique<LmAgent>(*gateway);
            };
            run_eval_like(*eval_cmd, eval_flags, options, factory);
        } else if (replay_cmd->parsed()) {
            RunOptions options;
            options.no_match_policy = replay_no_match == "abort" ? NoMatchPolicy::abort
                                                                 : NoMatchPolicy::forced_stop;
            const auto scripts = load_replay_scripts(script_path);
            AgentFactory factory = [&](const Episode& ep, std::size_t) -> std::unique_ptr<Agent> {
                auto it = scripts.find(ep.id);
                if (it == scripts.end())
                    throw DataError("replay: no script for episode \"" + ep.id + "\"");
                return std::make_unique<ReplayAgent>(it->second);
            };
            run_eval_like(*replay_cmd, replay_flags, options, factory);
        } else if (build_cmd->parsed()) {
            const SceneGraph graph = SceneGraph::load(bd_scenes);
            const auto episodes = load_episodes(bd_episodes);
            const auto demos = build_dataset(graph, episodes, bd_rho, bd_seed, bd_repeats);
            std::vector<TrajectoryRecord> records;
            for (std::size_t i = 0; i < demos.size(); ++i) {
                const Episode& ep = episodes[i / static_cast<std::size_t>(bd_repeats)];
                records.push_back(
                    demonstration_record(graph, ep, demos[i], !bd_no_objects));
            }
            write_file(bd_out, records_to_jsonl(records, bd_random_spans));
        } else if (synth_cmd->parsed()) {
            std::unique_ptr<Gateway> gateway;
            if (sy_gateway == "mock")
                gateway = std::make_unique<TemplateGateway>(sy_seed);
            else
                gateway = std::make_unique<HttpGateway>(HttpGateway::options_from_env());
            SeedBank bank;
            if (!sy_bank.empty()) {
                bank = load_seed_bank(sy_bank, *gateway);
            } else if (!sy_scenes.empty() && !sy_episodes.empty()) {
                const SceneGraph graph = SceneGraph::load(sy_scenes);
                bank = build_seed_bank(graph, load_episodes(sy_episodes), *gateway);
            } else {
                throw DataError("synth: need --seed-bank or --scenes with --episodes");
            }
            const SynthesisResult result =
                run_synthesis(*gateway, bank, sy_target, sy_seed, sy_jobs);
            std::string out;
            for (std::size_t i = 0; i < result.records.size(); ++i)
                out += synth_record_json(result.records[i], result.trajectories[i]).dump() + "\n";
            write_file(sy_out, out);
            if (!sy_rejects.empty()) {
                std::string rej;
                for (const auto& r : result.rejects) rej += r.dump() + "\n";
                write_file(sy_rejects, rej);
            }
        } else if (transfer_cmd->parsed()) {
            const auto trajs = load_sim_trajectories(tr_in);
            const auto records =
                transfer_trajectories(trajs, tr_seed, tr_mask_min, tr_mask_max);
            write_file(tr_out, records_to_jsonl(records));
        } else if (mix_cmd->parsed()) {
            const auto mixed =
                mix_datasets(load_records(mx_synth), load_records(mx_real), mx_seed);
            write_file(mx_out, records_to_jsonl(mixed));
        }
    } catch (const GatewayError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NoMatchError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
