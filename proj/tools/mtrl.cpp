#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"

#include "mtrl/evals.hpp"
#include "mtrl/plotting.hpp"
#include "mtrl/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace mtrl;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string out_root() {
    const char* v = std::getenv("MTRL_OUT_ROOT");
    return v && *v ? v : ".";
}

void write_manifest(const std::string& path, const std::string& kind, uint64_t seed,
                    const json& args, const json& outputs) {
    json m;
    m["version"] = kVersion;
    m["kind"] = kind;
    m["seed"] = seed;
    m["args"] = args;
    m["outputs"] = outputs;
    std::ofstream f(path);
    require(f.good(), "cannot write manifest: " + path);
    f << m.dump(2) << "\n";
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    require(f.good(), "cannot write: " + path);
    f << text;
}

struct GenDemosArgs {
    std::vector<int> tasks = {1, 2, 3, 4};
    int per_task = 1000;
    uint64_t seed = 1;
    std::string out;
    bool force = false;
};

int cmd_gen_demos(const GenDemosArgs& a) {
    if (a.out.empty()) fail("gen-demos: --out is required");
    if (fs::exists(a.out) && !a.force)
        fail("gen-demos: '" + a.out + "' exists (pass --force to overwrite)");
    Environment env{EnvConfig{}};
    std::vector<Demonstration> demos;
    demos.reserve(size_t(a.tasks.size()) * size_t(a.per_task));
    for (int task_id : a.tasks) {
        TaskSpec task = task_by_id(task_id);
        RandomStream rng(a.seed, "gen-demos-task" + std::to_string(task_id));
        for (int i = 0; i < a.per_task; ++i)
            demos.push_back(scripted_demo(env, task, rng));
    }
    save_demos(a.out, demos);

    std::map<int, int> counts;
    double len_sum = 0;
    int len_min = 1 << 30, len_max = 0;
    for (const auto& d : demos) {
        counts[d.task_id] += 1;
        len_sum += d.length();
        len_min = std::min(len_min, d.length());
        len_max = std::max(len_max, d.length());
    }
    std::cout << "wrote " << demos.size() << " demonstrations to " << a.out << "\n";
    for (const auto& [t, c] : counts)
        std::cout << "  task " << t << " (" << task_by_id(t).name() << "): " << c << "\n";
    std::cout << "  length mean=" << len_sum / double(demos.size()) << " min=" << len_min
              << " max=" << len_max << "\n";
    write_manifest(a.out + ".manifest.json", "gen-demos", a.seed,
                   json{{"tasks", a.tasks}, {"per_task", a.per_task}},
                   json{{"dataset", a.out}, {"records", demos.size()}});
    return 0;
}

struct TrainArgs {
    std::string config_path;
    std::string setting;
    std::string ablation;
    int episodes = -1;
    int64_t seed = -1;
    std::string demos_path;
    std::string out;
    int update_every = -1;
    int rl_batch = -1;
    int ssl_batch = -1;
};

int cmd_train(const TrainArgs& a) {
    RunConfig cfg = a.config_path.empty() ? RunConfig() : RunConfig::load(a.config_path);
    if (!a.setting.empty()) cfg.setting = setting_from_string(a.setting);
    if (!a.ablation.empty()) cfg.ablation = ablation_from_string(a.ablation);
    if (a.episodes >= 0) cfg.episodes = a.episodes;
    if (a.seed >= 0) cfg.seed = uint64_t(a.seed);
    if (!a.demos_path.empty()) cfg.demo_path = a.demos_path;
    if (a.update_every >= 1) cfg.update_every = a.update_every;
    if (a.rl_batch >= 1) cfg.rl_batch = a.rl_batch;
    if (a.ssl_batch >= 2) cfg.ssl_batch = a.ssl_batch;
    cfg.validate();

    std::string out_dir = a.out.empty() ? out_root() + "/run" : a.out;
    DemoStore demos(load_demos(cfg.demo_path));
    auto res = train_run(cfg, demos, out_dir, [](int, const std::string& line) {
        std::cout << line << "\n" << std::flush;
    });
    std::cout << "metrics:    " << res.metrics_path << "\n"
              << "checkpoint: " << res.checkpoint_path << "\n"
              << "manifest:   " << res.manifest_path << "\n";
    return 0;
}

struct EvalArgs {
    std::string checkpoint;
    std::string demos_path;
    std::string mode = "standard";
    int trials = 100;
    int crops_per_demo = 10;
    uint64_t seed = 1;
    std::string out;
};

int cmd_eval(const EvalArgs& a) {
    System sys = load_system(a.checkpoint);
    std::string demo_path = a.demos_path.empty() ? sys.cfg.demo_path : a.demos_path;
    DemoStore demos(load_demos(demo_path));
    SuccessTable table;
    if (a.mode == "standard") {
        table = eval_standard(sys, demos, sys.cfg.tasks, a.trials, a.seed);
    } else if (a.mode == "incomplete") {
        int demos_per_task = std::max(1, a.trials / std::max(1, a.crops_per_demo));
        table = eval_incomplete(sys, demos, sys.cfg.tasks, demos_per_task,
                                a.crops_per_demo, a.seed);
    } else {
        fail("eval: unknown --mode '" + a.mode + "' (want standard|incomplete)");
    }
    std::cout << table.to_text();
    std::string out_dir = a.out.empty() ? out_root() + "/eval" : a.out;
    fs::create_directories(out_dir);
    write_text(out_dir + "/success.csv", table.to_csv());
    write_text(out_dir + "/trials.csv", table.trials_csv());
    write_manifest(out_dir + "/manifest.json", "eval", a.seed,
                   json{{"checkpoint", a.checkpoint},
                        {"mode", a.mode},
                        {"trials", a.trials},
                        {"crops_per_demo", a.crops_per_demo}},
                   json{{"success", out_dir + "/success.csv"},
                        {"trials", out_dir + "/trials.csv"}});
    return 0;
}

struct OneshotArgs {
    std::string checkpoint;
    int trials = 100;
    uint64_t seed = 1;
    std::string out;
};

int cmd_oneshot(const OneshotArgs& a) {
    System sys = load_system(a.checkpoint);
    SuccessTable table = eval_oneshot(sys, heldout_task_ids(), a.trials, a.seed);
    std::cout << table.to_text();
    std::string out_dir = a.out.empty() ? out_root() + "/oneshot" : a.out;
    fs::create_directories(out_dir);
    write_text(out_dir + "/success.csv", table.to_csv());
    write_text(out_dir + "/trials.csv", table.trials_csv());
    write_manifest(out_dir + "/manifest.json", "oneshot", a.seed,
                   json{{"checkpoint", a.checkpoint}, {"trials", a.trials}},
                   json{{"success", out_dir + "/success.csv"},
                        {"trials", out_dir + "/trials.csv"}});
    return 0;
}

struct InspectArgs {
    std::string checkpoint;
    std::string net = "all";
    std::string out;
};

int cmd_inspect(const InspectArgs& a) {
    System sys = load_system(a.checkpoint);
    std::string out_dir = a.out.empty() ? out_root() + "/gwr" : a.out;
    fs::create_directories(out_dir);
    std::map<std::string, const GwrNetwork*> nets;
    if (sys.hierarchy) {
        nets["action"] = &sys.hierarchy->action_net();
        nets["intention"] = &sys.hierarchy->intention_net();
        nets["behavior"] = &sys.hierarchy->behavior_net();
    } else if (sys.behavior_direct) {
        nets["behavior"] = &*sys.behavior_direct;
    } else {
        fail("inspect-gwr: this checkpoint has no self-organizing nets (ablation " +
             to_string(sys.cfg.ablation) + ")");
    }
    json outputs = json::object();
    for (const auto& [name, net] : nets) {
        if (a.net != "all" && a.net != name) continue;
        write_text(out_dir + "/" + name + ".json", net->to_json());
        write_text(out_dir + "/" + name + ".dot", net->to_dot());
        std::cout << name << ": " << net->node_count() << " nodes, " << net->edge_count()
                  << " edges (input width " << net->dim() << ")\n";
        outputs[name + "_json"] = out_dir + "/" + name + ".json";
        outputs[name + "_dot"] = out_dir + "/" + name + ".dot";
    }
    require(!outputs.empty(), "inspect-gwr: no net named '" + a.net + "' in checkpoint");
    write_manifest(out_dir + "/manifest.json", "inspect-gwr", sys.cfg.seed,
                   json{{"checkpoint", a.checkpoint}, {"net", a.net}}, outputs);
    return 0;
}

struct PlotArgs {
    std::vector<std::string> metrics;
    std::string column = "test_reward";
    int window = 200;
    std::string title;
    std::string out;
};

int cmd_plot(const PlotArgs& a) {
    require(!a.metrics.empty(), "plot: need at least one --metrics file");
    AggregatedCurve curve = aggregate_metrics(a.metrics, a.column, a.window);
    std::string out_dir = a.out.empty() ? out_root() + "/plots" : a.out;
    fs::create_directories(out_dir);
    std::string title = a.title.empty()
                            ? a.column + " (window " + std::to_string(a.window) + ", " +
                                  std::to_string(curve.seeds) + " seeds)"
                            : a.title;
    write_curve_csv(curve, out_dir + "/" + a.column + ".csv");
    write_curve_svg(curve, title, out_dir + "/" + a.column + ".svg");
    std::cout << "wrote " << out_dir << "/" << a.column << ".svg ("
              << curve.mean.size() << " points, " << curve.seeds << " seeds)\n";
    write_manifest(out_dir + "/manifest.json", "plot", 0,
                   json{{"metrics", a.metrics},
                        {"column", a.column},
                        {"window", a.window}},
                   json{{"csv", out_dir + "/" + a.column + ".csv"},
                        {"svg", out_dir + "/" + a.column + ".svg"}});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"continual multi-task reinforcement learning on a 2D tabletop"};
    app.require_subcommand(1);

    GenDemosArgs ga;
    auto* gen = app.add_subcommand("gen-demos", "generate scripted demonstration datasets");
    gen->add_option("--tasks", ga.tasks, "task ids")->delimiter(',');
    gen->add_option("--per-task", ga.per_task, "demonstrations per task");
    gen->add_option("--seed", ga.seed, "random seed");
    gen->add_option("--out", ga.out, "output dataset file")->required();
    gen->add_flag("--force", ga.force, "overwrite an existing file");

    TrainArgs ta;
    auto* train = app.add_subcommand("train", "train a policy");
    train->add_option("--config", ta.config_path, "run config JSON file");
    train->add_option("--setting", ta.setting, "fixed|continual");
    train->add_option("--ablation", ta.ablation,
                      "full|no-act-int|tinet-only|no-tinet|single-task");
    train->add_option("--episodes", ta.episodes, "episode budget");
    train->add_option("--seed", ta.seed, "random seed");
    train->add_option("--demos", ta.demos_path, "demonstration dataset");
    train->add_option("--out", ta.out, "output directory");
    train->add_option("--update-every", ta.update_every,
                      "environment steps between update rounds");
    train->add_option("--rl-batch", ta.rl_batch, "replay minibatch size");
    train->add_option("--ssl-batch", ta.ssl_batch, "self-supervised minibatch size");

    EvalArgs ea;
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on its training tasks");
    ev->add_option("--checkpoint", ea.checkpoint)->required();
    ev->add_option("--demos", ea.demos_path, "demo dataset (defaults to the one in the config)");
    ev->add_option("--mode", ea.mode, "standard|incomplete");
    ev->add_option("--trials", ea.trials, "trials per task");
    ev->add_option("--crops-per-demo", ea.crops_per_demo);
    ev->add_option("--seed", ea.seed);
    ev->add_option("--out", ea.out, "output directory");

    OneshotArgs oa;
    auto* os_cmd = app.add_subcommand("oneshot", "one-shot evaluation on held-out tasks");
    os_cmd->add_option("--checkpoint", oa.checkpoint)->required();
    os_cmd->add_option("--trials", oa.trials, "trials per held-out task");
    os_cmd->add_option("--seed", oa.seed);
    os_cmd->add_option("--out", oa.out, "output directory");

    InspectArgs ia;
    auto* insp = app.add_subcommand("inspect-gwr", "export self-organizing graphs");
    insp->add_option("--checkpoint", ia.checkpoint)->required();
    insp->add_option("--net", ia.net, "action|intention|behavior|all");
    insp->add_option("--out", ia.out, "output directory");

    PlotArgs pa;
    auto* plot = app.add_subcommand("plot", "aggregate metrics and draw learning curves");
    plot->add_option("--metrics", pa.metrics, "metrics.csv files (one per seed)")
        ->required();
    plot->add_option("--column", pa.column, "metrics column to plot");
    plot->add_option("--window", pa.window, "smoothing window in episodes");
    plot->add_option("--title", pa.title, "plot title");
    plot->add_option("--out", pa.out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;  // usage errors exit 1
    }

    try {
        if (gen->parsed()) return cmd_gen_demos(ga);
        if (train->parsed()) return cmd_train(ta);
        if (ev->parsed()) return cmd_eval(ea);
        if (os_cmd->parsed()) return cmd_oneshot(oa);
        if (insp->parsed()) return cmd_inspect(ia);
        if (plot->parsed()) return cmd_plot(pa);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
