// Command-line front end: instance generation, dataset generation, training,
// the learned search, the destroy/repair baseline, ablations, and report
// aggregation. Every command resolves its flags (defaults included) into a
// string map, writes that map as a run manifest, and executes from the map
// alone — `replay` re-runs any manifest through the same path.

#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "coagents/beam.hpp"
#include "coagents/brute_force.hpp"
#include "coagents/dataset.hpp"
#include "coagents/manifest.hpp"
#include "coagents/model.hpp"
#include "coagents/report.hpp"
#include "coagents/search.hpp"
#include "coagents/trainer.hpp"
#include "coagents/vrp.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace coagents;

namespace {

using Params = std::map<std::string, std::string>;

// ---- param-map helpers -------------------------------------------------------

const std::string& req(const Params& p, const std::string& key) {
    const auto it = p.find(key);
    if (it == p.end()) throw std::runtime_error("manifest/flags: missing parameter '" + key + "'");
    return it->second;
}

long long to_ll(const Params& p, const std::string& key) {
    return std::stoll(req(p, key));
}

int to_int(const Params& p, const std::string& key) { return std::stoi(req(p, key)); }

double to_double(const Params& p, const std::string& key) { return std::stod(req(p, key)); }

std::uint64_t to_u64(const Params& p, const std::string& key) {
    return std::stoull(req(p, key));
}

bool to_bool(const Params& p, const std::string& key) { return req(p, key) == "1"; }

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const std::size_t end = s.find(sep, start);
        if (end == std::string::npos) {
            if (start < s.size()) out.push_back(s.substr(start));
            break;
        }
        if (end > start) out.push_back(s.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

std::string join(const std::vector<std::string>& v, char sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += v[i];
    }
    return out;
}

std::vector<double> parse_tiers(const std::string& s) {
    std::vector<double> out;
    for (const std::string& t : split(s, ',')) out.push_back(std::stod(t));
    if (out.empty()) throw std::runtime_error("empty tier list");
    return out;
}

// ---- shared plumbing ----------------------------------------------------------

struct InstanceSet {
    std::vector<ProblemInstance> instances;
    std::vector<std::string> ids;
};

InstanceSet resolve_instances(const Params& p) {
    InstanceSet set;
    const std::string gen = req(p, "gen");
    const std::string paths = req(p, "instances");
    if (!gen.empty() && !paths.empty())
        throw std::runtime_error("use either --instances or --gen, not both");
    if (gen.empty() && paths.empty())
        throw std::runtime_error("one of --instances or --gen is required");
    if (!gen.empty()) {
        const auto parts = split(gen, ',');
        if (parts.size() != 3) throw std::runtime_error("--gen expects n,count,variant");
        const int n = std::stoi(parts[0]);
        const int count = std::stoi(parts[1]);
        const Variant variant = variant_from_name(parts[2]);
        const std::uint64_t seed = to_u64(p, "seed");
        char id[64];
        for (int i = 0; i < count; ++i) {
            set.instances.push_back(generate_instance(n, variant, sub_seed(seed, i)));
            std::snprintf(id, sizeof(id), "gen-%s-n%d-%03d", parts[2].c_str(), n, i);
            set.ids.emplace_back(id);
        }
    } else {
        for (const std::string& path : split(paths, ';')) {
            set.instances.push_back(read_instance(path));
            set.ids.push_back(fs::path(path).filename().string());
        }
    }
    return set;
}

std::map<std::string, double> load_refs(const std::string& path) {
    std::map<std::string, double> refs;
    if (path.empty()) return refs;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open reference file " + path);
    nlohmann::json j;
    in >> j;
    for (const auto& [k, v] : j.items()) refs[k] = v.get<double>();
    return refs;
}

double reference_for(const ProblemInstance& inst, const std::string& id,
                     const std::map<std::string, double>& refs) {
    const auto it = refs.find(id);
    if (it != refs.end()) return it->second;
    if (inst.n() <= 10) return brute_force_optimum(inst).objective;
    return 0.0;  // gap unavailable; report skips such records
}

void parallel_for(int jobs, int count, const std::function<void(int)>& fn) {
    jobs = std::max(1, std::min(jobs, count));
    if (jobs <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t)
        pool.emplace_back([&, t] {
            try {
                for (int i = next++; i < count; i = next++) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

nn::Model clone_model(const nn::Model& m) {
    nn::Model c(m.config(), 0);
    c.load_values(m.values());
    return c;
}

nn::ModelConfig config_by_name(const std::string& name) {
    if (name == "small") return nn::ModelConfig::small();
    if (name == "full") return nn::ModelConfig::full();
    throw std::runtime_error("unknown model config '" + name + "' (small|full)");
}

void scrub_timing(SearchResult& res) {
    for (TraceRow& r : res.trace) r.elapsed_ms = 0.0;
    res.elapsed_ms = 0.0;
}

std::string trace_path(const std::string& out, const std::string& prefix, int i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%03d.csv", prefix.c_str(), i);
    return out + "/" + buf;
}

// ---- command handlers ----------------------------------------------------------

void run_gen(const Params& p) {
    const auto parts = split(req(p, "gen"), ',');
    if (parts.size() != 3) throw std::runtime_error("--gen expects n,count,variant");
    const int n = std::stoi(parts[0]);
    const int count = std::stoi(parts[1]);
    const Variant variant = variant_from_name(parts[2]);
    const std::uint64_t seed = to_u64(p, "seed");
    const std::string out = req(p, "out");
    char name[64];
    for (int i = 0; i < count; ++i) {
        const ProblemInstance inst = generate_instance(n, variant, sub_seed(seed, i));
        std::snprintf(name, sizeof(name), "%s/instance_%03d.json", out.c_str(), i);
        write_instance(inst, name);
    }
    std::printf("gen: wrote %d %s instance(s) with n=%d to %s\n", count, parts[2].c_str(), n,
                out.c_str());
}

void run_dataset(const Params& p) {
    const InstanceSet set = resolve_instances(p);
    const std::string kind = req(p, "kind");
    const std::uint64_t seed = to_u64(p, "seed");
    const std::string out = req(p, "out");
    const int jobs = to_int(p, "jobs");
    const int count = static_cast<int>(set.instances.size());

    if (kind == "select") {
        SelectGenConfig cfg;
        cfg.tiers = parse_tiers(req(p, "tiers"));
        cfg.chains_per_tier = to_int(p, "chains");
        cfg.max_window = to_int(p, "max-window");
        std::vector<std::vector<SelectSample>> parts(set.instances.size());
        std::vector<SelectGenStats> stats(set.instances.size());
        parallel_for(jobs, count, [&](int i) {
            const Solution opt = brute_force_optimum(set.instances[i]);
            Rng rng(sub_seed(seed, 10000 + static_cast<std::uint64_t>(i)));
            parts[i] = generate_selection_samples(set.instances[i], opt, cfg, rng, &stats[i]);
            for (SelectSample& s : parts[i]) s.instance_index = i;
        });
        SelectionDataset data;
        data.instances = set.instances;
        SelectGenStats total;
        std::map<double, int> per_tier;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            total.tiers_skipped += stats[i].tiers_skipped;
            total.ties_discarded += stats[i].ties_discarded;
            total.windows_empty += stats[i].windows_empty;
            total.emitted += stats[i].emitted;
            for (SelectSample& s : parts[i]) {
                ++per_tier[s.tier_percent];
                data.samples.push_back(std::move(s));
            }
        }
        const std::string path = out + "/select.json";
        save_selection_dataset(data, path);
        std::printf("dataset: %zu selection windows over %d instance(s) -> %s\n",
                    data.samples.size(), count, path.c_str());
        for (const auto& [tier, cnt] : per_tier) std::printf("  tier %.1f%%: %d\n", tier, cnt);
        std::printf("  skipped tiers %d, tie discards %d, empty windows %d\n",
                    total.tiers_skipped, total.ties_discarded, total.windows_empty);
    } else if (kind == "jump") {
        JumpGenConfig cfg;
        cfg.starts = to_int(p, "starts");
        cfg.trajectory_iters = to_ll(p, "trajectory-iters");
        cfg.max_targets = to_int(p, "max-targets");
        cfg.max_window = to_int(p, "max-window");
        cfg.windows_per_start = to_int(p, "windows-per-start");
        std::vector<std::vector<JumpSample>> parts(set.instances.size());
        parallel_for(jobs, count, [&](int i) {
            const Solution opt = brute_force_optimum(set.instances[i]);
            Rng rng(sub_seed(seed, 20000 + static_cast<std::uint64_t>(i)));
            parts[i] = generate_jump_samples(set.instances[i], opt, cfg, rng);
            for (JumpSample& s : parts[i]) s.instance_index = i;
        });
        JumpDataset data;
        data.instances = set.instances;
        for (auto& part : parts)
            for (JumpSample& s : part) data.samples.push_back(std::move(s));
        const std::string path = out + "/jump.json";
        save_jump_dataset(data, path);
        std::printf("dataset: %zu jump windows over %d instance(s) -> %s\n", data.samples.size(),
                    count, path.c_str());
    } else {
        throw std::runtime_error("unknown dataset kind '" + kind + "' (select|jump)");
    }
}

void run_train(const Params& p) {
    const std::string agent = req(p, "agent");
    if (agent != "select" && agent != "jump")
        throw std::runtime_error("unknown agent '" + agent + "' (select|jump)");
    const std::string resume = req(p, "resume");
    const std::string out = req(p, "out");

    nn::TrainConfig tc;
    tc.max_steps = to_ll(p, "steps");
    tc.batch_size = static_cast<std::size_t>(to_int(p, "batch"));
    tc.checkpoint_every = to_ll(p, "checkpoint-every");
    tc.seed = to_u64(p, "seed");
    tc.out_dir = out;
    tc.val_fraction = to_double(p, "val-fraction");

    nn::OptimizerState opt_state;
    nn::Model model = resume.empty()
                          ? nn::Model(config_by_name(req(p, "config")), to_u64(p, "seed"))
                          : nn::load_checkpoint(resume, &opt_state);
    nn::Adam adam(model, tc.adam);
    if (!resume.empty() && opt_state.step > 0) adam.load_state(opt_state);

    nn::TrainResult res;
    if (agent == "select")
        res = nn::train_select(model, load_selection_dataset(req(p, "dataset")), tc, &adam);
    else
        res = nn::train_jump(model, load_jump_dataset(req(p, "dataset")), tc, &adam);
    std::printf("train(%s): %lld step(s), final loss %.6f, checkpoint %s\n", agent.c_str(),
                res.steps, res.final_loss, res.checkpoint_path.c_str());
}

// shared by solve/ablate: run the learned loop over a set and write artifacts
std::vector<RunRecord> solve_set(const Params& p, const InstanceSet& set, SearchVariant variant,
                                 const std::string& prefix, const nn::Model& select_base,
                                 const nn::Model& jump_base) {
    const std::uint64_t seed = to_u64(p, "seed");
    const std::string out = req(p, "out");
    const bool no_timing = to_bool(p, "no-timing");
    const auto refs = load_refs(req(p, "refs"));
    const int count = static_cast<int>(set.instances.size());

    std::vector<RunRecord> records(set.instances.size());
    parallel_for(to_int(p, "jobs"), count, [&](int i) {
        nn::Model sel = clone_model(select_base);
        nn::Model jmp = clone_model(jump_base);
        SearchConfig sc;
        sc.budget_iters = to_ll(p, "budget-iters");
        sc.stagnation_after = to_int(p, "stagnation");
        sc.n_beam = to_int(p, "beam");
        sc.window_cap = to_int(p, "window-cap");
        sc.variant = variant;
        sc.seed = sub_seed(seed, 10000 + static_cast<std::uint64_t>(i));
        SearchResult res = coagents_solve(set.instances[i], sel, jmp, sc);
        if (no_timing) scrub_timing(res);
        write_trace_csv(res.trace, trace_path(out, prefix, i));
        RunRecord& r = records[static_cast<std::size_t>(i)];
        r.id = set.ids[i];
        r.objective = res.best.objective;
        r.reference = reference_for(set.instances[i], set.ids[i], refs);
        r.feasible = res.best_feasible;
        r.elapsed_ms = res.elapsed_ms;
        r.checkpoints = res.checkpoint_best;
    });
    return records;
}

void run_solve(const Params& p) {
    const InstanceSet set = resolve_instances(p);
    const std::string out = req(p, "out");
    const SearchVariant variant = variant_from_label(req(p, "variant"));
    nn::Model select_base = to_bool(p, "random-models")
                                ? nn::Model(config_by_name(req(p, "config")),
                                            sub_seed(to_u64(p, "seed"), 901))
                                : nn::load_checkpoint(req(p, "select-checkpoint"));
    nn::Model jump_base = to_bool(p, "random-models")
                              ? nn::Model(config_by_name(req(p, "config")),
                                          sub_seed(to_u64(p, "seed"), 902))
                              : nn::load_checkpoint(req(p, "jump-checkpoint"));
    const auto records = solve_set(p, set, variant, "trace", select_base, jump_base);
    const std::string method = "coagents-" + variant_label(variant);
    write_records(out + "/results.json", method, records);
    const Aggregate a = aggregate(records);
    std::printf("solve(%s): %d instance(s), mean objective %.4f, mean gap %.4f\n", method.c_str(),
                a.count, a.mean_obj, a.mean_gap);
}

void run_alns(const Params& p) {
    const InstanceSet set = resolve_instances(p);
    const std::uint64_t seed = to_u64(p, "seed");
    const std::string out = req(p, "out");
    const bool no_timing = to_bool(p, "no-timing");
    const auto refs = load_refs(req(p, "refs"));
    const int count = static_cast<int>(set.instances.size());

    std::vector<RunRecord> records(set.instances.size());
    parallel_for(to_int(p, "jobs"), count, [&](int i) {
        SearchResult res = alns_solve(set.instances[i], to_ll(p, "budget-iters"),
                                      sub_seed(seed, 10000 + static_cast<std::uint64_t>(i)));
        if (no_timing) scrub_timing(res);
        write_trace_csv(res.trace, trace_path(out, "trace", i));
        RunRecord& r = records[static_cast<std::size_t>(i)];
        r.id = set.ids[i];
        r.objective = res.best.objective;
        r.reference = reference_for(set.instances[i], set.ids[i], refs);
        r.feasible = res.best_feasible;
        r.elapsed_ms = res.elapsed_ms;
        r.checkpoints = res.checkpoint_best;
    });
    write_records(out + "/results.json", "alns", records);
    const Aggregate a = aggregate(records);
    std::printf("alns: %d instance(s), mean objective %.4f, mean gap %.4f\n", a.count, a.mean_obj,
                a.mean_gap);
}

void run_ablate(const Params& p) {
    const InstanceSet set = resolve_instances(p);
    const std::string out = req(p, "out");
    nn::Model select_base = nn::load_checkpoint(req(p, "select-checkpoint"));
    nn::Model jump_base = nn::load_checkpoint(req(p, "jump-checkpoint"));

    std::vector<std::pair<std::string, std::vector<RunRecord>>> runs;
    for (const SearchVariant v : {SearchVariant::full, SearchVariant::no_nsa,
                                  SearchVariant::no_msa, SearchVariant::no_jump}) {
        const std::string label = variant_label(v);
        auto records = solve_set(p, set, v, "trace_" + label, select_base, jump_base);
        write_records(out + "/results_" + label + ".json", "coagents-" + label, records);
        runs.emplace_back(label, std::move(records));
    }
    const std::string text = render_report(runs, to_u64(p, "seed"));
    std::ofstream rep(out + "/report.txt");
    rep << text;
    std::fputs(text.c_str(), stdout);
}

void run_report(const Params& p) {
    std::vector<std::pair<std::string, std::vector<RunRecord>>> runs;
    for (const std::string& path : split(req(p, "inputs"), ';')) {
        std::string method;
        auto records = read_records(path, &method);
        runs.emplace_back(method.empty() ? fs::path(path).filename().string() : method,
                          std::move(records));
    }
    if (runs.empty()) throw std::runtime_error("report: no input files");
    const std::string text = render_report(runs, to_u64(p, "seed"));
    std::ofstream rep(req(p, "out") + "/report.txt");
    rep << text;
    std::fputs(text.c_str(), stdout);
}

void dispatch(const std::string& command, const Params& params) {
    const std::string out = req(params, "out");
    fs::create_directories(out);
    write_manifest(make_manifest(command, to_u64(params, "seed"), params),
                   out + "/manifest.json");
    if (command == "gen") run_gen(params);
    else if (command == "dataset") run_dataset(params);
    else if (command == "train") run_train(params);
    else if (command == "solve") run_solve(params);
    else if (command == "alns") run_alns(params);
    else if (command == "ablate") run_ablate(params);
    else if (command == "report") run_report(params);
    else throw std::runtime_error("unknown command '" + command + "' in manifest");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"learn-to-search vehicle routing toolkit"};
    app.require_subcommand(1);

    // common flag storage; each subcommand binds the subset it uses
    std::vector<std::string> instances, inputs;
    std::string gen_spec, out = "run", kind = "select", agent = "select", dataset_path;
    std::string config_name = "small", resume, select_ckpt, jump_ckpt, refs, variant = "full";
    std::string manifest_path, replay_out;
    std::uint64_t seed = 1;
    long long budget = 1000, steps = 0, ckpt_every = 500, traj_iters = 40;
    int jobs = 1, chains = 8, max_window = 12, starts = 4, max_targets = 4, wps = 2;
    int batch = 0, stagnation = 20, beam_width = 16, window_cap = 24;
    double val_fraction = 0.0;
    bool no_timing = false, random_models = false;
    std::string tiers = "0.1,1,2,3,4,5,10";

    auto add_common = [&](CLI::App* cmd, bool with_inputs) {
        cmd->add_option("--seed", seed, "base seed; per-instance streams derive from it");
        cmd->add_option("--out", out, "output directory")->capture_default_str();
        if (with_inputs) {
            auto* oi = cmd->add_option("--instances", instances, "instance JSON files");
            auto* og = cmd->add_option("--gen", gen_spec, "generate instances: n,count,variant");
            oi->excludes(og);
            og->excludes(oi);
            cmd->add_option("--jobs", jobs, "parallel instances")->capture_default_str();
        }
    };

    auto* c_gen = app.add_subcommand("gen", "write generated instances");
    c_gen->add_option("--gen", gen_spec, "n,count,variant")->required();
    c_gen->add_option("--seed", seed, "");
    c_gen->add_option("--out", out, "")->capture_default_str();

    auto* c_data = app.add_subcommand("dataset", "generate a training dataset");
    add_common(c_data, true);
    c_data->add_option("--kind", kind, "select|jump")->capture_default_str();
    c_data->add_option("--tiers", tiers, "perturbation gap tiers, percent")
        ->capture_default_str();
    c_data->add_option("--chains", chains, "chains per tier")->capture_default_str();
    c_data->add_option("--max-window", max_window, "window node cap")->capture_default_str();
    c_data->add_option("--starts", starts, "trajectories per instance (jump)")
        ->capture_default_str();
    c_data->add_option("--trajectory-iters", traj_iters, "destroy/repair steps per trajectory")
        ->capture_default_str();
    c_data->add_option("--max-targets", max_targets, "successor-matrix targets per sample")
        ->capture_default_str();
    c_data->add_option("--windows-per-start", wps, "windows sampled per trajectory")
        ->capture_default_str();

    auto* c_train = app.add_subcommand("train", "train an agent on a dataset");
    c_train->add_option("--dataset", dataset_path, "dataset file")->required();
    c_train->add_option("--agent", agent, "select|jump")->capture_default_str();
    c_train->add_option("--config", config_name, "small|full")->capture_default_str();
    c_train->add_option("--steps", steps, "total optimizer steps (0: per-agent default)");
    c_train->add_option("--batch", batch, "batch size (0: per-agent default)");
    c_train->add_option("--checkpoint-every", ckpt_every, "")->capture_default_str();
    c_train->add_option("--val-fraction", val_fraction, "")->capture_default_str();
    c_train->add_option("--checkpoint", resume, "resume from this checkpoint");
    c_train->add_option("--seed", seed, "");
    c_train->add_option("--out", out, "")->capture_default_str();

    auto* c_solve = app.add_subcommand("solve", "run the learned search");
    add_common(c_solve, true);
    c_solve->add_option("--select-checkpoint", select_ckpt, "");
    c_solve->add_option("--jump-checkpoint", jump_ckpt, "");
    c_solve->add_flag("--random-models", random_models, "use untrained agents");
    c_solve->add_option("--config", config_name, "model config for --random-models")
        ->capture_default_str();
    c_solve->add_option("--budget-iters", budget, "")->capture_default_str();
    c_solve->add_option("--stagnation", stagnation, "")->capture_default_str();
    c_solve->add_option("--beam", beam_width, "")->capture_default_str();
    c_solve->add_option("--window-cap", window_cap, "")->capture_default_str();
    c_solve->add_option("--variant", variant, "full|no_nsa|no_msa|no_jump")
        ->capture_default_str();
    c_solve->add_option("--refs", refs, "best-known objectives JSON (id -> objective)");
    c_solve->add_flag("--no-timing", no_timing, "zero elapsed columns for reproducibility");

    auto* c_alns = app.add_subcommand("alns", "run the destroy/repair baseline");
    add_common(c_alns, true);
    c_alns->add_option("--budget-iters", budget, "")->capture_default_str();
    c_alns->add_option("--refs", refs, "");
    c_alns->add_flag("--no-timing", no_timing, "");

    auto* c_ablate = app.add_subcommand("ablate", "run all four search variants");
    add_common(c_ablate, true);
    c_ablate->add_option("--select-checkpoint", select_ckpt, "")->required();
    c_ablate->add_option("--jump-checkpoint", jump_ckpt, "")->required();
    c_ablate->add_option("--budget-iters", budget, "")->capture_default_str();
    c_ablate->add_option("--stagnation", stagnation, "")->capture_default_str();
    c_ablate->add_option("--beam", beam_width, "")->capture_default_str();
    c_ablate->add_option("--window-cap", window_cap, "")->capture_default_str();
    c_ablate->add_option("--refs", refs, "");
    c_ablate->add_flag("--no-timing", no_timing, "");

    auto* c_report = app.add_subcommand("report", "aggregate result files");
    c_report->add_option("--inputs", inputs, "results.json files")->required();
    c_report->add_option("--seed", seed, "bootstrap seed");
    c_report->add_option("--out", out, "")->capture_default_str();

    auto* c_replay = app.add_subcommand("replay", "re-run a command from its manifest");
    c_replay->add_option("--manifest", manifest_path, "manifest.json of a previous run")
        ->required();
    c_replay->add_option("--out", replay_out, "redirect outputs (default: original directory)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (app.got_subcommand(c_replay)) {
            RunManifest m = read_manifest(manifest_path);
            if (!replay_out.empty()) m.params["out"] = replay_out;
            dispatch(m.command, m.params);
            return 0;
        }

        Params p;
        p["seed"] = std::to_string(seed);
        p["out"] = out;
        std::string command;
        if (app.got_subcommand(c_gen)) {
            command = "gen";
            p["gen"] = gen_spec;
        } else if (app.got_subcommand(c_data)) {
            command = "dataset";
            p["instances"] = join(instances, ';');
            p["gen"] = gen_spec;
            p["jobs"] = std::to_string(jobs);
            p["kind"] = kind;
            p["tiers"] = tiers;
            p["chains"] = std::to_string(chains);
            p["max-window"] = std::to_string(max_window);
            p["starts"] = std::to_string(starts);
            p["trajectory-iters"] = std::to_string(traj_iters);
            p["max-targets"] = std::to_string(max_targets);
            p["windows-per-start"] = std::to_string(wps);
        } else if (app.got_subcommand(c_train)) {
            command = "train";
            if (steps <= 0) steps = agent == "jump" ? 2500 : 5000;
            if (batch <= 0) batch = agent == "jump" ? 16 : 48;
            p["dataset"] = dataset_path;
            p["agent"] = agent;
            p["config"] = config_name;
            p["steps"] = std::to_string(steps);
            p["batch"] = std::to_string(batch);
            p["checkpoint-every"] = std::to_string(ckpt_every);
            p["val-fraction"] = std::to_string(val_fraction);
            p["resume"] = resume;
        } else if (app.got_subcommand(c_solve)) {
            command = "solve";
            if (!random_models && (select_ckpt.empty() || jump_ckpt.empty()))
                throw std::runtime_error(
                    "solve needs --select-checkpoint and --jump-checkpoint (or --random-models)");
            p["instances"] = join(instances, ';');
            p["gen"] = gen_spec;
            p["jobs"] = std::to_string(jobs);
            p["select-checkpoint"] = select_ckpt;
            p["jump-checkpoint"] = jump_ckpt;
            p["random-models"] = random_models ? "1" : "0";
            p["config"] = config_name;
            p["budget-iters"] = std::to_string(budget);
            p["stagnation"] = std::to_string(stagnation);
            p["beam"] = std::to_string(beam_width);
            p["window-cap"] = std::to_string(window_cap);
            p["variant"] = variant;
            p["refs"] = refs;
            p["no-timing"] = no_timing ? "1" : "0";
        } else if (app.got_subcommand(c_alns)) {
            command = "alns";
            p["instances"] = join(instances, ';');
            p["gen"] = gen_spec;
            p["jobs"] = std::to_string(jobs);
            p["budget-iters"] = std::to_string(budget);
            p["refs"] = refs;
            p["no-timing"] = no_timing ? "1" : "0";
        } else if (app.got_subcommand(c_ablate)) {
            command = "ablate";
            p["instances"] = join(instances, ';');
            p["gen"] = gen_spec;
            p["jobs"] = std::to_string(jobs);
            p["select-checkpoint"] = select_ckpt;
            p["jump-checkpoint"] = jump_ckpt;
            p["budget-iters"] = std::to_string(budget);
            p["stagnation"] = std::to_string(stagnation);
            p["beam"] = std::to_string(beam_width);
            p["window-cap"] = std::to_string(window_cap);
            p["refs"] = refs;
            p["no-timing"] = no_timing ? "1" : "0";
        } else if (app.got_subcommand(c_report)) {
            command = "report";
            p["inputs"] = join(inputs, ';');
        }
        dispatch(command, p);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
