#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "coagents/checkpoint.hpp"
#include "coagents/manifest.hpp"
#include "coagents/model.hpp"
#include "coagents/report.hpp"
#include "doctest.h"

using namespace coagents;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    const fs::path dir = fs::temp_directory_path() / "coagents_artifacts_test";
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("run manifests round-trip through json files") {
    const RunManifest m = make_manifest(
        "solve", 42, {{"budget_iters", "100"}, {"variant", "full"}, {"out", "runs/x"}});
    CHECK(m.command == "solve");
    CHECK(m.version == kVersionString);
    CHECK(m.seed == 42);
    // ISO-8601 UTC: 2026-08-25T12:34:56Z
    REQUIRE(m.timestamp.size() == 20);
    CHECK(m.timestamp[4] == '-');
    CHECK(m.timestamp[10] == 'T');
    CHECK(m.timestamp.back() == 'Z');

    const fs::path path = scratch_dir() / "manifest.json";
    write_manifest(m, path.string());
    const RunManifest back = read_manifest(path.string());
    CHECK(back.command == m.command);
    CHECK(back.version == m.version);
    CHECK(back.seed == m.seed);
    CHECK(back.timestamp == m.timestamp);
    CHECK(back.params == m.params);

    CHECK_THROWS_AS(read_manifest((scratch_dir() / "nope.json").string()), std::runtime_error);
    CHECK_THROWS_AS(manifest_from_json("{\"command\":1}", "inline"), std::runtime_error);
    fs::remove_all(scratch_dir());
}

TEST_CASE("result records round-trip with their method name") {
    std::vector<RunRecord> recs;
    RunRecord a;
    a.id = "gen:7:0";
    a.objective = 3.25;
    a.reference = 3.0;
    a.feasible = true;
    a.elapsed_ms = 12.5;
    a.checkpoints = {4.0, 3.5, 3.25};
    recs.push_back(a);
    RunRecord b;
    b.id = "gen:7:1";
    b.objective = 2.0;
    b.feasible = false;
    recs.push_back(b);

    const fs::path path = scratch_dir() / "results.json";
    write_records(path.string(), "alns", recs);
    std::string method;
    const auto back = read_records(path.string(), &method);
    CHECK(method == "alns");
    REQUIRE(back.size() == 2);
    CHECK(back[0].id == a.id);
    CHECK(back[0].objective == a.objective);
    CHECK(back[0].reference == a.reference);
    CHECK(back[0].feasible == a.feasible);
    CHECK(back[0].elapsed_ms == a.elapsed_ms);
    CHECK(back[0].checkpoints == a.checkpoints);
    CHECK(back[1].reference == 0.0);
    CHECK(back[1].checkpoints.empty());

    CHECK_THROWS_AS(read_records((scratch_dir() / "missing.json").string(), nullptr),
                    std::runtime_error);
    const fs::path junk = scratch_dir() / "junk.json";
    {
        std::FILE* f = std::fopen(junk.string().c_str(), "w");
        std::fputs("{\"format\":\"other\"}", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(read_records(junk.string(), nullptr), std::runtime_error);
    fs::remove_all(scratch_dir());
}

TEST_CASE("gap and aggregate compute the obvious hand values") {
    RunRecord r;
    r.id = "x";
    r.objective = 3.3;
    r.reference = 3.0;
    CHECK(gap_of(r) == doctest::Approx(0.1).epsilon(1e-12));
    r.reference = 0.0;
    CHECK_THROWS_AS(gap_of(r), std::invalid_argument);

    std::vector<RunRecord> recs(2);
    recs[0].objective = 2.0;
    recs[0].reference = 1.0;  // gap 1.0
    recs[0].elapsed_ms = 10.0;
    recs[0].checkpoints = {4.0, 2.0};
    recs[1].objective = 4.0;  // no reference: skipped in mean_gap
    recs[1].elapsed_ms = 30.0;
    recs[1].checkpoints = {6.0, 4.0};
    const Aggregate agg = aggregate(recs);
    CHECK(agg.count == 2);
    CHECK(agg.mean_obj == doctest::Approx(3.0));
    CHECK(agg.mean_gap == doctest::Approx(1.0));
    CHECK(agg.mean_ms == doctest::Approx(20.0));
    CHECK(agg.total_ms == doctest::Approx(40.0));
    REQUIRE(agg.mean_checkpoints.size() == 2);
    CHECK(agg.mean_checkpoints[0] == doctest::Approx(5.0));
    CHECK(agg.mean_checkpoints[1] == doctest::Approx(3.0));

    CHECK(aggregate({}).count == 0);
}

TEST_CASE("paired bootstrap collapses for constant differences") {
    const std::vector<double> base{1.0, 2.5, 3.0, 4.25, 0.5, 6.0};

    const BootstrapInterval same = paired_bootstrap(base, base, 500, 9);
    CHECK(same.mean_diff == 0.0);
    CHECK(same.lo == 0.0);
    CHECK(same.hi == 0.0);

    std::vector<double> shifted = base;
    for (double& x : shifted) x += 0.75;
    const BootstrapInterval up = paired_bootstrap(shifted, base, 500, 9);
    CHECK(up.mean_diff == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(up.lo == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(up.hi == doctest::Approx(0.75).epsilon(1e-12));

    CHECK_THROWS_AS(paired_bootstrap({1.0}, {1.0, 2.0}, 10, 1), std::invalid_argument);
    CHECK_THROWS_AS(paired_bootstrap({}, {}, 10, 1), std::invalid_argument);
}

TEST_CASE("rendered report lists methods and pairs shared instances") {
    auto rec = [](const std::string& id, double obj, double ref) {
        RunRecord r;
        r.id = id;
        r.objective = obj;
        r.reference = ref;
        r.feasible = true;
        r.checkpoints = {obj + 1.0, obj};
        return r;
    };
    const std::vector<RunRecord> ours{rec("i0", 3.1, 3.0), rec("i1", 4.4, 4.0)};
    const std::vector<RunRecord> theirs{rec("i0", 3.3, 3.0), rec("i1", 4.0, 4.0)};
    const std::vector<RunRecord> disjoint{rec("z9", 5.5, 5.0)};

    const std::string text = render_report({{"ours", ours}, {"theirs", theirs}}, 7);
    CHECK(text.find("ours") != std::string::npos);
    CHECK(text.find("theirs") != std::string::npos);
    CHECK(text.find("checkpoints ours:") != std::string::npos);
    CHECK(text.find("paired ours vs theirs over 2 instances") != std::string::npos);

    const std::string no_pair = render_report({{"ours", ours}, {"other", disjoint}}, 7);
    CHECK(no_pair.find("paired") == std::string::npos);

    // deterministic for a fixed bootstrap seed
    CHECK(render_report({{"ours", ours}, {"theirs", theirs}}, 7) == text);
}

TEST_CASE("model checkpoints restore weights and optimizer state") {
    nn::ModelConfig cfg = nn::ModelConfig::small();
    cfg.layers = 1;
    nn::Model model(cfg, 314);

    nn::OptimizerState opt;
    opt.step = 17;
    for (const auto& [name, vals] : model.values()) {
        opt.m[name] = std::vector<double>(vals.size(), 0.125);
        opt.v[name] = std::vector<double>(vals.size(), 0.25);
    }

    const fs::path path = scratch_dir() / "model.ckpt.json";
    save_checkpoint(path.string(), model, &opt);

    nn::OptimizerState got_opt;
    const nn::Model back = nn::load_checkpoint(path.string(), &got_opt);
    CHECK(back.config().d_z == cfg.d_z);
    CHECK(back.config().layers == cfg.layers);
    CHECK(back.values() == model.values());
    CHECK(got_opt.step == 17);
    CHECK(got_opt.m == opt.m);
    CHECK(got_opt.v == opt.v);

    // without the optional block the state comes back empty
    save_checkpoint(path.string(), model);
    nn::OptimizerState cleared;
    cleared.step = 99;
    (void)nn::load_checkpoint(path.string(), &cleared);
    CHECK(cleared.step == 0);
    CHECK(cleared.m.empty());

    CHECK_THROWS_AS(nn::load_checkpoint((scratch_dir() / "void.json").string()),
                    std::runtime_error);
    fs::remove_all(scratch_dir());
}

TEST_CASE("model config json keeps every field") {
    nn::ModelConfig cfg = nn::ModelConfig::full();
    cfg.layers = 3;
    cfg.jump_heads = 4;
    const nn::ModelConfig back = nn::model_config_from_json(nn::model_config_to_json(cfg));
    CHECK(back.d_u == cfg.d_u);
    CHECK(back.d_v == cfg.d_v);
    CHECK(back.d_z == cfg.d_z);
    CHECK(back.d_e == cfg.d_e);
    CHECK(back.d_pos == cfg.d_pos);
    CHECK(back.d_pos_v == cfg.d_pos_v);
    CHECK(back.layers == cfg.layers);
    CHECK(back.tf_heads == cfg.tf_heads);
    CHECK(back.tf_hidden == cfg.tf_hidden);
    CHECK(back.e2e_heads == cfg.e2e_heads);
    CHECK(back.jump_heads == cfg.jump_heads);
}
