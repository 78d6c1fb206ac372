#include "coagents/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include "coagents/moves.hpp"
#include "json.hpp"

namespace coagents::nn {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "coagents-checkpoint";
constexpr int kVersion = 1;

json kind_table() {
    json arr = json::array();
    for (int k = 0; k < kNumMoveKinds; ++k) arr.push_back(move_kind_name(static_cast<MoveKind>(k)));
    arr.push_back("Jump");
    return arr;
}

json config_json(const ModelConfig& c) {
    return json{{"d_u", c.d_u},           {"d_v", c.d_v},
                {"d_z", c.d_z},           {"d_e", c.d_e},
                {"d_pos", c.d_pos},       {"d_pos_v", c.d_pos_v},
                {"layers", c.layers},     {"tf_heads", c.tf_heads},
                {"tf_hidden", c.tf_hidden}, {"e2e_heads", c.e2e_heads},
                {"jump_heads", c.jump_heads}};
}

ModelConfig config_from(const json& j, const std::string& origin) {
    auto need = [&](const char* key) -> const json& {
        auto it = j.find(key);
        if (it == j.end())
            throw std::runtime_error(origin + ": config is missing key '" + std::string(key) + "'");
        return *it;
    };
    ModelConfig c;
    c.d_u = need("d_u").get<std::size_t>();
    c.d_v = need("d_v").get<std::size_t>();
    c.d_z = need("d_z").get<std::size_t>();
    c.d_e = need("d_e").get<std::size_t>();
    c.d_pos = need("d_pos").get<std::size_t>();
    c.d_pos_v = need("d_pos_v").get<std::size_t>();
    c.layers = need("layers").get<std::size_t>();
    c.tf_heads = need("tf_heads").get<std::size_t>();
    c.tf_hidden = need("tf_hidden").get<std::size_t>();
    c.e2e_heads = need("e2e_heads").get<std::size_t>();
    c.jump_heads = need("jump_heads").get<std::size_t>();
    return c;
}

json moments_json(const std::map<std::string, std::vector<double>>& m) {
    json out = json::object();
    for (const auto& [name, buf] : m) out[name] = buf;
    return out;
}

std::map<std::string, std::vector<double>> moments_from(const json& j) {
    std::map<std::string, std::vector<double>> out;
    for (auto it = j.begin(); it != j.end(); ++it)
        out.emplace(it.key(), it.value().get<std::vector<double>>());
    return out;
}

}  // namespace

std::string model_config_to_json(const ModelConfig& cfg) { return config_json(cfg).dump(); }

ModelConfig model_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("model config: ") + e.what());
    }
    return config_from(j, "model config");
}

void save_checkpoint(const std::string& path, const Model& model, const OptimizerState* opt) {
    json j;
    j["format"] = kFormat;
    j["version"] = kVersion;
    j["config"] = config_json(model.config());
    j["move_kinds"] = kind_table();
    json params = json::object();
    for (const auto& [name, t] : model.params())
        params[name] = json{{"shape", t.shape()}, {"data", t.value()}};
    j["params"] = std::move(params);
    if (opt) {
        j["optimizer"] =
            json{{"step", opt->step}, {"m", moments_json(opt->m)}, {"v", moments_json(opt->v)}};
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot write '" + path + "'");
    out << j.dump() << '\n';
    if (!out) throw std::runtime_error("checkpoint: write to '" + path + "' failed");
}

Model load_checkpoint(const std::string& path, OptimizerState* opt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("checkpoint '" + path + "': " + e.what());
    }
    if (j.value("format", "") != kFormat)
        throw std::runtime_error("checkpoint '" + path + "': unrecognized format");
    if (j.value("version", -1) != kVersion)
        throw std::runtime_error("checkpoint '" + path + "': unsupported version");
    if (j.at("move_kinds") != kind_table())
        throw std::runtime_error("checkpoint '" + path +
                                 "': move-kind table does not match this build");

    Model model(config_from(j.at("config"), "checkpoint '" + path + "'"), 0);
    std::map<std::string, std::vector<double>> vals;
    const json& params = j.at("params");
    for (auto it = params.begin(); it != params.end(); ++it)
        vals.emplace(it.key(), it.value().at("data").get<std::vector<double>>());
    model.load_values(vals);

    if (opt) {
        *opt = OptimizerState{};
        if (j.contains("optimizer")) {
            const json& o = j.at("optimizer");
            opt->step = o.at("step").get<long long>();
            opt->m = moments_from(o.at("m"));
            opt->v = moments_from(o.at("v"));
        }
    }
    return model;
}

}  // namespace coagents::nn
