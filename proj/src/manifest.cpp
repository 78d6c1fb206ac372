#include "coagents/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace coagents {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "coagents-manifest";
constexpr int kVersion = 1;

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

}  // namespace

RunManifest make_manifest(const std::string& command, std::uint64_t seed,
                          std::map<std::string, std::string> params) {
    RunManifest m;
    m.command = command;
    m.version = kVersionString;
    m.seed = seed;
    m.timestamp = utc_now();
    m.params = std::move(params);
    return m;
}

std::string manifest_to_json(const RunManifest& m) {
    const json j{{"format", kFormat},    {"version", kVersion}, {"command", m.command},
                 {"code_version", m.version}, {"seed", m.seed},      {"timestamp", m.timestamp},
                 {"params", m.params}};
    return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::runtime_error("manifest: " + origin + ": " + e.what());
    }
    if (j.value("format", "") != kFormat)
        throw std::runtime_error("manifest: " + origin + " is not a run manifest");
    if (j.value("version", 0) != kVersion)
        throw std::runtime_error("manifest: unsupported version in " + origin);
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.version = j.at("code_version").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.timestamp = j.at("timestamp").get<std::string>();
    m.params = j.at("params").get<std::map<std::string, std::string>>();
    return m;
}

void write_manifest(const RunManifest& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("manifest: cannot write " + path);
    out << manifest_to_json(m);
    if (!out) throw std::runtime_error("manifest: short write to " + path);
}

RunManifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("manifest: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return manifest_from_json(text, path);
}

}  // namespace coagents
