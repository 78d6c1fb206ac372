#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace coagents {

inline constexpr const char* kVersionString = "0.1.0";

// Snapshot of one CLI run: the resolved parameter set plus provenance. The
// params map is fully explicit (defaults included) so a run can be replayed
// from the manifest alone; the timestamp is informational and excluded from
// reproducibility comparisons.
struct RunManifest {
    std::string command;
    std::string version;
    std::uint64_t seed = 0;
    std::string timestamp;  // ISO-8601 UTC
    std::map<std::string, std::string> params;
};

RunManifest make_manifest(const std::string& command, std::uint64_t seed,
                          std::map<std::string, std::string> params);

std::string manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const std::string& text, const std::string& origin);

void write_manifest(const RunManifest& m, const std::string& path);
RunManifest read_manifest(const std::string& path);

}  // namespace coagents
