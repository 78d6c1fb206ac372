#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace coagents {

// One solved instance as recorded by the solve/alns/ablate commands.
struct RunRecord {
    std::string id;          // instance file or generator tag
    double objective = 0.0;  // best feasible objective found
    double reference = 0.0;  // oracle / best-known objective (0 = unavailable)
    bool feasible = false;
    double elapsed_ms = 0.0;
    std::vector<double> checkpoints;  // best objective at 10 budget fractions
};

void write_records(const std::string& path, const std::string& method,
                   const std::vector<RunRecord>& records);
std::vector<RunRecord> read_records(const std::string& path, std::string* method = nullptr);

double gap_of(const RunRecord& r);  // (objective - reference) / reference

struct Aggregate {
    int count = 0;
    double mean_obj = 0.0;
    double mean_gap = 0.0;  // over records with a reference
    double mean_ms = 0.0;
    double total_ms = 0.0;
    std::vector<double> mean_checkpoints;
};

Aggregate aggregate(const std::vector<RunRecord>& records);

// 95% percentile interval for mean(a - b) from paired resampling
struct BootstrapInterval {
    double mean_diff = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

BootstrapInterval paired_bootstrap(const std::vector<double>& a, const std::vector<double>& b,
                                   int resamples, std::uint64_t seed);

// Plain-text tables for the report command. Methods are printed in the given
// order; pairwise sections appear when two methods share instance ids.
std::string render_report(const std::vector<std::pair<std::string, std::vector<RunRecord>>>& runs,
                          std::uint64_t bootstrap_seed);

}  // namespace coagents
