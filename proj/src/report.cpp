#include "coagents/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include "coagents/rng.hpp"
#include "json.hpp"

namespace coagents {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "coagents-results";
constexpr int kVersion = 1;

}  // namespace

void write_records(const std::string& path, const std::string& method,
                   const std::vector<RunRecord>& records) {
    json arr = json::array();
    for (const RunRecord& r : records)
        arr.push_back(json{{"id", r.id},
                           {"objective", r.objective},
                           {"reference", r.reference},
                           {"feasible", r.feasible},
                           {"elapsed_ms", r.elapsed_ms},
                           {"checkpoints", r.checkpoints}});
    std::ofstream out(path);
    if (!out) throw std::runtime_error("report: cannot write " + path);
    out << json{{"format", kFormat}, {"version", kVersion}, {"method", method},
                {"records", arr}}
               .dump()
        << '\n';
    if (!out) throw std::runtime_error("report: short write to " + path);
}

std::vector<RunRecord> read_records(const std::string& path, std::string* method) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("report: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("report: " + path + ": " + e.what());
    }
    if (j.value("format", "") != kFormat)
        throw std::runtime_error("report: " + path + " is not a results file");
    if (j.value("version", 0) != kVersion)
        throw std::runtime_error("report: unsupported version in " + path);
    if (method) *method = j.value("method", "");
    std::vector<RunRecord> out;
    for (const auto& jr : j.at("records")) {
        RunRecord r;
        r.id = jr.at("id").get<std::string>();
        r.objective = jr.at("objective").get<double>();
        r.reference = jr.at("reference").get<double>();
        r.feasible = jr.at("feasible").get<bool>();
        r.elapsed_ms = jr.at("elapsed_ms").get<double>();
        r.checkpoints = jr.at("checkpoints").get<std::vector<double>>();
        out.push_back(std::move(r));
    }
    return out;
}

double gap_of(const RunRecord& r) {
    if (!(r.reference > 0.0)) throw std::invalid_argument("gap: no reference for " + r.id);
    return (r.objective - r.reference) / r.reference;
}

Aggregate aggregate(const std::vector<RunRecord>& records) {
    Aggregate a;
    a.count = static_cast<int>(records.size());
    int with_ref = 0;
    std::size_t cps = 0;
    for (const RunRecord& r : records) cps = std::max(cps, r.checkpoints.size());
    a.mean_checkpoints.assign(cps, 0.0);
    for (const RunRecord& r : records) {
        a.mean_obj += r.objective;
        a.mean_ms += r.elapsed_ms;
        a.total_ms += r.elapsed_ms;
        if (r.reference > 0.0) {
            a.mean_gap += gap_of(r);
            ++with_ref;
        }
        for (std::size_t i = 0; i < r.checkpoints.size(); ++i)
            a.mean_checkpoints[i] += r.checkpoints[i];
    }
    if (a.count > 0) {
        a.mean_obj /= a.count;
        a.mean_ms /= a.count;
        for (double& c : a.mean_checkpoints) c /= a.count;
    }
    a.mean_gap = with_ref > 0 ? a.mean_gap / with_ref : 0.0;
    return a;
}

BootstrapInterval paired_bootstrap(const std::vector<double>& a, const std::vector<double>& b,
                                   int resamples, std::uint64_t seed) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("bootstrap: need equal-length non-empty pairs");
    std::vector<double> diff(a.size());
    BootstrapInterval out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff[i] = a[i] - b[i];
        out.mean_diff += diff[i];
    }
    out.mean_diff /= static_cast<double>(diff.size());

    Rng rng(seed);
    std::vector<double> means(static_cast<std::size_t>(std::max(resamples, 1)));
    for (double& m : means) {
        double s = 0.0;
        for (std::size_t i = 0; i < diff.size(); ++i) s += diff[rng.index(diff.size())];
        m = s / static_cast<double>(diff.size());
    }
    std::sort(means.begin(), means.end());
    const auto lo_idx = static_cast<std::size_t>(0.025 * static_cast<double>(means.size() - 1));
    const auto hi_idx = static_cast<std::size_t>(
        std::ceil(0.975 * static_cast<double>(means.size() - 1)));
    out.lo = means[lo_idx];
    out.hi = means[hi_idx];
    return out;
}

std::string render_report(const std::vector<std::pair<std::string, std::vector<RunRecord>>>& runs,
                          std::uint64_t bootstrap_seed) {
    std::string text;
    char buf[256];
    auto line = [&text, &buf] { text += buf; };

    std::snprintf(buf, sizeof(buf), "%-10s %6s %12s %10s %12s %14s\n", "method", "count",
                  "mean_obj", "mean_gap", "mean_ms", "total_ms");
    line();
    for (const auto& [method, records] : runs) {
        const Aggregate a = aggregate(records);
        std::snprintf(buf, sizeof(buf), "%-10s %6d %12.4f %10.4f %12.2f %14.2f\n", method.c_str(),
                      a.count, a.mean_obj, a.mean_gap, a.mean_ms, a.total_ms);
        line();
    }

    for (const auto& [method, records] : runs) {
        const Aggregate a = aggregate(records);
        if (a.mean_checkpoints.empty()) continue;
        std::snprintf(buf, sizeof(buf), "\ncheckpoints %s:", method.c_str());
        line();
        for (std::size_t i = 0; i < a.mean_checkpoints.size(); ++i) {
            std::snprintf(buf, sizeof(buf), " %.1f=%.4f",
                          static_cast<double>(i + 1) / 10.0, a.mean_checkpoints[i]);
            line();
        }
        text += '\n';
    }

    // pairwise gap comparisons over shared instance ids
    for (std::size_t x = 0; x < runs.size(); ++x) {
        for (std::size_t y = x + 1; y < runs.size(); ++y) {
            std::map<std::string, double> gx;
            for (const RunRecord& r : runs[x].second)
                if (r.reference > 0.0) gx[r.id] = gap_of(r);
            std::vector<double> ga, gb;
            for (const RunRecord& r : runs[y].second) {
                const auto it = gx.find(r.id);
                if (it == gx.end() || !(r.reference > 0.0)) continue;
                ga.push_back(it->second);
                gb.push_back(gap_of(r));
            }
            if (ga.empty()) continue;
            const BootstrapInterval bi =
                paired_bootstrap(ga, gb, 2000, bootstrap_seed + x * 131 + y);
            std::snprintf(buf, sizeof(buf),
                          "\npaired %s vs %s over %zu instances: mean gap diff %+.4f "
                          "(95%% bootstrap [%+.4f, %+.4f])\n",
                          runs[x].first.c_str(), runs[y].first.c_str(), ga.size(), bi.mean_diff,
                          bi.lo, bi.hi);
            line();
        }
    }
    return text;
}

}  // namespace coagents
