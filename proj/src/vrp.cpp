#include "coagents/vrp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace coagents {

using nlohmann::json;

std::string variant_name(Variant v) { return v == Variant::CVRP ? "cvrp" : "vrptw"; }

Variant variant_from_name(const std::string& s) {
    if (s == "cvrp") return Variant::CVRP;
    if (s == "vrptw") return Variant::VRPTW;
    throw std::invalid_argument("unknown variant '" + s + "' (expected cvrp or vrptw)");
}

ProblemInstance::ProblemInstance(Variant variant, int capacity, double depot_x, double depot_y,
                                 double depot_early, double depot_late,
                                 std::vector<Customer> customers)
    : variant_(variant),
      capacity_(capacity),
      depot_x_(depot_x),
      depot_y_(depot_y),
      depot_early_(depot_early),
      depot_late_(depot_late),
      customers_(std::move(customers)) {
    if (capacity_ <= 0) throw std::invalid_argument("instance: capacity must be positive");
    if (customers_.empty()) throw std::invalid_argument("instance: needs at least one customer");
    for (std::size_t i = 0; i < customers_.size(); ++i) {
        const Customer& c = customers_[i];
        if (c.id != static_cast<int>(i) + 1)
            throw std::invalid_argument("instance: customer ids must be contiguous 1..n (got id " +
                                        std::to_string(c.id) + " at position " + std::to_string(i) + ")");
        if (!std::isfinite(c.x) || !std::isfinite(c.y))
            throw std::invalid_argument("instance: non-finite coordinates for customer " +
                                        std::to_string(c.id));
        if (c.demand < 0)
            throw std::invalid_argument("instance: negative demand for customer " + std::to_string(c.id));
        if (c.demand > capacity_)
            throw std::invalid_argument("instance: demand of customer " + std::to_string(c.id) +
                                        " exceeds vehicle capacity");
        if (variant_ == Variant::VRPTW && c.tw_late < c.tw_early)
            throw std::invalid_argument("instance: empty time window for customer " + std::to_string(c.id));
        total_demand_ += c.demand;
    }

    const int m = n() + 1;
    dist_.assign(static_cast<std::size_t>(m) * m, 0.0);
    auto px = [&](int i) { return i == 0 ? depot_x_ : customers_[i - 1].x; };
    auto py = [&](int i) { return i == 0 ? depot_y_ : customers_[i - 1].y; };
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
            const double d = std::hypot(px(i) - px(j), py(i) - py(j));
            dist_[static_cast<std::size_t>(i) * m + j] = d;
            dist_[static_cast<std::size_t>(j) * m + i] = d;
        }
    for (int i = 1; i <= n(); ++i) depot_round_trips_ += 2.0 * dist(0, i);
}

const Customer& ProblemInstance::customer(int id) const {
    if (id < 1 || id > n())
        throw std::invalid_argument("instance: unknown customer id " + std::to_string(id));
    return customers_[id - 1];
}

std::pair<double, FeasibilityReport> evaluate(const std::vector<std::vector<int>>& routes,
                                              const ProblemInstance& inst) {
    FeasibilityReport rep;
    double objective = 0.0;
    std::vector<int> seen(inst.n() + 1, 0);

    for (const auto& route : routes) {
        int load = 0;
        double dcost = 0.0, lateness = 0.0;
        int prev = 0, violations = 0;
        double t = inst.depot_early();
        for (int id : route) {
            const Customer& c = inst.customer(id);  // throws on unknown id
            ++seen[id];
            load += c.demand;
            dcost += inst.dist(prev, id);
            if (inst.variant() == Variant::VRPTW) {
                const double arrival = t + inst.dist(prev, id);
                if (arrival > c.tw_late) {
                    ++violations;
                    lateness += arrival - c.tw_late;
                }
                t = std::max(arrival, c.tw_early) + c.service;
            }
            prev = id;
        }
        dcost += inst.dist(prev, 0);
        if (inst.variant() == Variant::VRPTW) {
            const double back = t + inst.dist(prev, 0);
            if (back > inst.depot_late()) {
                ++violations;
                lateness += back - inst.depot_late();
            }
        }
        objective += dcost;
        rep.tw_violation_count += violations;
        rep.total_lateness += lateness;
        rep.capacity_excess.push_back(std::max(0.0, static_cast<double>(load - inst.capacity())));
        rep.route_load.push_back(load);
        rep.route_lateness.push_back(lateness);
    }

    for (int id = 1; id <= inst.n(); ++id) {
        if (seen[id] == 0) rep.uncovered.push_back(id);
        if (seen[id] > 1) rep.duplicated.push_back(id);
    }
    bool cap_ok = true;
    for (double e : rep.capacity_excess) cap_ok = cap_ok && e == 0.0;
    rep.is_feasible = cap_ok && rep.tw_violation_count == 0 && rep.uncovered.empty() &&
                      rep.duplicated.empty();
    return {objective, rep};
}

std::uint64_t routes_fingerprint(const std::vector<std::vector<int>>& routes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over ids with route separators
    auto mix = [&h](std::uint64_t v) {
        h ^= v;
        h *= 0x100000001b3ULL;
    };
    for (const auto& r : routes) {
        for (int id : r) mix(static_cast<std::uint64_t>(id) + 1);
        mix(0);
    }
    return h;
}

Solution make_solution(std::vector<std::vector<int>> routes, const ProblemInstance& inst) {
    routes.erase(std::remove_if(routes.begin(), routes.end(),
                                [](const std::vector<int>& r) { return r.empty(); }),
                 routes.end());
    Solution s;
    auto [obj, rep] = evaluate(routes, inst);
    s.routes = std::move(routes);
    s.objective = obj;
    s.report = std::move(rep);
    s.fingerprint = routes_fingerprint(s.routes);
    return s;
}

double search_cost(const Solution& s) {
    double excess = 0.0;
    for (double e : s.report.capacity_excess) excess += e;
    return s.objective + kInfeasiblePenalty * (s.report.total_lateness + excess);
}

std::vector<std::pair<int, int>> decision_arcs(const Solution& s) {
    std::vector<std::pair<int, int>> arcs;
    for (const auto& r : s.routes) {
        int prev = 0;
        for (int id : r) {
            arcs.emplace_back(prev, id);
            prev = id;
        }
        arcs.emplace_back(prev, 0);
    }
    return arcs;
}

int arc_overlap(const std::vector<std::pair<int, int>>& a,
                const std::vector<std::pair<int, int>>& b) {
    std::vector<std::pair<int, int>> sa = a, sb = b;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    std::vector<std::pair<int, int>> inter;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(inter));
    return static_cast<int>(inter.size());
}

double penalized_objective(const Solution& s,
                           const std::vector<std::pair<int, int>>& protected_arcs, double lambda) {
    return s.objective + lambda * arc_overlap(decision_arcs(s), protected_arcs);
}

namespace {
// tiered so small instances still need a handful of routes
int capacity_for(int n) {
    if (n >= 50) return 40;
    if (n >= 20) return 30;
    return std::max(10, static_cast<int>(std::ceil(5.0 * n / 3.0)));
}
}  // namespace

ProblemInstance generate_instance(int n, Variant variant, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("generate_instance: n must be >= 1");
    Rng rng(seed);
    const double depot_x = rng.uniform();
    const double depot_y = rng.uniform();
    std::vector<Customer> cs(n);
    for (int i = 0; i < n; ++i) {
        Customer& c = cs[i];
        c.id = i + 1;
        c.x = rng.uniform();
        c.y = rng.uniform();
        c.demand = static_cast<int>(rng.uniform_int(1, 9));
    }
    const int cap = capacity_for(n);

    double depot_early = 0.0, depot_late = 0.0;
    if (variant == Variant::VRPTW) {
        const double horizon = 4.6, service = 0.2;
        depot_late = horizon;
        for (Customer& c : cs) {
            c.service = service;
            const double out = std::hypot(c.x - depot_x, c.y - depot_y);
            const double latest_start = horizon - out - service;  // leaves room to return
            const double center = rng.uniform(out, latest_start);
            const double half = rng.uniform(0.15, 0.45);
            c.tw_early = std::max(0.0, center - half);
            c.tw_late = std::min(latest_start, center + half);
        }
    }
    return ProblemInstance(variant, cap, depot_x, depot_y, depot_early, depot_late, std::move(cs));
}

namespace {

const json& need(const json& j, const char* key, const std::string& origin) {
    auto it = j.find(key);
    if (it == j.end())
        throw std::runtime_error(origin + ": missing key '" + key + "'");
    return *it;
}

}  // namespace

std::string instance_to_json(const ProblemInstance& inst) {
    json j;
    j["variant"] = variant_name(inst.variant());
    j["capacity"] = inst.capacity();
    json depot{{"x", inst.depot_x()}, {"y", inst.depot_y()}};
    if (inst.variant() == Variant::VRPTW) {
        depot["e"] = inst.depot_early();
        depot["l"] = inst.depot_late();
    }
    j["depot"] = depot;
    json customers = json::array();
    for (const Customer& c : inst.customers()) {
        json jc{{"id", c.id}, {"x", c.x}, {"y", c.y}, {"demand", c.demand}};
        if (inst.variant() == Variant::VRPTW) {
            jc["e"] = c.tw_early;
            jc["l"] = c.tw_late;
            jc["service"] = c.service;
        }
        customers.push_back(jc);
    }
    j["customers"] = customers;
    return j.dump(2) + "\n";
}

ProblemInstance instance_from_json(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(origin + ": " + e.what());
    }
    const Variant variant = variant_from_name(need(j, "variant", origin).get<std::string>());
    const int capacity = need(j, "capacity", origin).get<int>();
    const json& depot = need(j, "depot", origin);
    const double dx = need(depot, "x", origin + " depot").get<double>();
    const double dy = need(depot, "y", origin + " depot").get<double>();
    double de = 0.0, dl = 0.0;
    if (variant == Variant::VRPTW) {
        de = need(depot, "e", origin + " depot").get<double>();
        dl = need(depot, "l", origin + " depot").get<double>();
    }
    std::vector<Customer> cs;
    for (const json& jc : need(j, "customers", origin)) {
        Customer c;
        const std::string where = origin + " customer " + std::to_string(cs.size());
        c.id = need(jc, "id", where).get<int>();
        c.x = need(jc, "x", where).get<double>();
        c.y = need(jc, "y", where).get<double>();
        c.demand = need(jc, "demand", where).get<int>();
        if (variant == Variant::VRPTW) {
            c.tw_early = need(jc, "e", where).get<double>();
            c.tw_late = need(jc, "l", where).get<double>();
            c.service = need(jc, "service", where).get<double>();
        }
        cs.push_back(c);
    }
    try {
        return ProblemInstance(variant, capacity, dx, dy, de, dl, std::move(cs));
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(origin + ": " + e.what());
    }
}

ProblemInstance read_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open instance file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return instance_from_json(ss.str(), path);
}

void write_instance(const ProblemInstance& inst, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write instance file '" + path + "'");
    out << instance_to_json(inst);
}

std::string solution_to_json(const Solution& s) {
    json j;
    j["routes"] = s.routes;
    j["objective"] = s.objective;
    j["feasible"] = s.report.is_feasible;
    return j.dump(2) + "\n";
}

Solution solution_from_json(const std::string& text, const ProblemInstance& inst) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("solution: ") + e.what());
    }
    std::vector<std::vector<int>> routes =
        need(j, "routes", "solution").get<std::vector<std::vector<int>>>();
    return make_solution(std::move(routes), inst);
}

}  // namespace coagents
