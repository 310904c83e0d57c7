#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "binder/executor.hpp"
#include "binder/scenario_gen.hpp"

namespace binder::harness {

struct SuiteSpec {
    std::string name = "suite";
    std::vector<scenario::Scenario> scenarios;
    std::vector<executor::Variant> variants;
    bool strip_events = false;  // perturbation toggle
    int jobs = 1;
    std::string trace_dir;      // per-episode NDJSON when set
};

struct EpisodeRow {
    std::string scenario;
    std::string variant;
    uint64_t seed = 0;
    int task_size = 0;
    uint64_t fairness_hash = 0;
    std::string termination;
    long motion_ticks = 0, reconstruct_ticks = 0, manipulation_ticks = 0;
    int replans = 0, adjusts = 0;
    metrics::EpisodeResult result;
};

// Per-subgoal stage flows through navigation -> manipulation -> placing.
struct FailureTaxonomyReport {
    long subgoals = 0;
    long nav_entered = 0, nav_success = 0;
    long manip_entered = 0, manip_success = 0;
    long place_entered = 0, place_success = 0;
    std::map<std::string, long> failure_counts;

    bool flow_conserved() const {
        long nav_failed = 0, manip_failed = 0, place_failed = 0;
        for (const auto& [name, count] : failure_counts) {
            if (name.rfind("nav_", 0) == 0) nav_failed += count;
            if (name.rfind("manip_", 0) == 0) manip_failed += count;
            if (name.rfind("place_", 0) == 0) place_failed += count;
        }
        return nav_entered == nav_success + nav_failed &&
               manip_entered == manip_success + manip_failed &&
               place_entered == place_success + place_failed &&
               nav_success == manip_entered && manip_success == place_entered;
    }
};

// Subgoal flows follow the stage of the recorded failure class: a subgoal
// whose object was never detected counts as a manipulation-stage exit
// (grasping never attempted), matching the trial-flow convention.
inline FailureTaxonomyReport build_taxonomy(std::span<const EpisodeRow> rows) {
    FailureTaxonomyReport t;
    for (const auto& row : rows) {
        for (const auto& sg : row.result.subgoals) {
            ++t.subgoals;
            bool attempted = sg.reached_object || sg.grasped || sg.success ||
                             sg.failure != metrics::FailureClass::none || sg.agent_path_len > 0;
            if (!attempted) continue;
            metrics::FailureClass failure = sg.failure;
            if (!sg.success && failure == metrics::FailureClass::none)
                failure = metrics::FailureClass::nav_wrong_localization;
            std::string cls = metrics::failure_class_name(failure);

            ++t.nav_entered;
            if (cls.rfind("nav_", 0) == 0) {
                ++t.failure_counts[cls];
                continue;
            }
            ++t.nav_success;
            ++t.manip_entered;
            if (cls.rfind("manip_", 0) == 0) {
                ++t.failure_counts[cls];
                continue;
            }
            ++t.manip_success;
            ++t.place_entered;
            if (cls.rfind("place_", 0) == 0) {
                ++t.failure_counts[cls];
                continue;
            }
            ++t.place_success;
        }
    }
    return t;
}

struct SuiteResult {
    std::string name;
    std::vector<EpisodeRow> rows;
    // keyed "variant" and "variant|taskN"
    std::map<std::string, metrics::MetricsSummary> summaries;
    std::map<std::string, FailureTaxonomyReport> taxonomies;  // per variant
    bool fairness_ok = true;

    metrics::MetricsSummary summary_for(const std::string& variant, int task_size = 0) const {
        std::string key = task_size > 0 ? variant + "|task" + std::to_string(task_size) : variant;
        auto it = summaries.find(key);
        return it == summaries.end() ? metrics::MetricsSummary{} : it->second;
    }
};

namespace detail {

inline void write_atomic(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        os << content;
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace detail

// Every (scenario, variant) pair executed with identical inputs per scenario;
// aggregation is order-independent and episodes may run in parallel.
inline SuiteResult run_suite(const SuiteSpec& spec, const Params& params) {
    SuiteResult res;
    res.name = spec.name;

    std::vector<scenario::Scenario> scenarios = spec.scenarios;
    if (spec.strip_events)
        for (auto& s : scenarios) s.events.clear();

    struct Job {
        const scenario::Scenario* sc;
        executor::Variant variant;
    };
    std::vector<Job> jobs;
    for (const auto& sc : scenarios)
        for (auto v : spec.variants) jobs.push_back({&sc, v});
    res.rows.resize(jobs.size());

    auto run_one = [&](size_t i) {
        const Job& job = jobs[i];
        executor::EpisodeLog log;
        auto result =
            executor::run_episode(*job.sc, job.sc->instruction, job.variant, job.sc->seed, params, &log);
        EpisodeRow row;
        row.scenario = job.sc->name;
        row.variant = executor::variant_name(job.variant);
        row.seed = job.sc->seed;
        row.task_size = static_cast<int>(job.sc->instruction.subgoals.size());
        row.fairness_hash = log.fairness_hash;
        row.termination = log.termination;
        row.motion_ticks = log.motion_ticks;
        row.reconstruct_ticks = log.reconstruct_ticks;
        row.manipulation_ticks = log.manipulation_ticks;
        row.replans = log.replans;
        row.adjusts = log.adjusts;
        row.result = result;
        res.rows[i] = std::move(row);
        if (!spec.trace_dir.empty()) {
            std::filesystem::create_directories(spec.trace_dir);
            std::string fname = spec.trace_dir + "/" + job.sc->name + "_" +
                                executor::variant_name(job.variant) + ".ndjson";
            detail::write_atomic(fname, log.ndjson());
        }
    };

    int jobs_n = std::max(1, spec.jobs);
    if (jobs_n == 1) {
        for (size_t i = 0; i < jobs.size(); ++i) run_one(i);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> workers;
        for (int t = 0; t < jobs_n; ++t)
            workers.emplace_back([&]() {
                for (size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) run_one(i);
            });
        for (auto& w : workers) w.join();
    }

    // fairness: every variant saw the same scenario bytes, instruction, seed
    std::map<std::string, uint64_t> hash_by_scenario;
    for (const auto& row : res.rows) {
        auto [it, inserted] = hash_by_scenario.emplace(row.scenario, row.fairness_hash);
        if (!inserted && it->second != row.fairness_hash) res.fairness_ok = false;
    }

    std::map<std::string, std::vector<metrics::EpisodeResult>> grouped;
    std::map<std::string, std::vector<EpisodeRow>> rows_by_variant;
    for (const auto& row : res.rows) {
        grouped[row.variant].push_back(row.result);
        grouped[row.variant + "|task" + std::to_string(row.task_size)].push_back(row.result);
        rows_by_variant[row.variant].push_back(row);
    }
    for (const auto& [key, results] : grouped) res.summaries[key] = metrics::aggregate(results);
    for (const auto& [variant, rows] : rows_by_variant)
        res.taxonomies[variant] = build_taxonomy(rows);
    return res;
}

// --- reports ------------------------------------------------------------------

inline nlohmann::json suite_summary_json(const SuiteResult& res) {
    nlohmann::json j;
    j["suite"] = res.name;
    j["fairness_ok"] = res.fairness_ok;
    nlohmann::json summaries = nlohmann::json::object();
    for (const auto& [key, m] : res.summaries)
        summaries[key] = {{"SR", m.sr},           {"PSR", m.psr},
                          {"SPL", m.spl},         {"PSPL", m.pspl},
                          {"avg_ticks", m.avg_time_ticks}, {"avg_path_len", m.avg_path_len},
                          {"episodes", m.episodes}, {"successes", m.successes}};
    j["summaries"] = summaries;
    nlohmann::json taxonomies = nlohmann::json::object();
    for (const auto& [variant, t] : res.taxonomies) {
        nlohmann::json counts = nlohmann::json::object();
        for (const auto& [cls, n] : t.failure_counts) counts[cls] = n;
        taxonomies[variant] = {{"subgoals", t.subgoals},
                               {"nav_entered", t.nav_entered},
                               {"nav_success", t.nav_success},
                               {"manip_entered", t.manip_entered},
                               {"manip_success", t.manip_success},
                               {"place_entered", t.place_entered},
                               {"place_success", t.place_success},
                               {"flow_conserved", t.flow_conserved()},
                               {"failures", counts}};
    }
    j["taxonomies"] = taxonomies;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : res.rows)
        rows.push_back({{"scenario", r.scenario},
                        {"variant", r.variant},
                        {"seed", r.seed},
                        {"task_size", r.task_size},
                        {"fairness_hash", r.fairness_hash},
                        {"termination", r.termination},
                        {"ticks", r.result.total_ticks},
                        {"path_len", r.result.total_path_len},
                        {"success", r.result.full_success()},
                        {"psr", r.result.subgoal_fraction()},
                        {"replans", r.replans},
                        {"adjusts", r.adjusts}});
    j["rows"] = rows;
    return j;
}

inline std::string format_table(const SuiteResult& res) {
    std::ostringstream os;
    os << "suite: " << res.name << "  (fairness " << (res.fairness_ok ? "ok" : "VIOLATED") << ")\n";
    os << std::left << std::setw(26) << "variant/task" << std::right << std::setw(8) << "SR"
       << std::setw(8) << "PSR" << std::setw(8) << "SPL" << std::setw(8) << "PSPL"
       << std::setw(12) << "avg ticks" << std::setw(12) << "avg len" << std::setw(6) << "n" << "\n";
    for (const auto& [key, m] : res.summaries) {
        os << std::left << std::setw(26) << key << std::right << std::fixed << std::setprecision(3)
           << std::setw(8) << m.sr << std::setw(8) << m.psr << std::setw(8) << m.spl << std::setw(8)
           << m.pspl << std::setprecision(1) << std::setw(12) << m.avg_time_ticks << std::setw(12)
           << m.avg_path_len << std::setw(6) << m.episodes << "\n";
    }
    for (const auto& [variant, t] : res.taxonomies) {
        os << "flows [" << variant << "]: nav " << t.nav_success << "/" << t.nav_entered
           << " -> manip " << t.manip_success << "/" << t.manip_entered << " -> place "
           << t.place_success << "/" << t.place_entered
           << (t.flow_conserved() ? "" : "  (FLOW NOT CONSERVED)") << "\n";
        for (const auto& [cls, n] : t.failure_counts)
            os << "    " << std::left << std::setw(26) << cls << n << "\n";
    }
    return os.str();
}

// --- trace replay ----------------------------------------------------------------

struct ReplayResult {
    metrics::EpisodeResult result;
    std::string scenario;
    std::string variant;
    uint64_t seed = 0;
    std::string termination;
    bool odometry_consistent = false;
    double spl = 0.0, pspl = 0.0;
};

// Re-derives metrics from a persisted trace and audits that the logged pose
// sequence reproduces the odometry exactly.
inline ReplayResult replay_trace(std::istream& in) {
    ReplayResult rr;
    std::string line;
    double computed = 0.0;
    bool have_prev = false;
    Vec2 prev;
    double final_odometry = 0.0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) continue;
        std::string type = j.value("type", "");
        if (type == "meta") {
            rr.scenario = j.value("scenario", "");
            rr.variant = j.value("variant", "");
            rr.seed = j.value("seed", 0ull);
        } else if (type == "tick") {
            Vec2 pos{j.value("x", 0.0), j.value("y", 0.0)};
            if (have_prev) computed += distance(prev, pos);
            prev = pos;
            have_prev = true;
            final_odometry = j.value("odometry", 0.0);
        } else if (type == "summary") {
            rr.termination = j.value("termination", "");
            rr.result.total_ticks = j.value("ticks", 0l);
            rr.result.total_path_len = j.value("path_len", 0.0);
            std::string fc = j.value("failure_class", "none");
            if (fc != "none") rr.result.failure_class = metrics::failure_class_from_name(fc);
            for (const auto& sj : j.value("subgoals", nlohmann::json::array())) {
                metrics::SubgoalOutcome o;
                o.success = sj.value("success", false);
                o.agent_path_len = sj.value("agent_len", 0.0);
                o.expert_path_len = sj.value("expert_len", 0.0);
                o.failure = metrics::failure_class_from_name(sj.value("failure", "none"));
                o.reached_object = sj.value("reached", false);
                o.grasped = sj.value("grasped", false);
                rr.result.subgoals.push_back(o);
            }
        }
    }
    rr.odometry_consistent = computed == final_odometry;
    rr.spl = metrics::compute_spl(rr.result.full_success(), rr.result.total_path_len,
                                  std::max(rr.result.expert_total(), 1e-9));
    rr.pspl = metrics::compute_pspl(rr.result);
    return rr;
}

}  // namespace binder::harness
