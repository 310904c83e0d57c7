#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "binder/exploration.hpp"
#include "binder/scenario.hpp"

namespace binder::metrics {

enum class FailureClass {
    none,
    nav_collision_stop,
    nav_wrong_localization,
    manip_not_detected,
    manip_no_grasp_pose,
    manip_collision,
    manip_failed_grasp,
    manip_dropped,
    place_misaligned,
    place_dropped,
    place_collision,
};

inline const char* failure_class_name(FailureClass f) {
    switch (f) {
        case FailureClass::none: return "none";
        case FailureClass::nav_collision_stop: return "nav_collision_stop";
        case FailureClass::nav_wrong_localization: return "nav_wrong_localization";
        case FailureClass::manip_not_detected: return "manip_not_detected";
        case FailureClass::manip_no_grasp_pose: return "manip_no_grasp_pose";
        case FailureClass::manip_collision: return "manip_collision";
        case FailureClass::manip_failed_grasp: return "manip_failed_grasp";
        case FailureClass::manip_dropped: return "manip_dropped";
        case FailureClass::place_misaligned: return "place_misaligned";
        case FailureClass::place_dropped: return "place_dropped";
        case FailureClass::place_collision: return "place_collision";
    }
    return "?";
}

inline FailureClass failure_class_from_name(const std::string& s) {
    for (int i = 0; i <= static_cast<int>(FailureClass::place_collision); ++i)
        if (s == failure_class_name(static_cast<FailureClass>(i)))
            return static_cast<FailureClass>(i);
    return FailureClass::none;
}

struct SubgoalOutcome {
    bool success = false;
    double agent_path_len = 0.0;
    double expert_path_len = 0.0;
    FailureClass failure = FailureClass::none;
    bool reached_object = false;  // navigation stage cleared
    bool grasped = false;         // manipulation stage cleared
};

struct EpisodeResult {
    std::vector<SubgoalOutcome> subgoals;
    double total_path_len = 0.0;
    long total_ticks = 0;
    std::optional<FailureClass> failure_class;

    bool full_success() const {
        for (const auto& s : subgoals)
            if (!s.success) return false;
        return !subgoals.empty();
    }
    int task_size() const { return static_cast<int>(subgoals.size()); }
    double expert_total() const {
        double t = 0.0;
        for (const auto& s : subgoals) t += s.expert_path_len;
        return t;
    }
    double subgoal_fraction() const {
        if (subgoals.empty()) return 0.0;
        double done = 0.0;
        for (const auto& s : subgoals) done += s.success ? 1.0 : 0.0;
        return done / subgoals.size();
    }
};

// Success-weighted inverse path ratio.
inline double compute_spl(bool success, double agent_len, double expert_len) {
    if (!success) return 0.0;
    return expert_len / std::max(agent_len, expert_len);
}

// Mean per-subgoal SPL; failed subgoals contribute 0.
inline double compute_pspl(const EpisodeResult& episode) {
    if (episode.subgoals.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& s : episode.subgoals)
        sum += compute_spl(s.success, s.agent_path_len, s.expert_path_len);
    return sum / episode.subgoals.size();
}

struct MetricsSummary {
    double sr = 0.0;
    double psr = 0.0;
    double spl = 0.0;
    double pspl = 0.0;
    double avg_time_ticks = 0.0;  // over fully successful episodes
    double avg_path_len = 0.0;    // over fully successful episodes
    int episodes = 0;
    int successes = 0;
};

// Sorted accumulation keeps the aggregate exactly permutation-invariant.
namespace detail {
inline double sorted_mean(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}
}  // namespace detail

inline MetricsSummary aggregate(std::span<const EpisodeResult> results) {
    MetricsSummary m;
    m.episodes = static_cast<int>(results.size());
    std::vector<double> srs, psrs, spls, pspls, ticks_ok, lens_ok;
    for (const auto& r : results) {
        bool ok = r.full_success();
        srs.push_back(ok ? 1.0 : 0.0);
        psrs.push_back(r.subgoal_fraction());
        spls.push_back(compute_spl(ok, r.total_path_len, r.expert_total()));
        pspls.push_back(compute_pspl(r));
        if (ok) {
            ++m.successes;
            ticks_ok.push_back(static_cast<double>(r.total_ticks));
            lens_ok.push_back(r.total_path_len);
        }
    }
    m.sr = detail::sorted_mean(std::move(srs));
    m.psr = detail::sorted_mean(std::move(psrs));
    m.spl = detail::sorted_mean(std::move(spls));
    m.pspl = detail::sorted_mean(std::move(pspls));
    m.avg_time_ticks = detail::sorted_mean(std::move(ticks_ok));
    m.avg_path_len = detail::sorted_mean(std::move(lens_ok));
    return m;
}

struct UnreachableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline memory::OccupancyGrid ground_truth_occupancy(const scenario::Scenario& s) {
    memory::OccupancyGrid occ(s.width, s.height, s.cell_size);
    for (auto& c : occ.cells) c = memory::CellState::free_cell;
    for (Cell c : s.obstacles) occ.at(c) = memory::CellState::occupied;
    return occ;
}

// Entity positions after every scripted effect has been applied, in file
// order: the configuration a clairvoyant expert would route to.
struct FinalLayout {
    std::map<std::string, std::pair<std::string, Vec3>> objects;      // id -> (category, pos)
    std::map<std::string, std::pair<std::string, Vec3>> receptacles;  // id -> (category, pos)
};

inline FinalLayout final_layout(const scenario::Scenario& s) {
    FinalLayout fl;
    for (const auto& o : s.objects) fl.objects[o.id] = {o.category, o.position};
    for (const auto& r : s.receptacles) fl.receptacles[r.id] = {r.category, r.position};
    for (const auto& ev : s.events) {
        using K = world::Effect::Kind;
        switch (ev.effect.kind) {
            case K::move_object:
                if (fl.objects.count(ev.effect.id)) fl.objects[ev.effect.id].second = ev.effect.position;
                break;
            case K::move_receptacle:
                if (fl.receptacles.count(ev.effect.id))
                    fl.receptacles[ev.effect.id].second = ev.effect.position;
                break;
            case K::add_object:
                fl.objects[ev.effect.object.id] = {ev.effect.object.category, ev.effect.object.position};
                break;
            case K::remove_object:
                fl.objects.erase(ev.effect.id);
                break;
            case K::disable_receptacle:
                break;  // expert still reaches its position; availability is execution-side
        }
    }
    return fl;
}

inline Vec3 match_position(const std::map<std::string, std::pair<std::string, Vec3>>& pool,
                           const std::string& query, const char* kind) {
    const std::pair<const std::string, std::pair<std::string, Vec3>>* best = nullptr;
    double best_sim = 0.0;
    for (const auto& entry : pool) {
        double sim = embedding::text_similarity(entry.second.first, query);
        if (sim > best_sim) {
            best_sim = sim;
            best = &entry;
        }
    }
    if (!best || best_sim < 0.3)
        throw UnreachableError(std::string("no ") + kind + " matches query '" + query + "'");
    return best->second.second;
}

}  // namespace detail

// Shortest ground-truth path lengths chaining start -> object_j ->
// receptacle_j over final (post-perturbation) positions. Lengths floor at one
// cell so the path ratio stays defined when everything starts in reach.
inline std::vector<double> expert_path_oracle(const scenario::Scenario& s,
                                              const TaskInstruction& instruction, const Params& p) {
    auto occ = detail::ground_truth_occupancy(s);
    auto layout = detail::final_layout(s);
    Cell cur = cell_of(s.robot_start, s.cell_size);
    if (!occ.is_free(cur)) throw UnreachableError("robot start not free");

    std::vector<double> lengths;
    for (const auto& sg : instruction.subgoals) {
        Vec3 obj = detail::match_position(layout.objects, sg.object_query, "object");
        Vec3 rec = detail::match_position(layout.receptacles, sg.receptacle_query, "receptacle");
        double leg = 0.0;
        for (const auto& [target, range] :
             {std::pair{obj, p.grasp_range * p.in_range_frac}, std::pair{rec, p.place_range * p.in_range_frac}}) {
            auto goals = exploration::cells_within(occ, target.planar(), range);
            auto path = exploration::astar_any(occ, cur, goals);
            if (!path.ok()) throw UnreachableError("subgoal target unreachable in ground truth");
            leg += path.length_m(s.cell_size);
            cur = path.cells.back();
        }
        lengths.push_back(std::max(leg, s.cell_size));
    }
    return lengths;
}

}  // namespace binder::metrics
