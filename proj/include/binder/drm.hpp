#pragma once

#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "binder/exploration.hpp"
#include "binder/memory.hpp"

namespace binder::drm {

enum class AnomalyCheck { alignment, stability, availability, target_shift };

inline const char* anomaly_check_name(AnomalyCheck c) {
    switch (c) {
        case AnomalyCheck::alignment: return "alignment";
        case AnomalyCheck::stability: return "stability";
        case AnomalyCheck::availability: return "availability";
        case AnomalyCheck::target_shift: return "target_shift";
    }
    return "?";
}

// Task-phase attention directive handed to the monitor: what to watch for
// opportunistically, which anomaly checks apply, and the current action's
// target context (the reference the checks measure against).
struct GuidancePrompt {
    Phase phase = Phase::explore;
    std::vector<std::string> watch_entities;
    std::set<AnomalyCheck> anomaly_checks;
    bool has_target = false;
    std::string target_id;  // registry record id
    std::string target_category;
    Vec3 target_position;
    bool target_is_receptacle = false;
    std::string held_category;
};

enum class ActionKind { go_to, explore, grasp, place };

inline const char* action_name(ActionKind a) {
    switch (a) {
        case ActionKind::go_to: return "go_to";
        case ActionKind::explore: return "explore";
        case ActionKind::grasp: return "grasp";
        case ActionKind::place: return "place";
    }
    return "?";
}

struct PlanDecision {
    ActionKind action = ActionKind::explore;
    Cell target_cell;           // go_to / explore
    std::string target_id;      // registry id for grasp/place (and go_to context)
    Vec3 target_position;
    GuidancePrompt guidance;
    int subgoal = -1;
};

enum class PlanStatus { ok, task_complete, no_frontier };

struct PlanOutcome {
    PlanStatus status = PlanStatus::ok;
    PlanDecision decision;
};

struct FrontierCandidate {
    exploration::FrontierValue frontier;
    exploration::FrontierView view;
};

using CandidateProvider = std::function<std::vector<FrontierCandidate>()>;

// Pluggable frontier-view policy; deterministic given inputs.
struct FrontierScorer {
    virtual ~FrontierScorer() = default;
    virtual double score(const exploration::FrontierView& view, const TaskInstruction& instruction,
                         const memory::AgentMemory& mem) const = 0;
};

// --- task state derived from memory ----------------------------------------

struct TaskState {
    std::vector<int> order;       // execution order over subgoal indices
    std::vector<bool> completed;
    int current = -1;             // -1 when everything is placed
    std::string holding_record;   // registry id currently held, if any
    int holding_subgoal = -1;
};

inline TaskState derive_task_state(const TaskInstruction& instruction,
                                   const memory::AgentMemory& mem) {
    const int n = static_cast<int>(instruction.subgoals.size());
    TaskState ts;
    ts.completed.assign(n, false);
    ts.order.resize(n);
    for (int i = 0; i < n; ++i) ts.order[i] = i;

    for (const auto& h : mem.history) {
        if (h.action == "place" && h.outcome == "success" && h.subgoal >= 0 && h.subgoal < n)
            ts.completed[h.subgoal] = true;
        if (h.action == "grasp" && h.outcome == "success") {
            ts.holding_record = h.target;
            ts.holding_subgoal = h.subgoal;
        }
        if ((h.action == "place" && (h.outcome == "success" || h.outcome == "dropped")) ||
            h.action == "holding_lost") {
            ts.holding_record.clear();
            ts.holding_subgoal = -1;
        }
        if (h.action == "promote" && h.subgoal >= 0 && h.subgoal < n) {
            auto it = std::find(ts.order.begin(), ts.order.end(), h.subgoal);
            if (it != ts.order.end()) {
                ts.order.erase(it);
                ts.order.insert(ts.order.begin(), h.subgoal);
            }
        }
    }
    if (ts.holding_subgoal >= 0) {
        ts.current = ts.holding_subgoal;  // finish what we carry first
    } else {
        for (int idx : ts.order)
            if (!ts.completed[idx]) {
                ts.current = idx;
                break;
            }
    }
    if (ts.holding_subgoal >= 0 && ts.completed[ts.holding_subgoal]) ts.current = -1;
    return ts;
}

// Best non-stale registry match for a query: similarity above theta, ties by
// higher similarity, then distance to the robot, then record id.
inline const memory::RegistryRecord* resolve_query(const memory::AgentMemory& mem,
                                                   const std::string& query, bool want_receptacle,
                                                   double theta) {
    const memory::RegistryRecord* best = nullptr;
    double best_sim = 0.0;
    double best_dist = 0.0;
    for (const auto& r : mem.registry.records) {
        if (r.stale || r.is_receptacle != want_receptacle) continue;
        double sim = embedding::text_similarity(r.category, query);
        if (sim < theta) continue;
        double d = distance(mem.robot_position, r.position.planar());
        bool better = !best || sim > best_sim ||
                      (sim == best_sim && (d < best_dist || (d == best_dist && r.id < best->id)));
        if (better) {
            best = &r;
            best_sim = sim;
            best_dist = d;
        }
    }
    return best;
}

// Queries of incomplete subgoals that have no confirmed registry match yet;
// instruction order, deduplicated. The held object's query is excluded.
inline std::vector<std::string> unresolved_queries(const TaskInstruction& instruction,
                                                   const memory::AgentMemory& mem,
                                                   const TaskState& ts, double theta) {
    std::vector<std::string> out;
    auto add = [&](const std::string& q) {
        if (std::find(out.begin(), out.end(), q) == out.end()) out.push_back(q);
    };
    for (int i = 0; i < static_cast<int>(instruction.subgoals.size()); ++i) {
        if (ts.completed[i]) continue;
        const auto& sg = instruction.subgoals[i];
        bool held = ts.holding_subgoal == i;
        if (!held && !resolve_query(mem, sg.object_query, false, theta)) add(sg.object_query);
        if (!resolve_query(mem, sg.receptacle_query, true, theta)) add(sg.receptacle_query);
    }
    return out;
}

namespace detail {

inline std::set<AnomalyCheck> checks_for(Phase phase, bool transporting) {
    switch (phase) {
        case Phase::explore: return {AnomalyCheck::target_shift};
        case Phase::navigate:
            return transporting
                       ? std::set<AnomalyCheck>{AnomalyCheck::target_shift, AnomalyCheck::availability}
                       : std::set<AnomalyCheck>{AnomalyCheck::target_shift};
        case Phase::grasp: return {AnomalyCheck::alignment};
        case Phase::place: return {AnomalyCheck::stability, AnomalyCheck::availability};
    }
    return {};
}

// Nearest free cell whose center is in manipulation range of the target;
// falls back to the target's own cell when none is known yet.
inline Cell approach_cell(const memory::AgentMemory& mem, const Vec3& target, double range_m) {
    const auto& occ = mem.occupancy;
    Cell best{-1, -1};
    double best_d = std::numeric_limits<double>::max();
    Cell tc = cell_of(target.planar(), occ.cell_size);
    int r_cells = static_cast<int>(std::ceil(range_m / occ.cell_size)) + 1;
    for (int y = tc.y - r_cells; y <= tc.y + r_cells; ++y)
        for (int x = tc.x - r_cells; x <= tc.x + r_cells; ++x) {
            Cell c{x, y};
            if (!occ.is_free(c)) continue;
            Vec2 center = cell_center(c, occ.cell_size);
            if (distance(center, target.planar()) > range_m) continue;
            double d = distance(center, target.planar());
            long idx = cell_index(c, occ.width);
            if (d < best_d - 1e-12 ||
                (std::abs(d - best_d) <= 1e-12 && best.x >= 0 && idx < cell_index(best, occ.width))) {
                best = c;
                best_d = d;
            }
        }
    return best.x >= 0 ? best : tc;
}

}  // namespace detail

inline GuidancePrompt make_guidance(Phase phase, std::vector<std::string> watch,
                                    const memory::RegistryRecord* target, bool transporting,
                                    const std::string& held_category) {
    GuidancePrompt g;
    g.phase = phase;
    g.watch_entities = std::move(watch);
    g.anomaly_checks = detail::checks_for(phase, transporting);
    if (target) {
        g.has_target = true;
        g.target_id = target->id;
        g.target_category = target->category;
        g.target_position = target->position;
        g.target_is_receptacle = target->is_receptacle;
    }
    g.held_category = held_category;
    return g;
}

// Picks the candidate with the best view score; ties fall back to the higher
// frontier value, then the lower cell index.
inline const FrontierCandidate* select_frontier(std::span<const FrontierCandidate> candidates,
                                                const TaskInstruction& instruction,
                                                const memory::AgentMemory& mem,
                                                const FrontierScorer& scorer, int grid_width) {
    const FrontierCandidate* best = nullptr;
    double best_score = 0.0;
    for (const auto& c : candidates) {
        double s = scorer.score(c.view, instruction, mem);
        if (!best) {
            best = &c;
            best_score = s;
            continue;
        }
        if (s > best_score) {
            best = &c;
            best_score = s;
        } else if (s == best_score) {
            if (c.frontier.value > best->frontier.value ||
                (c.frontier.value == best->frontier.value &&
                 cell_index(c.frontier.cell, grid_width) < cell_index(best->frontier.cell, grid_width))) {
                best = &c;
            }
        }
    }
    return best;
}

// Default view policy: best watch-entity match among visible categories plus
// a small visible-free-area bonus. An explicit surrogate for the judgment
// call a multimodal planner would make over the frontier image.
struct RuleScorer : FrontierScorer {
    Params params;

    explicit RuleScorer(const Params& p) : params(p) {}

    double score(const exploration::FrontierView& view, const TaskInstruction& instruction,
                 const memory::AgentMemory& mem) const override {
        TaskState ts = derive_task_state(instruction, mem);
        auto watch = unresolved_queries(instruction, mem, ts, params.theta_match);
        double best = 0.0;
        for (const auto& q : watch)
            for (const auto& [category, count] : view.categories)
                best = std::max(best, embedding::text_similarity(category, q));
        return best + params.free_area_weight * view.free_fraction;
    }
};

// Rule policy, first match wins:
//   1. holding the current subgoal's object and its receptacle is known:
//      place when in range, else go_to the receptacle;
//   2. current subgoal's object is known: grasp when in range, else go_to;
//   3. otherwise explore toward the best top-k frontier candidate.
inline PlanOutcome plan(const TaskInstruction& instruction, const memory::AgentMemory& mem,
                        const Params& params, const CandidateProvider& candidates,
                        const FrontierScorer& scorer) {
    PlanOutcome out;
    TaskState ts = derive_task_state(instruction, mem);
    if (ts.current < 0) {
        out.status = PlanStatus::task_complete;
        return out;
    }
    const auto& sg = instruction.subgoals[ts.current];
    auto watch = unresolved_queries(instruction, mem, ts, params.theta_match);
    Cell robot_cell = cell_of(mem.robot_position, mem.occupancy.cell_size);
    Vec2 robot_center = cell_center(robot_cell, mem.occupancy.cell_size);

    std::string held_category;
    if (!ts.holding_record.empty())
        if (const auto* rec = mem.registry.find(ts.holding_record)) held_category = rec->category;

    PlanDecision d;
    d.subgoal = ts.current;

    if (!ts.holding_record.empty()) {
        const auto* rec = resolve_query(mem, sg.receptacle_query, true, params.theta_match);
        if (rec) {
            bool in_range =
                distance(robot_center, rec->position.planar()) <= params.place_range * params.in_range_frac;
            if (in_range) {
                d.action = ActionKind::place;
                d.target_id = rec->id;
                d.target_position = rec->position;
                d.guidance = make_guidance(Phase::place, watch, rec, true, held_category);
            } else {
                d.action = ActionKind::go_to;
                d.target_id = rec->id;
                d.target_position = rec->position;
                d.target_cell = detail::approach_cell(mem, rec->position,
                                                      params.place_range * params.in_range_frac);
                d.guidance = make_guidance(Phase::navigate, watch, rec, true, held_category);
            }
            out.decision = d;
            return out;
        }
    } else {
        const auto* rec = resolve_query(mem, sg.object_query, false, params.theta_match);
        if (rec) {
            bool in_range =
                distance(robot_center, rec->position.planar()) <= params.grasp_range * params.in_range_frac;
            if (in_range) {
                d.action = ActionKind::grasp;
                d.target_id = rec->id;
                d.target_position = rec->position;
                d.guidance = make_guidance(Phase::grasp, watch, rec, false, "");
            } else {
                d.action = ActionKind::go_to;
                d.target_id = rec->id;
                d.target_position = rec->position;
                d.target_cell = detail::approach_cell(mem, rec->position,
                                                      params.grasp_range * params.in_range_frac);
                d.guidance = make_guidance(Phase::navigate, watch, rec, false, "");
            }
            out.decision = d;
            return out;
        }
    }

    // rule 3: explore
    auto cands = candidates();
    if (cands.empty()) {
        out.status = PlanStatus::no_frontier;
        return out;
    }
    const FrontierCandidate* pick =
        select_frontier(cands, instruction, mem, scorer, mem.occupancy.width);
    d.action = ActionKind::explore;
    d.target_cell = pick->frontier.cell;
    d.target_position = {cell_center(pick->frontier.cell, mem.occupancy.cell_size).x,
                         cell_center(pick->frontier.cell, mem.occupancy.cell_size).y, 0.0};
    d.guidance = make_guidance(Phase::explore, watch, nullptr, !ts.holding_record.empty(),
                               held_category);
    out.decision = d;
    return out;
}

// Strategy revision after a REPLAN: the caller supplies look_around (panoramic
// sense + reconstruct, already charged). Records the cause and may promote a
// subgoal whose object turned up much closer than the current target.
inline PlanOutcome replan_on_report(const TaskInstruction& instruction, memory::AgentMemory& mem,
                                    const std::string& cause, const std::string& cause_entity,
                                    std::optional<Vec3> previous_target, long tick,
                                    const Params& params, const std::function<void()>& look_around,
                                    const CandidateProvider& candidates,
                                    const FrontierScorer& scorer) {
    look_around();
    mem.history.push_back({tick, "replan", cause_entity, cause, -1});

    if (cause == "target_appeared" && !cause_entity.empty() && previous_target) {
        TaskState ts = derive_task_state(instruction, mem);
        if (ts.holding_subgoal < 0 && ts.current >= 0) {
            for (int i = 0; i < static_cast<int>(instruction.subgoals.size()); ++i) {
                if (i == ts.current || ts.completed[i]) continue;
                if (instruction.subgoals[i].object_query != cause_entity) continue;
                const auto* rec =
                    resolve_query(mem, instruction.subgoals[i].object_query, false, params.theta_match);
                if (!rec) continue;
                double d_new = distance(mem.robot_position, rec->position.planar());
                double d_cur = distance(mem.robot_position, previous_target->planar());
                if (d_new < params.promote_ratio * d_cur) {
                    mem.history.push_back({tick, "promote", instruction.subgoals[i].object_query,
                                           "opportunistic", i});
                    break;
                }
            }
        }
    }
    return plan(instruction, mem, params, candidates, scorer);
}

}  // namespace binder::drm
