#pragma once

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "binder/drm.hpp"
#include "binder/external.hpp"
#include "binder/irm.hpp"
#include "binder/metrics.hpp"
#include "binder/scenario.hpp"

namespace binder::executor {

enum class Variant { binder, drm_only, irm_only, neither, sparse_update, waypoint_update };

inline const char* variant_name(Variant v) {
    switch (v) {
        case Variant::binder: return "binder";
        case Variant::drm_only: return "drm_only";
        case Variant::irm_only: return "irm_only";
        case Variant::neither: return "neither";
        case Variant::sparse_update: return "sparse_update";
        case Variant::waypoint_update: return "waypoint_update";
    }
    return "?";
}

inline std::optional<Variant> variant_from_name(const std::string& s) {
    for (Variant v : {Variant::binder, Variant::drm_only, Variant::irm_only, Variant::neither,
                      Variant::sparse_update, Variant::waypoint_update})
        if (s == variant_name(v)) return v;
    return std::nullopt;
}

// What each agent variant is allowed to do. Dual-process runs monitor every
// tick and reconstruct only at explore arrivals or on REPLAN; discrete-update
// baselines reconstruct at every navigation target and action completion,
// waypoint_update additionally every interval meters of travel.
struct VariantPolicy {
    bool monitoring = false;
    bool guided = false;         // DRM-issued phase guidance vs generic watch
    bool drm_frontier = false;   // top-k diverse + view scoring vs raw max-V
    bool reconstruct_on_goto_arrival = false;
    bool reconstruct_on_action_done = false;
    bool waypoint = false;
};

inline VariantPolicy policy_for(Variant v) {
    switch (v) {
        case Variant::binder: return {true, true, true, false, false, false};
        case Variant::drm_only: return {false, false, true, true, true, false};
        case Variant::irm_only: return {true, false, false, false, false, false};
        case Variant::neither: return {false, false, false, true, true, false};
        case Variant::sparse_update: return {false, false, false, true, true, false};
        case Variant::waypoint_update: return {false, false, false, true, true, true};
    }
    return {};
}

struct TickRecord {
    long tick = 0;
    double x = 0, y = 0, heading = 0, odometry = 0;
    std::string activity;  // motion | reconstruct | manipulation
    std::string mode;      // CONTINUE | ADJUST | REPLAN
    int detections = 0;
    std::vector<std::string> fired_events;
};

struct DecisionRecord {
    long tick = 0;
    std::string action;
    std::string target_id;
    Cell cell;
    int subgoal = -1;

    bool same_decision(const DecisionRecord& o) const {
        return action == o.action && target_id == o.target_id && cell == o.cell &&
               subgoal == o.subgoal;
    }
};

struct EpisodeLog {
    std::string scenario_name;
    std::string variant;
    uint64_t seed = 0;
    uint64_t fairness_hash = 0;
    int task_size = 0;
    std::vector<TickRecord> ticks;
    std::vector<DecisionRecord> decisions;
    long motion_ticks = 0, reconstruct_ticks = 0, manipulation_ticks = 0;
    int replans = 0, adjusts = 0;
    std::string termination;
    metrics::EpisodeResult result;

    void write_ndjson(std::ostream& os) const {
        nlohmann::json meta{{"type", "meta"},
                            {"scenario", scenario_name},
                            {"variant", variant},
                            {"seed", seed},
                            {"task_size", task_size},
                            {"fairness_hash", fairness_hash}};
        os << meta.dump() << "\n";
        size_t di = 0;
        for (const auto& t : ticks) {
            nlohmann::json j{{"type", "tick"},       {"tick", t.tick},
                             {"x", t.x},             {"y", t.y},
                             {"heading", t.heading}, {"odometry", t.odometry},
                             {"activity", t.activity}, {"mode", t.mode},
                             {"detections", t.detections}};
            if (!t.fired_events.empty()) j["events"] = t.fired_events;
            os << j.dump() << "\n";
            while (di < decisions.size() && decisions[di].tick <= t.tick) {
                const auto& d = decisions[di++];
                nlohmann::json dj{{"type", "decision"}, {"tick", d.tick},
                                  {"action", d.action}, {"target", d.target_id},
                                  {"cell", {d.cell.x, d.cell.y}}, {"subgoal", d.subgoal}};
                os << dj.dump() << "\n";
            }
        }
        nlohmann::json subgoals = nlohmann::json::array();
        for (const auto& s : result.subgoals)
            subgoals.push_back({{"success", s.success},
                                {"agent_len", s.agent_path_len},
                                {"expert_len", s.expert_path_len},
                                {"failure", metrics::failure_class_name(s.failure)},
                                {"reached", s.reached_object},
                                {"grasped", s.grasped}});
        nlohmann::json summary{{"type", "summary"},
                               {"termination", termination},
                               {"ticks", result.total_ticks},
                               {"path_len", result.total_path_len},
                               {"motion_ticks", motion_ticks},
                               {"reconstruct_ticks", reconstruct_ticks},
                               {"manipulation_ticks", manipulation_ticks},
                               {"replans", replans},
                               {"adjusts", adjusts},
                               {"failure_class",
                                result.failure_class
                                    ? metrics::failure_class_name(*result.failure_class)
                                    : "none"},
                               {"subgoals", subgoals}};
        os << summary.dump() << "\n";
    }

    std::string ndjson() const {
        std::ostringstream os;
        write_ndjson(os);
        return os.str();
    }
};

inline uint64_t fairness_hash(const scenario::Scenario& sc, const TaskInstruction& inst,
                              uint64_t seed) {
    std::string blob = scenario::to_json(sc).dump();
    blob += "|";
    for (const auto& sg : inst.subgoals) blob += sg.object_query + ">" + sg.receptacle_query + ";";
    blob += "|" + std::to_string(seed);
    return fnv1a64(blob);
}

class Episode {
public:
    Episode(const scenario::Scenario& sc, const TaskInstruction& instruction, Variant variant,
            uint64_t seed, const Params& base_params)
        : scenario_(sc),
          instruction_(instruction),
          variant_(variant),
          policy_(policy_for(variant)),
          params_(scenario::scenario_params(sc, base_params)),
          seed_(seed),
          scorer_(params_) {
        if (policy_.waypoint && params_.waypoint_interval <= 0)
            throw scenario::ScenarioError("waypoint interval must be positive");
        expert_lengths_ = metrics::expert_path_oracle(scenario_, instruction_, params_);
        log_.scenario_name = sc.name;
        log_.variant = variant_name(variant);
        log_.seed = seed;
        log_.task_size = static_cast<int>(instruction.subgoals.size());
        log_.fairness_hash = fairness_hash(sc, instruction, seed);
        if (!params_.scorer_command.empty())
            scorer_hook_ = std::make_unique<ext::ProcessHook>(params_.scorer_command,
                                                              params_.hook_timeout_ms);
        if (!params_.monitor_command.empty())
            monitor_hook_ = std::make_unique<ext::ProcessHook>(params_.monitor_command,
                                                               params_.hook_timeout_ms);
    }

    metrics::EpisodeResult run() {
        world_ = scenario::make_world(scenario_, seed_);
        memory_ = memory::AgentMemory(scenario_.width, scenario_.height, scenario_.cell_size);
        sync_pose();
        clip_.window = params_.window;
        track_.assign(instruction_.subgoals.size(), Track{});
        start_reconstruct("init");
        while (!done_) {
            if (world_.tick >= params_.max_ticks) {
                on_timeout();
                break;
            }
            tick_once();
        }
        finalize();
        return log_.result;
    }

    const EpisodeLog& log() const { return log_; }
    EpisodeLog take_log() { return std::move(log_); }

private:
    enum class Activity { reconstructing, navigating, manipulating };
    enum class ManipKind { grasp, place };

    struct Track {
        bool attempted = false;
        bool reached = false;
        bool grasped = false;
        bool success = false;
        double odometry = 0.0;
        metrics::FailureClass failure = metrics::FailureClass::none;
    };

    // --- per-tick loop ------------------------------------------------------

    void tick_once() {
        size_t fired_before = world_.fired_log.size();
        std::string activity_class;
        bool attempt_tick = false;

        switch (activity_) {
            case Activity::reconstructing: {
                world::advance_tick(world_);
                activity_class = "reconstruct";
                ++log_.reconstruct_ticks;
                if (--recon_left_ <= 0) recon_done_pending_ = true;
                break;
            }
            case Activity::navigating: {
                activity_class = "motion";
                ++log_.motion_ticks;
                Cell next = path_[path_pos_ + 1];
                auto r = world::step_motion(world_, next);
                if (!r.ok()) {
                    if (++blocked_retries_ > 2 || !choose_route()) {
                        fail_episode(metrics::FailureClass::nav_collision_stop, "collision_stop");
                        return;
                    }
                } else {
                    ++path_pos_;
                    traveled_since_update_ += world_.cell_size;
                    if (current_subgoal_ >= 0) track_[current_subgoal_].odometry += world_.cell_size;
                    if (path_pos_ + 1 >= path_.size()) arrival_pending_ = true;
                }
                break;
            }
            case Activity::manipulating: {
                activity_class = "manipulation";
                ++log_.manipulation_ticks;
                if (align_left_ > 0) {
                    world::advance_tick(world_);
                    --align_left_;
                } else {
                    perform_attempt();
                    attempt_tick = true;
                }
                break;
            }
        }
        if (done_) return;

        // camera runs every tick regardless of variant
        auto obs = world::sense(world_, params_.fov_deg, params_.max_range, params_, false);
        int n_detections = static_cast<int>(obs.detections.size());
        clip_.push(std::move(obs));
        resolve_localizations();
        sync_pose();
        check_holding();

        std::string mode = "CONTINUE";
        if (policy_.monitoring && activity_ != Activity::reconstructing && !attempt_tick &&
            has_decision_) {
            irm::Report report = run_monitor();
            auto pr = irm::parse(report, decision_.guidance, memory_.registry, params_);
            enqueue_requests(pr);
            mode = irm::mode_name(pr.mode);
            dispatch(pr);
        }

        if (!done_ && policy_.waypoint && activity_ == Activity::navigating &&
            traveled_since_update_ >= params_.waypoint_interval - 1e-9) {
            arrival_pending_ = false;
            start_reconstruct("waypoint");
        }

        TickRecord rec;
        rec.tick = world_.tick;
        rec.x = world_.robot.position.x;
        rec.y = world_.robot.position.y;
        rec.heading = world_.robot.heading;
        rec.odometry = world_.robot.odometry;
        rec.activity = activity_class;
        rec.mode = mode;
        rec.detections = n_detections;
        for (size_t i = fired_before; i < world_.fired_log.size(); ++i)
            rec.fired_events.push_back(world_.fired_log[i].description);
        log_.ticks.push_back(std::move(rec));

        if (done_) return;
        if (recon_done_pending_) {
            recon_done_pending_ = false;
            finish_reconstruct();
        } else if (arrival_pending_ && activity_ == Activity::navigating) {
            arrival_pending_ = false;
            on_arrival();
        } else if (attempt_outcome_) {
            auto outcome = *attempt_outcome_;
            attempt_outcome_.reset();
            on_attempt_outcome(outcome);
        }
    }

    // --- sensing / memory ----------------------------------------------------

    void sync_pose() {
        memory_.robot_position = world_.robot.position;
        memory_.robot_heading = world_.robot.heading;
    }

    void check_holding() {
        if (!holding_record_.empty() && !world_.robot.holding) {
            history("holding_lost", holding_record_, "event", holding_subgoal_);
            holding_record_.clear();
            holding_subgoal_ = -1;
        }
    }

    void resolve_localizations() {
        std::vector<std::pair<std::string, Vec3>> batch;
        while (!pending_.empty() && pending_.front().resolve_tick <= world_.tick) {
            const auto& req = pending_.front();
            if (auto pos = irm::localize(req.detection, req.pose, req.pose_heading))
                batch.push_back({req.category, *pos});
            pending_.pop_front();
        }
        if (!batch.empty())
            memory::merge_detections(memory_, batch, world_.tick, params_.merge_radius);
    }

    void enqueue_requests(const irm::ParseResult& pr) {
        for (auto req : pr.requests) {
            req.resolve_tick = world_.tick + params_.resolve_after;
            pending_.push_back(std::move(req));
        }
    }

    void look_around() {
        double saved_heading = world_.robot.heading;
        std::vector<world::Observation> panorama;
        int views = std::max(1, params_.panorama_views);
        panorama.reserve(static_cast<size_t>(views));
        for (int k = 0; k < views; ++k) {
            world_.robot.heading = wrap_angle(2.0 * std::numbers::pi * k / views);
            panorama.push_back(world::sense(world_, params_.fov_deg, params_.max_range, params_, true));
        }
        world_.robot.heading = saved_heading;
        memory::reconstruct(memory_, panorama, world_.tick, params_.merge_radius);
        sync_pose();
    }

    // --- monitoring -----------------------------------------------------------

    irm::Report run_monitor() {
        if (monitor_hook_ && monitor_hook_->alive()) {
            if (auto report = external_monitor()) return *report;
        }
        return irm::monitor(clip_, decision_.guidance, params_);
    }

    std::optional<irm::Report> external_monitor() {
        const auto& g = decision_.guidance;
        nlohmann::json frames = nlohmann::json::array();
        for (const auto& f : clip_.frames) {
            nlohmann::json dets = nlohmann::json::array();
            for (const auto& d : f.detections)
                dets.push_back({{"category", d.category},
                                {"bearing", (d.bearing_min + d.bearing_max) / 2.0},
                                {"receptacle", d.is_receptacle},
                                {"available", d.available}});
            frames.push_back({{"tick", f.tick}, {"detections", dets}});
        }
        nlohmann::json checks = nlohmann::json::array();
        for (auto c : g.anomaly_checks) checks.push_back(drm::anomaly_check_name(c));
        nlohmann::json req{{"type", "monitor"},
                           {"tick", world_.tick},
                           {"guidance",
                            {{"phase", phase_name(g.phase)},
                             {"watch", g.watch_entities},
                             {"checks", checks}}},
                           {"clip", frames}};
        auto reply = monitor_hook_->exchange(req);
        if (!reply || !reply->is_object()) return std::nullopt;
        irm::Report report;
        report.tick = world_.tick;
        report.text = reply->value("text", "");
        if (!reply->contains("anomalies") || !(*reply)["anomalies"].is_array()) return std::nullopt;
        for (const auto& a : (*reply)["anomalies"]) {
            std::string name = a.get<std::string>();
            for (auto f : {irm::AnomalyFlag::misalignment, irm::AnomalyFlag::object_shifted,
                           irm::AnomalyFlag::receptacle_unavailable, irm::AnomalyFlag::target_appeared,
                           irm::AnomalyFlag::grasp_slipping})
                if (name == irm::anomaly_flag_name(f)) report.anomaly_flags.insert(f);
        }
        report.shift_distance = reply->value("shift_distance", 0.0);
        // mentions map back onto last-frame detections by category
        if (reply->contains("mentions") && !clip_.empty()) {
            const auto& last = clip_.last();
            for (const auto& mj : (*reply)["mentions"]) {
                std::string category = mj.value("category", "");
                for (const auto& det : last.detections) {
                    if (det.category != category) continue;
                    auto entity =
                        irm::match_entity(category, g.watch_entities, params_.theta_match);
                    irm::Mention m;
                    m.category = category;
                    m.matched_entity = entity.value_or(category);
                    m.source = det;
                    m.pose = last.robot_position;
                    m.pose_heading = last.robot_heading;
                    m.frame_tick = last.tick;
                    if (auto p = irm::localize(det, last.robot_position, last.robot_heading))
                        m.est_position = *p;
                    report.mentions.push_back(std::move(m));
                    break;
                }
            }
        }
        return report;
    }

    // --- planning --------------------------------------------------------------

    std::vector<std::string> incomplete_queries() const {
        drm::TaskState ts = drm::derive_task_state(instruction_, memory_);
        std::vector<std::string> out;
        auto add = [&](const std::string& q) {
            if (std::find(out.begin(), out.end(), q) == out.end()) out.push_back(q);
        };
        for (int i = 0; i < static_cast<int>(instruction_.subgoals.size()); ++i) {
            if (ts.completed[i]) continue;
            add(instruction_.subgoals[i].object_query);
            add(instruction_.subgoals[i].receptacle_query);
        }
        return out;
    }

    exploration::FrontierView view_toward(Cell frontier) {
        double saved = world_.robot.heading;
        Vec2 center = cell_center(frontier, world_.cell_size);
        Vec2 d = center - world_.robot.position;
        if (norm(d) > 1e-9) world_.robot.heading = std::atan2(d.y, d.x);
        auto obs = world::sense(world_, params_.fov_deg, params_.max_range, params_, true);
        world_.robot.heading = saved;
        exploration::FrontierView view;
        for (const auto& det : obs.detections) view.categories[det.category] += 1;
        if (!obs.visible_cells.empty()) {
            int free_cells = 0;
            for (const auto& cs : obs.visible_cells)
                if (!cs.occupied) ++free_cells;
            view.free_fraction = static_cast<double>(free_cells) / obs.visible_cells.size();
        }
        return view;
    }

    std::vector<drm::FrontierCandidate> frontier_candidates() {
        drm::TaskState ts = drm::derive_task_state(instruction_, memory_);
        auto watch = drm::unresolved_queries(instruction_, memory_, ts, params_.theta_match);
        auto values = exploration::score_frontiers(memory_, watch, world_.tick, params_);
        auto mask = exploration::reachable_mask(memory_.occupancy, world_.robot_cell());
        std::erase_if(values, [&](const exploration::FrontierValue& f) {
            return !mask[cell_index(f.cell, memory_.occupancy.width)];
        });
        std::vector<drm::FrontierCandidate> out;
        if (values.empty()) return out;
        if (policy_.drm_frontier) {
            auto top = exploration::select_topk_diverse(std::move(values), params_.top_k,
                                                        params_.d_min, world_.cell_size,
                                                        memory_.occupancy.width);
            for (const auto& f : top) out.push_back({f, view_toward(f.cell)});
            if (scorer_hook_ && scorer_hook_->alive() && out.size() > 1) {
                if (auto picked = external_pick(out)) return {*picked};
            }
        } else {
            // raw max-V frontier, ties toward the lower cell index
            const exploration::FrontierValue* best = &values.front();
            for (const auto& f : values) {
                if (f.value > best->value ||
                    (f.value == best->value && cell_index(f.cell, memory_.occupancy.width) <
                                                   cell_index(best->cell, memory_.occupancy.width)))
                    best = &f;
            }
            out.push_back({*best, {}});
        }
        return out;
    }

    std::optional<drm::FrontierCandidate> external_pick(
        const std::vector<drm::FrontierCandidate>& candidates) {
        nlohmann::json views = nlohmann::json::array();
        for (const auto& c : candidates) {
            nlohmann::json cats = nlohmann::json::object();
            for (const auto& [k, v] : c.view.categories) cats[k] = v;
            views.push_back({{"cell", {c.frontier.cell.x, c.frontier.cell.y}},
                             {"value", c.frontier.value},
                             {"categories", cats},
                             {"free_fraction", c.view.free_fraction}});
        }
        std::string digest_src;
        for (const auto& r : memory_.registry.records)
            digest_src += r.id + ":" + r.category + ";";
        nlohmann::json req{{"type", "select_frontier"},
                           {"instruction", instruction_.text},
                           {"views", views},
                           {"registry_digest", fnv1a64(digest_src)}};
        auto reply = scorer_hook_->exchange(req);
        if (!reply || !reply->is_object() || !reply->contains("candidate_index"))
            return std::nullopt;
        long idx = (*reply)["candidate_index"].is_number_integer()
                       ? (*reply)["candidate_index"].get<long>()
                       : -1;
        if (idx < 0 || idx >= static_cast<long>(candidates.size())) return std::nullopt;
        return candidates[static_cast<size_t>(idx)];
    }

    void plan_next() {
        auto provider = [this]() { return frontier_candidates(); };
        apply_plan_outcome(drm::plan(instruction_, memory_, params_, provider, scorer_));
    }

    void apply_plan_outcome(const drm::PlanOutcome& outcome) {
        if (outcome.status == drm::PlanStatus::task_complete) {
            finish_success();
            return;
        }
        if (outcome.status == drm::PlanStatus::no_frontier) {
            fail_episode(metrics::FailureClass::manip_not_detected, "no_frontier");
            return;
        }
        decision_ = outcome.decision;
        has_decision_ = true;
        if (!policy_.guided) apply_generic_guidance();
        adjust_attempts_ = 0;
        blocked_retries_ = 0;
        current_subgoal_ = decision_.subgoal;
        if (current_subgoal_ >= 0) track_[current_subgoal_].attempted = true;
        log_.decisions.push_back({world_.tick, drm::action_name(decision_.action),
                                  decision_.target_id, decision_.target_cell, decision_.subgoal});

        switch (decision_.action) {
            case drm::ActionKind::grasp:
                world::notify_phase(world_, Phase::grasp);
                if (current_subgoal_ >= 0) track_[current_subgoal_].reached = true;
                activity_ = Activity::manipulating;
                manip_kind_ = ManipKind::grasp;
                align_left_ = params_.grasp_align_ticks;
                return;
            case drm::ActionKind::place:
                world::notify_phase(world_, Phase::place);
                activity_ = Activity::manipulating;
                manip_kind_ = ManipKind::place;
                align_left_ = params_.place_align_ticks;
                return;
            case drm::ActionKind::go_to:
                world::notify_phase(world_, Phase::navigate);
                if (!choose_route()) {
                    fail_episode(metrics::FailureClass::nav_wrong_localization, "unroutable");
                    return;
                }
                activity_ = Activity::navigating;
                return;
            case drm::ActionKind::explore:
                world::notify_phase(world_, Phase::explore);
                if (decision_.target_cell == world_.robot_cell()) {
                    start_reconstruct("explore_arrival");
                    return;
                }
                if (!choose_route()) {
                    fail_episode(metrics::FailureClass::nav_wrong_localization, "unroutable");
                    return;
                }
                activity_ = Activity::navigating;
                return;
        }
    }

    // Standing generic monitoring for the unguided variant: watch every
    // incomplete-task entity, change detection only, no manipulation focus.
    void apply_generic_guidance() {
        auto& g = decision_.guidance;
        g.watch_entities = incomplete_queries();
        g.anomaly_checks = {drm::AnomalyCheck::target_shift};
        g.has_target = false;
        g.target_id.clear();
        g.target_category.clear();
        g.target_is_receptacle = false;
        g.held_category.clear();
    }

    bool choose_route() {
        route_via_frontier_ = false;
        Cell start = world_.robot_cell();
        if (decision_.action == drm::ActionKind::explore) {
            auto pr = exploration::astar(memory_.occupancy, start, decision_.target_cell);
            if (!pr.ok()) return false;
            path_ = std::move(pr.cells);
            path_pos_ = 0;
            return path_.size() >= 2;
        }
        double range = (decision_.guidance.target_is_receptacle ? params_.place_range
                                                                : params_.grasp_range) *
                       params_.in_range_frac;
        auto goals =
            exploration::cells_within(memory_.occupancy, decision_.target_position.planar(), range);
        auto pr = exploration::astar_any(memory_.occupancy, start, goals);
        if (pr.ok()) {
            path_ = std::move(pr.cells);
            path_pos_ = 0;
            if (path_.size() < 2) {  // already effectively there; replan will notice
                arrival_pending_ = true;
                path_ = {start, start};
                path_pos_ = 1;
            }
            return true;
        }
        // No known-free route: grow the map by heading for the frontier
        // nearest the target.
        auto mask = exploration::reachable_mask(memory_.occupancy, start);
        auto frontiers = exploration::extract_frontiers(memory_.occupancy);
        const Cell* best = nullptr;
        double best_d = 0.0;
        for (const auto& f : frontiers) {
            if (!mask[cell_index(f, memory_.occupancy.width)]) continue;
            double d = distance(cell_center(f, world_.cell_size), decision_.target_position.planar());
            if (!best || d < best_d ||
                (d == best_d && cell_index(f, memory_.occupancy.width) <
                                    cell_index(*best, memory_.occupancy.width))) {
                best = &f;
                best_d = d;
            }
        }
        if (!best) return false;
        auto fp = exploration::astar(memory_.occupancy, start, *best);
        if (!fp.ok()) return false;
        path_ = std::move(fp.cells);
        path_pos_ = 0;
        route_via_frontier_ = true;
        if (path_.size() < 2) {
            // standing on the frontier already: reconstruct to grow the map
            start_reconstruct("frontier_leg");
        }
        return true;
    }

    // --- boundaries -------------------------------------------------------------

    void on_arrival() {
        if (route_via_frontier_) {
            start_reconstruct("frontier_leg");
            return;
        }
        if (decision_.action == drm::ActionKind::explore) {
            start_reconstruct("explore_arrival");
            return;
        }
        if (policy_.reconstruct_on_goto_arrival) {
            start_reconstruct("arrival");
            return;
        }
        plan_next();
    }

    void start_reconstruct(const std::string& cause) {
        activity_ = Activity::reconstructing;
        recon_left_ = std::max(1, params_.reconstruct_ticks);
        recon_cause_ = cause;
        arrival_pending_ = false;
        attempt_outcome_.reset();
        align_left_ = 0;
        path_.clear();
        path_pos_ = 0;
        traveled_since_update_ = 0.0;
    }

    void begin_replan(const std::string& cause, const std::string& entity) {
        int count = ++replan_counts_[cause];
        ++total_replans_;
        if (count > params_.max_replans_per_cause || total_replans_ > params_.max_total_replans) {
            fail_episode(class_for_cause(cause), "escalation_loop");
            return;
        }
        ++log_.replans;
        recon_replan_ = true;
        recon_replan_cause_ = cause;
        recon_replan_entity_ = entity;
        if (has_decision_ && decision_.action != drm::ActionKind::explore)
            recon_prev_target_ = decision_.target_position;
        else
            recon_prev_target_.reset();
        start_reconstruct("replan:" + cause);
    }

    void finish_reconstruct() {
        if (recon_replan_) {
            recon_replan_ = false;
            auto provider = [this]() { return frontier_candidates(); };
            auto outcome = drm::replan_on_report(
                instruction_, memory_, recon_replan_cause_, recon_replan_entity_,
                recon_prev_target_, world_.tick, params_, [this]() { look_around(); }, provider,
                scorer_);
            apply_plan_outcome(outcome);
            return;
        }
        look_around();
        memory_.history.push_back({world_.tick, "reconstruct", recon_cause_, "", -1});
        plan_next();
    }

    // --- manipulation -------------------------------------------------------------

    void perform_attempt() {
        if (manip_kind_ == ManipKind::grasp) {
            Vec2 believed = decision_.target_position.planar();
            std::string wid = world::nearest_object(world_, believed, params_.grasp_range);
            double err = 1e9;
            if (!wid.empty())
                err = distance(believed, world_.objects.at(wid).position.planar());
            auto res = world::attempt_grasp(world_, wid.empty() ? "__none__" : wid, err, params_);
            attempt_outcome_ = AttemptOutcome{true, res.code, world::PlaceCode::success, wid};
        } else {
            Vec2 believed = decision_.target_position.planar();
            std::string wid = world::nearest_receptacle(world_, believed, params_.place_range);
            auto res = world::attempt_place(world_, wid.empty() ? "__none__" : wid, params_);
            attempt_outcome_ = AttemptOutcome{false, world::GraspCode::success, res.code, wid};
        }
    }

    struct AttemptOutcome {
        bool is_grasp = true;
        world::GraspCode grasp = world::GraspCode::success;
        world::PlaceCode place = world::PlaceCode::success;
        std::string world_id;
    };

    void on_attempt_outcome(const AttemptOutcome& out) {
        if (out.is_grasp)
            on_grasp_outcome(out);
        else
            on_place_outcome(out);
    }

    void on_grasp_outcome(const AttemptOutcome& out) {
        using GC = world::GraspCode;
        history("grasp", decision_.target_id, world::grasp_code_name(out.grasp), current_subgoal_);
        switch (out.grasp) {
            case GC::success: {
                holding_record_ = decision_.target_id;
                holding_subgoal_ = current_subgoal_;
                if (current_subgoal_ >= 0) track_[current_subgoal_].grasped = true;
                if (auto* rec = memory_.registry.find(decision_.target_id)) rec->stale = true;
                replan_counts_.clear();
                after_action_done();
                return;
            }
            case GC::misaligned:
            case GC::slipped: {
                if (policy_.monitoring && adjust_attempts_ < params_.max_adjust) {
                    ++adjust_attempts_;
                    ++log_.adjusts;
                    if (local_recompute()) {
                        align_left_ = std::max(1, params_.grasp_align_ticks);
                        return;  // immediate local retry
                    }
                    begin_replan("no_fresh_detection", "");
                    return;
                }
                begin_replan("grasp_failed", "");
                return;
            }
            case GC::object_missing: {
                memory::mark_stale(memory_, decision_.target_id);
                begin_replan("object_missing", "");
                return;
            }
            case GC::out_of_range: {
                begin_replan("approach_error", "");
                return;
            }
            case GC::already_holding:
            case GC::not_free: {
                begin_replan("internal", "");
                return;
            }
        }
    }

    void on_place_outcome(const AttemptOutcome& out) {
        using PC = world::PlaceCode;
        history("place", decision_.target_id, world::place_code_name(out.place), current_subgoal_);
        switch (out.place) {
            case PC::success: {
                if (current_subgoal_ >= 0) track_[current_subgoal_].success = true;
                if (auto* held = memory_.registry.find(holding_record_)) {
                    if (auto* rec = memory_.registry.find(decision_.target_id)) {
                        held->position = rec->position;
                        held->stale = false;
                    }
                }
                holding_record_.clear();
                holding_subgoal_ = -1;
                replan_counts_.clear();
                after_action_done();
                return;
            }
            case PC::dropped: {
                holding_record_.clear();
                holding_subgoal_ = -1;
                begin_replan("place_dropped", "");
                return;
            }
            case PC::unavailable: {
                memory::mark_stale(memory_, decision_.target_id);
                begin_replan("receptacle_unavailable", "");
                return;
            }
            case PC::out_of_range: {
                begin_replan("approach_error", "");
                return;
            }
            case PC::not_holding: {
                begin_replan("internal", "");
                return;
            }
        }
    }

    void after_action_done() {
        if (policy_.reconstruct_on_action_done) {
            start_reconstruct("action_done");
            return;
        }
        plan_next();
    }

    // Local grasp recomputation: re-estimate the target from the freshest
    // clip detection of its category, keeping the approach unchanged.
    bool local_recompute() {
        const memory::RegistryRecord* rec = memory_.registry.find(decision_.target_id);
        std::string category = rec ? rec->category : decision_.guidance.target_category;
        if (category.empty()) return false;
        for (auto it = clip_.frames.rbegin(); it != clip_.frames.rend(); ++it) {
            const world::Detection* best = nullptr;
            double best_sim = 0.0;
            for (const auto& det : it->detections) {
                double sim = embedding::text_similarity(det.category, category);
                if (sim >= params_.theta_match && sim > best_sim) {
                    best_sim = sim;
                    best = &det;
                }
            }
            if (best) {
                if (auto pos = irm::localize(*best, it->robot_position, it->robot_heading)) {
                    decision_.target_position = *pos;
                    decision_.guidance.target_position = *pos;
                    return true;
                }
            }
        }
        return false;
    }

    void dispatch(const irm::ParseResult& pr) {
        switch (pr.mode) {
            case irm::Mode::continue_:
                return;
            case irm::Mode::adjust: {
                if (activity_ != Activity::manipulating) return;
                if (adjust_attempts_ >= params_.max_adjust) {
                    begin_replan("adjust_exhausted", "");
                    return;
                }
                ++adjust_attempts_;
                ++log_.adjusts;
                history("adjust", decision_.target_id, pr.cause, current_subgoal_);
                if (!local_recompute()) {
                    begin_replan("no_fresh_detection", "");
                    return;
                }
                align_left_ = std::max(align_left_, 1);
                return;
            }
            case irm::Mode::replan:
                begin_replan(pr.cause, pr.cause_entity);
                return;
        }
    }

    // --- termination ------------------------------------------------------------

    metrics::FailureClass class_for_cause(const std::string& cause) const {
        if (cause == "grasp_failed" || cause == "adjust_exhausted")
            return metrics::FailureClass::manip_failed_grasp;
        if (cause == "no_fresh_detection") return metrics::FailureClass::manip_no_grasp_pose;
        if (cause == "object_missing") return metrics::FailureClass::nav_wrong_localization;
        if (cause == "receptacle_unavailable") return metrics::FailureClass::place_misaligned;
        if (cause == "place_dropped") return metrics::FailureClass::place_dropped;
        return metrics::FailureClass::nav_wrong_localization;
    }

    void on_timeout() {
        metrics::FailureClass cls = metrics::FailureClass::nav_wrong_localization;
        if (has_decision_) {
            switch (decision_.action) {
                case drm::ActionKind::explore: cls = metrics::FailureClass::manip_not_detected; break;
                case drm::ActionKind::go_to: cls = metrics::FailureClass::nav_wrong_localization; break;
                case drm::ActionKind::grasp: cls = metrics::FailureClass::manip_failed_grasp; break;
                case drm::ActionKind::place: cls = metrics::FailureClass::place_misaligned; break;
            }
        }
        fail_episode(cls, "timeout");
    }

    void fail_episode(metrics::FailureClass cls, const std::string& termination) {
        if (current_subgoal_ >= 0 && current_subgoal_ < static_cast<int>(track_.size()))
            track_[current_subgoal_].failure = cls;
        log_.termination = termination;
        done_ = true;
    }

    void finish_success() {
        log_.termination = "success";
        done_ = true;
    }

    void finalize() {
        auto& res = log_.result;
        res.subgoals.clear();
        for (size_t i = 0; i < track_.size(); ++i) {
            metrics::SubgoalOutcome o;
            o.success = track_[i].success;
            o.agent_path_len = track_[i].odometry;
            o.expert_path_len = expert_lengths_[i];
            o.failure = track_[i].failure;
            o.reached_object = track_[i].reached;
            o.grasped = track_[i].grasped;
            res.subgoals.push_back(o);
        }
        res.total_path_len = world_.robot.odometry;
        res.total_ticks = world_.tick;
        res.failure_class.reset();
        for (const auto& t : track_)
            if (t.failure != metrics::FailureClass::none) {
                res.failure_class = t.failure;
                break;
            }
        if (!res.full_success() && !res.failure_class)
            res.failure_class = metrics::FailureClass::nav_wrong_localization;
        if (res.full_success()) res.failure_class.reset();
    }

    void history(const std::string& action, const std::string& target, const std::string& outcome,
                 int subgoal) {
        memory_.history.push_back({world_.tick, action, target, outcome, subgoal});
    }

    // --- members ----------------------------------------------------------------

    scenario::Scenario scenario_;
    TaskInstruction instruction_;
    Variant variant_;
    VariantPolicy policy_;
    Params params_;
    uint64_t seed_;
    drm::RuleScorer scorer_;
    std::unique_ptr<ext::ProcessHook> scorer_hook_;
    std::unique_ptr<ext::ProcessHook> monitor_hook_;

    world::WorldState world_;
    memory::AgentMemory memory_;
    irm::Clip clip_;
    std::deque<irm::LocalizationRequest> pending_;

    drm::PlanDecision decision_;
    bool has_decision_ = false;
    Activity activity_ = Activity::reconstructing;
    ManipKind manip_kind_ = ManipKind::grasp;
    std::vector<Cell> path_;
    size_t path_pos_ = 0;
    bool route_via_frontier_ = false;
    int blocked_retries_ = 0;
    int recon_left_ = 0;
    std::string recon_cause_;
    bool recon_replan_ = false;
    std::string recon_replan_cause_;
    std::string recon_replan_entity_;
    std::optional<Vec3> recon_prev_target_;
    int align_left_ = 0;
    int adjust_attempts_ = 0;
    std::map<std::string, int> replan_counts_;
    int total_replans_ = 0;
    double traveled_since_update_ = 0.0;
    bool arrival_pending_ = false;
    bool recon_done_pending_ = false;
    std::optional<AttemptOutcome> attempt_outcome_;
    std::string holding_record_;
    int holding_subgoal_ = -1;
    int current_subgoal_ = -1;
    std::vector<Track> track_;
    std::vector<double> expert_lengths_;
    EpisodeLog log_;
    bool done_ = false;
};

inline metrics::EpisodeResult run_episode(const scenario::Scenario& sc,
                                          const TaskInstruction& instruction, Variant variant,
                                          uint64_t seed, const Params& params,
                                          EpisodeLog* log_out = nullptr) {
    Episode episode(sc, instruction, variant, seed, params);
    auto result = episode.run();
    if (log_out) *log_out = episode.take_log();
    return result;
}

}  // namespace binder::executor
