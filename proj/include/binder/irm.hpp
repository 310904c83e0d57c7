#pragma once

#include <deque>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "binder/drm.hpp"
#include "binder/memory.hpp"
#include "binder/world.hpp"

namespace binder::irm {

// Sliding window of the most recent observations.
struct Clip {
    std::deque<world::Observation> frames;
    int window = 8;

    void push(world::Observation obs) {
        frames.push_back(std::move(obs));
        while (static_cast<int>(frames.size()) > window) frames.pop_front();
    }
    bool empty() const { return frames.empty(); }
    const world::Observation& last() const { return frames.back(); }
};

enum class ProgressFlag { approaching_target, gripper_aligned, object_stable };
enum class AnomalyFlag { misalignment, object_shifted, receptacle_unavailable, target_appeared, grasp_slipping };

inline const char* anomaly_flag_name(AnomalyFlag f) {
    switch (f) {
        case AnomalyFlag::misalignment: return "misalignment";
        case AnomalyFlag::object_shifted: return "object_shifted";
        case AnomalyFlag::receptacle_unavailable: return "receptacle_unavailable";
        case AnomalyFlag::target_appeared: return "target_appeared";
        case AnomalyFlag::grasp_slipping: return "grasp_slipping";
    }
    return "?";
}

struct Mention {
    std::string category;       // as detected
    std::string matched_entity; // watch entity (or guidance target) it matched
    double bearing_min = 0.0;
    double bearing_max = 0.0;
    double salience = 0.0;      // match similarity
    Vec3 est_position;          // last-frame estimate
    world::Detection source;    // for the asynchronous localization step
    Vec2 pose;
    double pose_heading = 0.0;
    long frame_tick = 0;
};

// Structured report; the free-form text is informational only and never
// consumed by parsing.
struct Report {
    long tick = 0;
    std::vector<Mention> mentions;
    std::set<ProgressFlag> progress_flags;
    std::set<AnomalyFlag> anomaly_flags;
    double shift_distance = 0.0;
    double alignment_error = -1.0;  // <0: not measured
    std::string text;
};

enum class Mode { continue_, adjust, replan };

inline const char* mode_name(Mode m) {
    switch (m) {
        case Mode::continue_: return "CONTINUE";
        case Mode::adjust: return "ADJUST";
        case Mode::replan: return "REPLAN";
    }
    return "?";
}

struct LocalizationRequest {
    std::string category;
    world::Detection detection;
    Vec2 pose;
    double pose_heading = 0.0;
    long spawn_tick = 0;
    long resolve_tick = 0;  // stamped by the executor queue
};

struct ParseResult {
    std::vector<std::pair<std::string, Vec3>> detections;  // X_t (quick estimates)
    Mode mode = Mode::continue_;
    std::string cause;         // anomaly flag that forced escalation
    std::string cause_entity;  // watch entity behind a target_appeared replan
    std::vector<LocalizationRequest> requests;
};

// Entity with maximum similarity at or above theta; ties resolve to the
// earliest entry in watch order.
inline std::optional<std::string> match_entity(const std::string& category,
                                               std::span<const std::string> watch, double theta) {
    std::optional<std::string> best;
    double best_sim = 0.0;
    for (const auto& entity : watch) {
        double sim = embedding::text_similarity(category, entity);
        if (sim >= theta && sim > best_sim) {
            best_sim = sim;
            best = entity;
        }
    }
    return best;
}

// Median-projection localization of a detection under its stamped pose.
inline std::optional<Vec3> localize(const world::Detection& det, Vec2 pose, double heading) {
    if (det.samples.empty()) return std::nullopt;  // NoSamples
    return memory::localize_detection(det, pose, heading);
}

namespace detail {

// Per-frame position track of the best detection matching a category.
inline std::vector<std::pair<long, Vec3>> track_category(const Clip& clip,
                                                         const std::string& category,
                                                         double theta) {
    std::vector<std::pair<long, Vec3>> track;
    for (const auto& frame : clip.frames) {
        const world::Detection* best = nullptr;
        double best_sim = 0.0;
        for (const auto& det : frame.detections) {
            double sim = embedding::text_similarity(det.category, category);
            if (sim >= theta && sim > best_sim) {
                best_sim = sim;
                best = &det;
            }
        }
        if (best) {
            auto p = localize(*best, frame.robot_position, frame.robot_heading);
            if (p) track.push_back({frame.tick, *p});
        }
    }
    return track;
}

inline bool position_in_view(const world::Observation& frame, Vec2 target, double fov_deg,
                             double max_range) {
    Vec2 d = target - frame.robot_position;
    double dist = norm(d);
    if (dist > max_range * 0.9) return false;
    double bearing = dist < 1e-9 ? 0.0 : wrap_angle(std::atan2(d.y, d.x) - frame.robot_heading);
    return std::abs(bearing) <= deg2rad(fov_deg) / 2.0 * 0.9;
}

}  // namespace detail

// Deterministic rule substitute for the clip monitor: mentions are detections
// matching the guidance watch list (plus the action target, so its position
// keeps refreshing); anomaly flags derive from guidance.anomaly_checks
// against clip evidence.
inline Report monitor(const Clip& clip, const drm::GuidancePrompt& guidance, const Params& p) {
    Report report;
    if (clip.empty()) return report;
    const auto& last = clip.last();
    report.tick = last.tick;

    std::vector<std::string> match_set = guidance.watch_entities;
    if (guidance.has_target &&
        std::find(match_set.begin(), match_set.end(), guidance.target_category) == match_set.end())
        match_set.push_back(guidance.target_category);

    for (const auto& det : last.detections) {
        auto entity = match_entity(det.category, match_set, p.theta_match);
        if (!entity) continue;
        Mention m;
        m.category = det.category;
        m.matched_entity = *entity;
        m.bearing_min = det.bearing_min;
        m.bearing_max = det.bearing_max;
        m.salience = embedding::text_similarity(det.category, *entity);
        m.source = det;
        m.pose = last.robot_position;
        m.pose_heading = last.robot_heading;
        m.frame_tick = last.tick;
        if (auto pos = localize(det, last.robot_position, last.robot_heading)) m.est_position = *pos;
        report.mentions.push_back(std::move(m));
        bool is_watch = std::find(guidance.watch_entities.begin(), guidance.watch_entities.end(),
                                  *entity) != guidance.watch_entities.end();
        if (is_watch) report.anomaly_flags.insert(AnomalyFlag::target_appeared);
    }

    const bool check_shift = guidance.anomaly_checks.count(drm::AnomalyCheck::target_shift) > 0;
    const bool check_align = guidance.anomaly_checks.count(drm::AnomalyCheck::alignment) > 0;
    const bool check_avail = guidance.anomaly_checks.count(drm::AnomalyCheck::availability) > 0;
    const bool check_stab = guidance.anomaly_checks.count(drm::AnomalyCheck::stability) > 0;

    if (check_shift) {
        // Tracked categories: the guided target, else everything watched.
        std::vector<std::string> tracked;
        if (guidance.has_target)
            tracked.push_back(guidance.target_category);
        else
            tracked = guidance.watch_entities;
        double worst = 0.0;
        for (const auto& cat : tracked) {
            auto track = detail::track_category(clip, cat, p.theta_match);
            if (track.empty()) continue;
            double spread = 0.0;
            for (size_t i = 0; i < track.size(); ++i)
                for (size_t j = i + 1; j < track.size(); ++j)
                    spread = std::max(spread, planar_distance(track[i].second, track[j].second));
            double dev = 0.0;
            if (guidance.has_target && track.back().first == last.tick)
                dev = planar_distance(track.back().second, guidance.target_position);
            worst = std::max(worst, std::max(spread, dev));
            if (std::max(spread, dev) > p.shift_tol) {
                report.anomaly_flags.insert(AnomalyFlag::object_shifted);
                report.shift_distance = std::max(report.shift_distance,
                                                 guidance.has_target ? std::max(dev, spread) : spread);
            }
        }
        (void)worst;
    }

    if ((check_align || check_stab || check_avail) && guidance.has_target) {
        auto track = detail::track_category(clip, guidance.target_category, p.theta_match);
        bool seen_last = !track.empty() && track.back().first == last.tick;
        if (check_align && seen_last) {
            double err = planar_distance(track.back().second, guidance.target_position);
            report.alignment_error = err;
            if (err > p.align_tol)
                report.anomaly_flags.insert(AnomalyFlag::misalignment);
            else
                report.progress_flags.insert(ProgressFlag::gripper_aligned);
        }
        if (check_avail && guidance.target_is_receptacle) {
            bool expected_in_view =
                detail::position_in_view(last, guidance.target_position.planar(), p.fov_deg, p.max_range);
            if (expected_in_view) {
                bool found = false;
                bool found_available = true;
                for (const auto& det : last.detections) {
                    if (embedding::text_similarity(det.category, guidance.target_category) < p.theta_match)
                        continue;
                    auto pos = localize(det, last.robot_position, last.robot_heading);
                    if (pos && planar_distance(*pos, guidance.target_position) <= p.merge_radius) {
                        found = true;
                        found_available = det.available;
                        break;
                    }
                }
                if (!found || !found_available)
                    report.anomaly_flags.insert(AnomalyFlag::receptacle_unavailable);
            }
        }
    }

    if (check_stab && !guidance.held_category.empty()) {
        for (const auto& det : last.detections) {
            if (embedding::text_similarity(det.category, guidance.held_category) < p.theta_match)
                continue;
            auto pos = localize(det, last.robot_position, last.robot_heading);
            if (pos && distance(pos->planar(), last.robot_position) > 0.8) {
                report.anomaly_flags.insert(AnomalyFlag::grasp_slipping);
                break;
            }
        }
        if (!report.anomaly_flags.count(AnomalyFlag::grasp_slipping))
            report.progress_flags.insert(ProgressFlag::object_stable);
    }

    std::string summary = "phase=" + std::string(phase_name(guidance.phase));
    summary += " mentions=" + std::to_string(report.mentions.size());
    for (auto f : report.anomaly_flags) summary += std::string(" ") + anomaly_flag_name(f);
    report.text = summary;
    return report;
}

// Guidance-conditioned parsing: detections become localization requests; the
// execution mode resolves by severity (REPLAN > ADJUST > CONTINUE). A watched
// entity already registered within merge_radius never re-triggers a replan.
inline ParseResult parse(const Report& report, const drm::GuidancePrompt& guidance,
                         const memory::ObjectRegistry& registry, const Params& p) {
    ParseResult out;

    for (const auto& m : report.mentions) {
        out.detections.push_back({m.category, m.est_position});
        LocalizationRequest req;
        req.category = m.category;
        req.detection = m.source;
        req.pose = m.pose;
        req.pose_heading = m.pose_heading;
        req.spawn_tick = m.frame_tick;
        out.requests.push_back(std::move(req));
    }

    const bool manipulation_phase =
        guidance.phase == Phase::grasp || guidance.phase == Phase::place;

    std::string replan_cause;
    std::string replan_entity;
    if (report.anomaly_flags.count(AnomalyFlag::target_appeared)) {
        for (const auto& m : report.mentions) {
            bool is_watch = std::find(guidance.watch_entities.begin(), guidance.watch_entities.end(),
                                      m.matched_entity) != guidance.watch_entities.end();
            if (!is_watch) continue;
            bool suppressed = false;
            for (const auto& r : registry.records) {
                if (r.stale) continue;
                if (embedding::text_similarity(r.category, m.matched_entity) < p.theta_match) continue;
                if (planar_distance(r.position, m.est_position) <= p.merge_radius) {
                    suppressed = true;
                    break;
                }
            }
            if (!suppressed) {
                replan_cause = anomaly_flag_name(AnomalyFlag::target_appeared);
                replan_entity = m.matched_entity;
                break;
            }
        }
    }
    if (replan_cause.empty() && report.anomaly_flags.count(AnomalyFlag::receptacle_unavailable))
        replan_cause = anomaly_flag_name(AnomalyFlag::receptacle_unavailable);
    if (replan_cause.empty() && report.anomaly_flags.count(AnomalyFlag::object_shifted) &&
        guidance.phase == Phase::navigate && report.shift_distance > p.reroute_tol)
        replan_cause = anomaly_flag_name(AnomalyFlag::object_shifted);

    if (!replan_cause.empty()) {
        out.mode = Mode::replan;
        out.cause = replan_cause;
        out.cause_entity = replan_entity;
        return out;
    }

    if (manipulation_phase) {
        if (report.anomaly_flags.count(AnomalyFlag::misalignment)) {
            out.mode = Mode::adjust;
            out.cause = anomaly_flag_name(AnomalyFlag::misalignment);
            return out;
        }
        if (report.anomaly_flags.count(AnomalyFlag::grasp_slipping)) {
            out.mode = Mode::adjust;
            out.cause = anomaly_flag_name(AnomalyFlag::grasp_slipping);
            return out;
        }
        if (report.anomaly_flags.count(AnomalyFlag::object_shifted)) {
            out.mode = Mode::adjust;  // local correction, not a full replan
            out.cause = anomaly_flag_name(AnomalyFlag::object_shifted);
            return out;
        }
    }
    return out;
}

}  // namespace binder::irm
