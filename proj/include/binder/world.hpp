#pragma once

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "binder/core.hpp"
#include "binder/params.hpp"

namespace binder::world {

enum class ObjectStatus { free_object, held, placed, removed };

struct WorldObject {
    std::string id;
    std::string category;
    Vec3 position;
    ObjectStatus status = ObjectStatus::free_object;
    std::string placed_on;        // receptacle id when status == placed
    bool event_displaced = false;  // set once a scripted event moved it
};

struct Receptacle {
    std::string id;
    std::string category;
    Vec3 position;
    double surface_height = 0.5;
    bool available = true;
    bool event_displaced = false;
};

struct RobotState {
    Vec2 position;
    double heading = 0.0;
    std::optional<std::string> holding;
    double odometry = 0.0;  // sum of executed step lengths
};

struct Trigger {
    enum class Kind { at_tick, robot_within, phase_entered };
    Kind kind = Kind::at_tick;
    long tick = 0;             // at_tick
    double radius = 0.0;       // robot_within
    std::string target;        // robot_within: object or receptacle id
    Phase phase = Phase::explore;  // phase_entered
};

struct Effect {
    enum class Kind { move_object, move_receptacle, add_object, remove_object, disable_receptacle };
    Kind kind = Kind::move_object;
    std::string id;
    Vec3 position;
    WorldObject object;  // add_object payload
};

struct ScenarioEvent {
    Trigger trigger;
    Effect effect;
    bool fired = false;
};

struct RangeSample {
    double bearing = 0.0;    // relative to robot heading at the stamped tick
    double elevation = 0.0;  // height angle proxy; z reconstructs as elevation * range
    double range = 0.0;      // noisy planar range
};

struct Detection {
    std::string object_id;  // ground truth; hidden from agent policies
    std::string category;
    bool is_receptacle = false;
    bool available = true;  // receptacle availability as visible state
    double bearing_min = 0.0;
    double bearing_max = 0.0;
    std::vector<RangeSample> samples;
};

struct CellSample {
    Cell cell;
    bool occupied = false;
};

struct Observation {
    long tick = 0;
    Vec2 robot_position;
    double robot_heading = 0.0;
    std::vector<Detection> detections;
    std::vector<CellSample> visible_cells;  // filled for panorama views only
};

struct FiredEvent {
    long tick = 0;
    int event_index = -1;
    std::string description;
};

struct WorldState {
    int width = 0;
    int height = 0;
    double cell_size = 0.25;
    long tick = 0;
    Grid<uint8_t> obstacles;
    std::map<std::string, WorldObject> objects;
    std::map<std::string, Receptacle> receptacles;
    RobotState robot;
    std::vector<ScenarioEvent> events;
    uint64_t rng_seed = 1;
    Rng noise_rng{1};
    Rng outcome_rng{2};
    std::deque<Phase> pending_phase_transitions;
    std::vector<FiredEvent> fired_log;  // all fired events, in firing order

    bool in_bounds(Cell c) const { return obstacles.in_bounds(c); }
    bool is_obstacle(Cell c) const { return in_bounds(c) && obstacles.at(c) != 0; }
    Cell robot_cell() const { return cell_of(robot.position, cell_size); }

    long non_removed_count() const {
        long n = 0;
        for (const auto& [id, o] : objects)
            if (o.status != ObjectStatus::removed) ++n;
        return n;
    }
};

inline void seed_world(WorldState& w, uint64_t seed) {
    w.rng_seed = seed;
    w.noise_rng = Rng(seed);
    w.outcome_rng = Rng(seed ^ 0x6a09e667f3bcc909ull);
}

// Grid ray traversal (Amanatides & Woo). True when no obstacle cell lies
// strictly between the cells containing a and b; the endpoint cells
// themselves never block.
inline bool line_of_sight(const WorldState& w, Vec2 a, Vec2 b) {
    const double cs = w.cell_size;
    Cell ca = cell_of(a, cs);
    Cell cb = cell_of(b, cs);
    if (ca == cb) return true;

    double dx = b.x - a.x;
    double dy = b.y - a.y;
    Cell cur = ca;
    int step_x = dx > 0 ? 1 : -1;
    int step_y = dy > 0 ? 1 : -1;
    double t_max_x, t_delta_x, t_max_y, t_delta_y;
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (dx == 0.0) {
        t_max_x = inf;
        t_delta_x = inf;
    } else {
        double next_x = (cur.x + (step_x > 0 ? 1 : 0)) * cs;
        t_max_x = (next_x - a.x) / dx;
        t_delta_x = cs / std::abs(dx);
    }
    if (dy == 0.0) {
        t_max_y = inf;
        t_delta_y = inf;
    } else {
        double next_y = (cur.y + (step_y > 0 ? 1 : 0)) * cs;
        t_max_y = (next_y - a.y) / dy;
        t_delta_y = cs / std::abs(dy);
    }

    int guard = 2 * (w.width + w.height) + 4;
    while (guard-- > 0) {
        if (t_max_x < t_max_y) {
            cur.x += step_x;
            t_max_x += t_delta_x;
        } else if (t_max_y < t_max_x) {
            cur.y += step_y;
            t_max_y += t_delta_y;
        } else {  // exact corner: step diagonally
            cur.x += step_x;
            cur.y += step_y;
            t_max_x += t_delta_x;
            t_max_y += t_delta_y;
        }
        if (cur == cb) return true;
        if (!w.in_bounds(cur)) return false;
        if (w.is_obstacle(cur)) return false;
    }
    return false;
}

namespace detail {

inline bool in_fov(const WorldState& w, Vec2 target, double fov_rad, double max_range,
                   double* out_bearing, double* out_dist) {
    Vec2 d = target - w.robot.position;
    double dist = norm(d);
    if (dist > max_range) return false;
    double bearing = dist < 1e-9 ? 0.0 : wrap_angle(std::atan2(d.y, d.x) - w.robot.heading);
    if (std::abs(bearing) > fov_rad / 2.0 + 1e-12) return false;
    if (out_bearing) *out_bearing = bearing;
    if (out_dist) *out_dist = dist;
    return true;
}

inline Detection make_detection(WorldState& w, const std::string& id, const std::string& category,
                                const Vec3& position, bool is_receptacle, bool available,
                                double bearing, double dist, const Params& p) {
    Detection det;
    det.object_id = id;
    det.category = category;
    det.is_receptacle = is_receptacle;
    det.available = available;
    double d = std::max(dist, 1e-6);
    double half = std::atan2(p.object_radius, d);
    det.bearing_min = bearing - half;
    det.bearing_max = bearing + half;
    // Keep noiseless sample endpoints within 3 sigma of the true position.
    double hw = std::min(half, 3.0 * p.noise_sigma / d);
    double elevation = position.z / d;
    int n = std::max(1, p.range_samples);
    det.samples.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        double frac = n == 1 ? 0.0 : (2.0 * i / (n - 1) - 1.0);
        RangeSample s;
        s.bearing = bearing + frac * hw;
        s.elevation = elevation;
        s.range = dist + w.noise_rng.clamped_gaussian(p.noise_sigma, 3.0 * p.noise_sigma);
        det.samples.push_back(s);
    }
    return det;
}

}  // namespace detail

// Synthetic stand-in for RGB-D sensing: every non-removed object/receptacle
// inside the FOV cone and range whose line of sight crosses no obstacle cell.
// Held objects ride in the gripper and are not reported. When include_cells
// is set, visible cell states are reported as well (panorama views).
inline Observation sense(WorldState& w, double fov_deg, double max_range, const Params& p,
                         bool include_cells = false) {
    Observation obs;
    obs.tick = w.tick;
    obs.robot_position = w.robot.position;
    obs.robot_heading = w.robot.heading;
    const double fov = deg2rad(fov_deg);

    for (const auto& [id, o] : w.objects) {
        if (o.status == ObjectStatus::removed || o.status == ObjectStatus::held) continue;
        double bearing, dist;
        if (!detail::in_fov(w, o.position.planar(), fov, max_range, &bearing, &dist)) continue;
        if (!line_of_sight(w, w.robot.position, o.position.planar())) continue;
        obs.detections.push_back(
            detail::make_detection(w, id, o.category, o.position, false, true, bearing, dist, p));
    }
    for (const auto& [id, r] : w.receptacles) {
        double bearing, dist;
        if (!detail::in_fov(w, r.position.planar(), fov, max_range, &bearing, &dist)) continue;
        if (!line_of_sight(w, w.robot.position, r.position.planar())) continue;
        obs.detections.push_back(
            detail::make_detection(w, id, r.category, r.position, true, r.available, bearing, dist, p));
    }

    if (include_cells) {
        int r_cells = static_cast<int>(std::ceil(max_range / w.cell_size)) + 1;
        Cell rc = w.robot_cell();
        for (int y = std::max(0, rc.y - r_cells); y <= std::min(w.height - 1, rc.y + r_cells); ++y) {
            for (int x = std::max(0, rc.x - r_cells); x <= std::min(w.width - 1, rc.x + r_cells); ++x) {
                Cell c{x, y};
                Vec2 center = cell_center(c, w.cell_size);
                if (!detail::in_fov(w, center, fov, max_range, nullptr, nullptr)) continue;
                if (!(c == rc) && !line_of_sight(w, w.robot.position, center)) continue;
                obs.visible_cells.push_back({c, w.is_obstacle(c)});
            }
        }
    }
    return obs;
}

namespace detail {

inline std::optional<Vec3> entity_position(const WorldState& w, const std::string& id) {
    if (auto it = w.objects.find(id); it != w.objects.end()) {
        if (it->second.status == ObjectStatus::removed) return std::nullopt;
        return it->second.position;
    }
    if (auto it = w.receptacles.find(id); it != w.receptacles.end()) return it->second.position;
    return std::nullopt;
}

inline std::string describe_effect(const Effect& e) {
    switch (e.kind) {
        case Effect::Kind::move_object: return "move_object " + e.id;
        case Effect::Kind::move_receptacle: return "move_receptacle " + e.id;
        case Effect::Kind::add_object: return "add_object " + e.object.id;
        case Effect::Kind::remove_object: return "remove_object " + e.id;
        case Effect::Kind::disable_receptacle: return "disable_receptacle " + e.id;
    }
    return "?";
}

inline void apply_effect(WorldState& w, const Effect& e) {
    switch (e.kind) {
        case Effect::Kind::move_object: {
            auto it = w.objects.find(e.id);
            // held/removed objects cannot be teleported by the script
            if (it == w.objects.end() || it->second.status != ObjectStatus::free_object) return;
            it->second.position = e.position;
            it->second.event_displaced = true;
            return;
        }
        case Effect::Kind::move_receptacle: {
            auto it = w.receptacles.find(e.id);
            if (it == w.receptacles.end()) return;
            it->second.position = e.position;
            it->second.event_displaced = true;
            // placed objects ride along
            for (auto& [oid, o] : w.objects)
                if (o.status == ObjectStatus::placed && o.placed_on == e.id) {
                    o.position = e.position;
                    o.position.z = it->second.surface_height;
                }
            return;
        }
        case Effect::Kind::add_object: {
            if (w.objects.count(e.object.id)) return;
            w.objects.emplace(e.object.id, e.object);
            return;
        }
        case Effect::Kind::remove_object: {
            auto it = w.objects.find(e.id);
            if (it == w.objects.end()) return;
            if (w.robot.holding && *w.robot.holding == e.id) w.robot.holding.reset();
            it->second.status = ObjectStatus::removed;
            return;
        }
        case Effect::Kind::disable_receptacle: {
            auto it = w.receptacles.find(e.id);
            if (it != w.receptacles.end()) it->second.available = false;
            return;
        }
    }
}

}  // namespace detail

// Applies due events between ticks. Phase transitions consume at most one
// pending phase_entered event each (in file order), so scripted perturbation
// sequences fire across repeated phase entries; at_tick/robot_within events
// all fire as soon as their condition holds, in file order.
inline void process_events(WorldState& w) {
    for (Phase ph : w.pending_phase_transitions) {
        for (size_t i = 0; i < w.events.size(); ++i) {
            auto& ev = w.events[i];
            if (ev.fired || ev.trigger.kind != Trigger::Kind::phase_entered) continue;
            if (ev.trigger.phase != ph) continue;
            ev.fired = true;
            detail::apply_effect(w, ev.effect);
            w.fired_log.push_back({w.tick, static_cast<int>(i), detail::describe_effect(ev.effect)});
            break;
        }
    }
    w.pending_phase_transitions.clear();

    for (size_t i = 0; i < w.events.size(); ++i) {
        auto& ev = w.events[i];
        if (ev.fired) continue;
        bool due = false;
        switch (ev.trigger.kind) {
            case Trigger::Kind::at_tick:
                due = w.tick >= ev.trigger.tick;
                break;
            case Trigger::Kind::robot_within: {
                auto pos = detail::entity_position(w, ev.trigger.target);
                due = pos && distance(w.robot.position, pos->planar()) <= ev.trigger.radius;
                break;
            }
            case Trigger::Kind::phase_entered:
                break;  // handled above
        }
        if (due) {
            ev.fired = true;
            detail::apply_effect(w, ev.effect);
            w.fired_log.push_back({w.tick, static_cast<int>(i), detail::describe_effect(ev.effect)});
        }
    }
}

inline void notify_phase(WorldState& w, Phase p) { w.pending_phase_transitions.push_back(p); }

inline void advance_tick(WorldState& w) {
    w.tick += 1;
    process_events(w);
}

enum class MotionCode { ok, blocked, not_adjacent };

struct MotionResult {
    MotionCode code = MotionCode::ok;
    bool ok() const { return code == MotionCode::ok; }
};

// Moves the robot one 4-adjacent cell. A blocked target still costs the tick
// (the robot tried and stopped), signalling a planner/occupancy mismatch.
inline MotionResult step_motion(WorldState& w, Cell target) {
    Cell rc = w.robot_cell();
    if (manhattan(rc, target) != 1 || !w.in_bounds(target)) return {MotionCode::not_adjacent};
    if (w.is_obstacle(target)) {
        advance_tick(w);
        return {MotionCode::blocked};
    }
    Vec2 from = w.robot.position;
    w.robot.position = cell_center(target, w.cell_size);
    w.robot.heading = std::atan2(w.robot.position.y - from.y, w.robot.position.x - from.x);
    w.robot.odometry += w.cell_size;
    advance_tick(w);
    return {MotionCode::ok};
}

enum class GraspCode { success, misaligned, slipped, out_of_range, already_holding, object_missing, not_free };

struct GraspResult {
    GraspCode code = GraspCode::success;
    bool ok() const { return code == GraspCode::success; }
};

inline const char* grasp_code_name(GraspCode c) {
    switch (c) {
        case GraspCode::success: return "success";
        case GraspCode::misaligned: return "misaligned";
        case GraspCode::slipped: return "slipped";
        case GraspCode::out_of_range: return "out_of_range";
        case GraspCode::already_holding: return "already_holding";
        case GraspCode::object_missing: return "object_missing";
        case GraspCode::not_free: return "not_free";
    }
    return "?";
}

// Parametric grasp outcome: success iff aligned within tolerance and the
// seeded Bernoulli draw succeeds. An event-displaced object out of reach
// reports object_missing (stale registry) instead of out_of_range.
inline GraspResult attempt_grasp(WorldState& w, const std::string& object_id,
                                 double alignment_error, const Params& p) {
    auto finish = [&](GraspCode c) {
        advance_tick(w);
        return GraspResult{c};
    };
    auto it = w.objects.find(object_id);
    if (it == w.objects.end() || it->second.status == ObjectStatus::removed)
        return finish(GraspCode::object_missing);
    if (w.robot.holding) return finish(GraspCode::already_holding);
    WorldObject& o = it->second;
    if (o.status != ObjectStatus::free_object) return finish(GraspCode::not_free);
    double dist = distance(w.robot.position, o.position.planar());
    if (dist > p.grasp_range)
        return finish(o.event_displaced ? GraspCode::object_missing : GraspCode::out_of_range);
    if (alignment_error > p.align_tol) return finish(GraspCode::misaligned);
    if (!w.outcome_rng.bernoulli(p.p_grasp)) return finish(GraspCode::slipped);
    o.status = ObjectStatus::held;
    w.robot.holding = object_id;
    return finish(GraspCode::success);
}

enum class PlaceCode { success, dropped, not_holding, out_of_range, unavailable };

struct PlaceResult {
    PlaceCode code = PlaceCode::success;
    bool ok() const { return code == PlaceCode::success; }
};

inline const char* place_code_name(PlaceCode c) {
    switch (c) {
        case PlaceCode::success: return "success";
        case PlaceCode::dropped: return "dropped";
        case PlaceCode::not_holding: return "not_holding";
        case PlaceCode::out_of_range: return "out_of_range";
        case PlaceCode::unavailable: return "unavailable";
    }
    return "?";
}

inline PlaceResult attempt_place(WorldState& w, const std::string& receptacle_id, const Params& p) {
    auto finish = [&](PlaceCode c) {
        advance_tick(w);
        return PlaceResult{c};
    };
    if (!w.robot.holding) return finish(PlaceCode::not_holding);
    auto it = w.receptacles.find(receptacle_id);
    if (it == w.receptacles.end()) return finish(PlaceCode::unavailable);
    Receptacle& r = it->second;
    if (!r.available) return finish(PlaceCode::unavailable);
    double dist = distance(w.robot.position, r.position.planar());
    if (dist > p.place_range)
        return finish(r.event_displaced ? PlaceCode::unavailable : PlaceCode::out_of_range);
    WorldObject& o = w.objects.at(*w.robot.holding);
    if (!w.outcome_rng.bernoulli(p.p_place)) {
        o.status = ObjectStatus::free_object;
        o.position = {w.robot.position.x, w.robot.position.y, 0.0};
        w.robot.holding.reset();
        return finish(PlaceCode::dropped);
    }
    o.status = ObjectStatus::placed;
    o.placed_on = receptacle_id;
    o.position = r.position;
    o.position.z = r.surface_height;
    w.robot.holding.reset();
    return finish(PlaceCode::success);
}

// Physical resolution of "close the gripper at this position": the nearest
// free object, if any lies within reach.
inline std::string nearest_object(const WorldState& w, Vec2 at, double max_dist) {
    std::string best;
    double best_d = max_dist;
    for (const auto& [id, o] : w.objects) {
        if (o.status != ObjectStatus::free_object) continue;
        double d = distance(at, o.position.planar());
        if (d < best_d || (d == best_d && (best.empty() || id < best))) {
            best_d = d;
            best = id;
        }
    }
    return best;
}

inline std::string nearest_receptacle(const WorldState& w, Vec2 at, double max_dist) {
    std::string best;
    double best_d = max_dist;
    for (const auto& [id, r] : w.receptacles) {
        double d = distance(at, r.position.planar());
        if (d < best_d || (d == best_d && (best.empty() || id < best))) {
            best_d = d;
            best = id;
        }
    }
    return best;
}

}  // namespace binder::world
