#pragma once

#include <optional>
#include <string>
#include <vector>

#include "binder/metrics.hpp"
#include "binder/scenario.hpp"

namespace binder::harness {

struct UnreachableScenario : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Layout family + entity pools + perturbation policy for seeded sampling.
struct TemplateSpec {
    std::string name = "office";
    int width = 30;
    int height = 30;
    double cell_size = 0.25;
    int furniture_blocks = 10;
    int receptacle_count = 5;
    int distractor_count = 3;
    bool room_walls = false;  // three-room layout with doorways
    long max_ticks_base = 900;
    long max_ticks_per_subgoal = 500;
    std::vector<std::string> receptacle_pool = {"table", "shelf", "bin", "sofa", "counter", "desk"};
    std::vector<std::string> object_pool = {"banana", "apple",  "coke can", "mug",
                                            "book",   "toy car", "bottle",   "plushie"};
};

inline TemplateSpec office_template() { return {}; }

inline TemplateSpec studio_template() {
    TemplateSpec t;
    t.name = "studio";
    t.width = 22;
    t.height = 22;
    t.furniture_blocks = 7;
    t.receptacle_count = 4;
    t.distractor_count = 2;
    t.max_ticks_base = 800;
    return t;
}

inline TemplateSpec three_room_template() {
    TemplateSpec t;
    t.name = "three_room";
    t.width = 36;
    t.height = 24;
    t.furniture_blocks = 8;
    t.receptacle_count = 5;
    t.distractor_count = 3;
    t.room_walls = true;
    t.max_ticks_base = 1100;
    t.max_ticks_per_subgoal = 600;
    return t;
}

inline std::optional<TemplateSpec> template_by_name(const std::string& name) {
    if (name == "office") return office_template();
    if (name == "studio") return studio_template();
    if (name == "three_room") return three_room_template();
    return std::nullopt;
}

// The paper-shaped dynamics protocol: per query, one object perturbation
// (moved during approach, or displaced as the grasp starts, sometimes
// repeatedly) and one receptacle relocation during transport.
struct PerturbPolicy {
    bool enabled = true;
    double p_approach_move = 0.35;        // cumulative bands over one draw
    double p_grasp_displacement = 0.30;
    double p_hard_repeat = 0.15;
    int hard_repeat_events = 4;
    double approach_move_min = 0.25, approach_move_max = 0.45;
    double approach_trigger_radius = 2.5;
    double grasp_disp_min = 0.10, grasp_disp_max = 0.20;
    double p_receptacle_move = 0.75;
    double rec_move_min = 1.5, rec_move_max = 3.5;
    double rec_trigger_radius = 2.0;
};

namespace gen_detail {

struct Block {
    Cell anchor;
    int w = 1, h = 1;
    bool has_receptacle = false;

    Vec2 center(double cs) const {
        return {(anchor.x + w / 2.0) * cs, (anchor.y + h / 2.0) * cs};
    }
};

inline bool blocks_clear(const std::vector<Block>& blocks, Cell anchor, int w, int h, int gap) {
    for (const auto& b : blocks) {
        bool overlap_x = anchor.x - gap < b.anchor.x + b.w && b.anchor.x - gap < anchor.x + w;
        bool overlap_y = anchor.y - gap < b.anchor.y + b.h && b.anchor.y - gap < anchor.y + h;
        if (overlap_x && overlap_y) return false;
    }
    return true;
}

inline bool connected(const scenario::Scenario& s) {
    Grid<uint8_t> obst(s.width, s.height, 0);
    for (Cell c : s.obstacles) obst.at(c) = 1;
    Cell start = cell_of(s.robot_start, s.cell_size);
    if (obst.at(start)) return false;
    std::vector<uint8_t> seen(static_cast<size_t>(s.width) * s.height, 0);
    std::vector<Cell> stack{start};
    seen[cell_index(start, s.width)] = 1;
    long reached = 0;
    while (!stack.empty()) {
        Cell c = stack.back();
        stack.pop_back();
        ++reached;
        const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
            Cell n{c.x + dx[k], c.y + dy[k]};
            if (!obst.in_bounds(n) || obst.at(n)) continue;
            auto& m = seen[cell_index(n, s.width)];
            if (!m) {
                m = 1;
                stack.push_back(n);
            }
        }
    }
    long free_total = static_cast<long>(s.width) * s.height - static_cast<long>(s.obstacles.size());
    return reached == free_total;
}

// A spot is graspable if its own cell or a 4-neighbor is free floor.
inline bool reachable_spot(const scenario::Scenario& s, Vec2 p) {
    Grid<uint8_t> obst(s.width, s.height, 0);
    for (Cell c : s.obstacles) obst.at(c) = 1;
    Cell c = cell_of(p, s.cell_size);
    if (!obst.in_bounds(c)) return false;
    if (!obst.at(c)) return true;
    const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
        Cell n{c.x + dx[k], c.y + dy[k]};
        if (obst.in_bounds(n) && !obst.at(n)) return true;
    }
    return false;
}

}  // namespace gen_detail

// One seeded scenario draw; returns nullopt when the sampled layout fails
// validation (caller retries with the next attempt seed).
inline std::optional<scenario::Scenario> try_generate(const TemplateSpec& tmpl, int task_size,
                                                      uint64_t seed, const PerturbPolicy& perturb,
                                                      const Params& params) {
    Rng rng(seed);
    scenario::Scenario s;
    s.width = tmpl.width;
    s.height = tmpl.height;
    s.cell_size = tmpl.cell_size;
    s.seed = seed;

    // room walls with doorways (three-room layout)
    if (tmpl.room_walls) {
        for (int wall_x : {tmpl.width / 3, 2 * tmpl.width / 3}) {
            int door_y = rng.uniform_int(3, tmpl.height - 5);
            for (int y = 0; y < tmpl.height; ++y) {
                if (y >= door_y && y <= door_y + 2) continue;
                s.obstacles.push_back({wall_x, y});
            }
        }
    }

    // furniture blocks with clearance
    std::vector<gen_detail::Block> blocks;
    int tries = 0;
    while (static_cast<int>(blocks.size()) < tmpl.furniture_blocks && tries++ < 400) {
        gen_detail::Block b;
        b.w = rng.uniform_int(1, 2);
        b.h = rng.uniform_int(1, 2);
        b.anchor = {rng.uniform_int(2, tmpl.width - 2 - b.w), rng.uniform_int(4, tmpl.height - 2 - b.h)};
        if (!gen_detail::blocks_clear(blocks, b.anchor, b.w, b.h, 2)) continue;
        if (tmpl.room_walls) {
            bool near_wall = false;
            for (int wall_x : {tmpl.width / 3, 2 * tmpl.width / 3})
                if (std::abs(b.anchor.x - wall_x) <= 2 || std::abs(b.anchor.x + b.w - wall_x) <= 2)
                    near_wall = true;
            if (near_wall) continue;
        }
        blocks.push_back(b);
        for (int y = b.anchor.y; y < b.anchor.y + b.h; ++y)
            for (int x = b.anchor.x; x < b.anchor.x + b.w; ++x) s.obstacles.push_back({x, y});
    }
    if (static_cast<int>(blocks.size()) < tmpl.receptacle_count + 2) return std::nullopt;

    // robot starts near the bottom edge on a free cell
    s.robot_start = cell_center({tmpl.width / 2, 1}, tmpl.cell_size);
    s.robot_heading = deg2rad(90.0);
    if (!gen_detail::connected(s)) return std::nullopt;

    // receptacles on distinct blocks
    std::vector<std::string> rec_pool = tmpl.receptacle_pool;
    std::vector<int> block_order(blocks.size());
    for (size_t i = 0; i < blocks.size(); ++i) block_order[i] = static_cast<int>(i);
    for (size_t i = block_order.size(); i > 1; --i)
        std::swap(block_order[i - 1], block_order[rng.uniform_int(0, static_cast<int>(i) - 1)]);
    int n_rec = std::min<int>(tmpl.receptacle_count, static_cast<int>(rec_pool.size()));
    for (int i = 0; i < n_rec; ++i) {
        auto& block = blocks[block_order[i]];
        block.has_receptacle = true;
        world::Receptacle r;
        r.id = "rec" + std::to_string(i);
        r.category = rec_pool[i];
        Vec2 c = block.center(tmpl.cell_size);
        r.position = {c.x, c.y, 0.5};
        r.surface_height = 0.5;
        s.receptacles.push_back(r);
    }

    // task objects near furniture, distractors anywhere free
    auto place_object = [&](const std::string& id, const std::string& category) -> bool {
        for (int attempt = 0; attempt < 60; ++attempt) {
            const auto& b = blocks[rng.uniform_int(0, static_cast<int>(blocks.size()) - 1)];
            Cell c{b.anchor.x + rng.uniform_int(-2, b.w + 1), b.anchor.y + rng.uniform_int(-2, b.h + 1)};
            if (c.x < 1 || c.y < 1 || c.x >= tmpl.width - 1 || c.y >= tmpl.height - 1) continue;
            Vec2 p = cell_center(c, tmpl.cell_size);
            bool occupied = false;
            for (Cell oc : s.obstacles)
                if (oc == c) occupied = true;
            if (occupied) continue;
            for (const auto& o : s.objects)
                if (distance(o.position.planar(), p) < 0.4) occupied = true;
            if (occupied || distance(p, s.robot_start) < 1.0) continue;
            world::WorldObject o;
            o.id = id;
            o.category = category;
            o.position = {p.x, p.y, 0.1};
            s.objects.push_back(o);
            return true;
        }
        return false;
    };

    std::vector<std::string> obj_pool = tmpl.object_pool;
    for (size_t i = obj_pool.size(); i > 1; --i)
        std::swap(obj_pool[i - 1], obj_pool[rng.uniform_int(0, static_cast<int>(i) - 1)]);
    int n_task = task_size;
    if (n_task + tmpl.distractor_count > static_cast<int>(obj_pool.size())) return std::nullopt;
    for (int i = 0; i < n_task; ++i)
        if (!place_object("obj" + std::to_string(i), obj_pool[i])) return std::nullopt;
    for (int i = 0; i < tmpl.distractor_count; ++i)
        if (!place_object("dis" + std::to_string(i), obj_pool[n_task + i])) return std::nullopt;

    // instruction: object_i -> receptacle_(shuffled)
    std::vector<int> rec_order(n_rec);
    for (int i = 0; i < n_rec; ++i) rec_order[i] = i;
    for (size_t i = rec_order.size(); i > 1; --i)
        std::swap(rec_order[i - 1], rec_order[rng.uniform_int(0, static_cast<int>(i) - 1)]);
    for (int i = 0; i < n_task; ++i) {
        const auto& obj = s.objects[i];
        const auto& rec = s.receptacles[rec_order[i % n_rec]];
        s.instruction.subgoals.push_back({obj.category, rec.category});
    }
    {
        std::string text;
        for (const auto& sg : s.instruction.subgoals) {
            if (!text.empty()) text += ", ";
            text += "move the " + sg.object_query + " to the " + sg.receptacle_query;
        }
        s.instruction.text = text;
    }

    // dynamics: two position perturbations per query
    if (perturb.enabled) {
        for (int i = 0; i < n_task; ++i) {
            const auto& obj = s.objects[i];
            double u = rng.uniform();
            if (u < perturb.p_approach_move) {
                double dist = rng.uniform(perturb.approach_move_min, perturb.approach_move_max);
                bool placed = false;
                for (int attempt = 0; attempt < 30 && !placed; ++attempt) {
                    double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
                    Vec3 np{obj.position.x + dist * std::cos(ang),
                            obj.position.y + dist * std::sin(ang), obj.position.z};
                    if (np.x < 0.3 || np.y < 0.3 || np.x > (tmpl.width - 1) * tmpl.cell_size ||
                        np.y > (tmpl.height - 1) * tmpl.cell_size)
                        continue;
                    if (!gen_detail::reachable_spot(s, np.planar())) continue;
                    world::ScenarioEvent ev;
                    ev.trigger = {world::Trigger::Kind::robot_within, 0,
                                  perturb.approach_trigger_radius, obj.id, Phase::explore};
                    ev.effect.kind = world::Effect::Kind::move_object;
                    ev.effect.id = obj.id;
                    ev.effect.position = np;
                    s.events.push_back(ev);
                    placed = true;
                }
            } else if (u < perturb.p_approach_move + perturb.p_grasp_displacement +
                               perturb.p_hard_repeat) {
                bool hard = u >= perturb.p_approach_move + perturb.p_grasp_displacement;
                int n_events = hard ? perturb.hard_repeat_events : 1;
                double dist = rng.uniform(perturb.grasp_disp_min, perturb.grasp_disp_max);
                double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
                for (int e = 0; e < n_events; ++e) {
                    double sign = (e % 2 == 0) ? 1.0 : -1.0;
                    Vec3 np{obj.position.x + sign * dist * std::cos(ang),
                            obj.position.y + sign * dist * std::sin(ang), obj.position.z};
                    np.x = std::clamp(np.x, 0.3, (tmpl.width - 1) * tmpl.cell_size);
                    np.y = std::clamp(np.y, 0.3, (tmpl.height - 1) * tmpl.cell_size);
                    world::ScenarioEvent ev;
                    ev.trigger = {world::Trigger::Kind::phase_entered, 0, 0.0, "", Phase::grasp};
                    ev.effect.kind = world::Effect::Kind::move_object;
                    ev.effect.id = obj.id;
                    ev.effect.position = np;
                    s.events.push_back(ev);
                }
            }
            if (rng.uniform() < perturb.p_receptacle_move) {
                const auto& rec = s.receptacles[rec_order[i % n_rec]];
                // relocate onto a spare block within the move band when possible
                int best_block = -1;
                double best_err = std::numeric_limits<double>::max();
                for (size_t bi = 0; bi < blocks.size(); ++bi) {
                    if (blocks[bi].has_receptacle) continue;
                    double d = distance(blocks[bi].center(tmpl.cell_size), rec.position.planar());
                    double err = 0.0;
                    if (d < perturb.rec_move_min) err = perturb.rec_move_min - d;
                    if (d > perturb.rec_move_max) err = d - perturb.rec_move_max;
                    if (err < best_err) {
                        best_err = err;
                        best_block = static_cast<int>(bi);
                    }
                }
                if (best_block >= 0) {
                    Vec2 c = blocks[best_block].center(tmpl.cell_size);
                    world::ScenarioEvent ev;
                    ev.trigger = {world::Trigger::Kind::robot_within, 0, perturb.rec_trigger_radius,
                                  rec.id, Phase::explore};
                    ev.effect.kind = world::Effect::Kind::move_receptacle;
                    ev.effect.id = rec.id;
                    ev.effect.position = {c.x, c.y, rec.position.z};
                    s.events.push_back(ev);
                }
            }
        }
    }

    s.param_overrides["max_ticks"] = tmpl.max_ticks_base + tmpl.max_ticks_per_subgoal * task_size;

    try {
        scenario::validate(s);
        Params p = scenario::scenario_params(s, params);
        // reachable both in the initial layout and after all perturbations
        scenario::Scenario initial = s;
        initial.events.clear();
        metrics::expert_path_oracle(initial, s.instruction, p);
        metrics::expert_path_oracle(s, s.instruction, p);
    } catch (const std::exception&) {
        return std::nullopt;
    }
    return s;
}

// Seeded sampling with reachability validation and bounded resampling.
inline std::vector<scenario::Scenario> generate_scenarios(const TemplateSpec& tmpl, int count,
                                                          int task_size, uint64_t seed,
                                                          const PerturbPolicy& perturb,
                                                          const Params& params) {
    std::vector<scenario::Scenario> out;
    uint64_t attempt = 0;
    const uint64_t max_attempts = static_cast<uint64_t>(count) * 40 + 40;
    while (static_cast<int>(out.size()) < count && attempt < max_attempts) {
        uint64_t sub_seed = fnv1a64(tmpl.name + ":" + std::to_string(seed) + ":" +
                                    std::to_string(attempt));
        ++attempt;
        auto s = try_generate(tmpl, task_size, sub_seed, perturb, params);
        if (!s) continue;
        s->name = tmpl.name + "_t" + std::to_string(task_size) + "_" +
                  std::to_string(out.size());
        out.push_back(std::move(*s));
    }
    if (static_cast<int>(out.size()) < count)
        throw UnreachableScenario("could not generate " + std::to_string(count) +
                                  " valid scenarios for template " + tmpl.name);
    return out;
}

// --- scripted mechanism scenarios -------------------------------------------

// Object absent at start; it appears next to the exploration route while the
// robot is in transit. Open room, receptacle visible from the start.
inline scenario::Scenario make_enroute_appearance(uint64_t seed, const Params& params) {
    Rng rng(seed);
    scenario::Scenario s;
    s.name = "enroute_appearance_" + std::to_string(seed);
    s.width = 36;
    s.height = 12;
    s.cell_size = 0.25;
    s.seed = seed;
    s.robot_start = cell_center({2, 6}, s.cell_size);
    s.robot_heading = 0.0;

    world::Receptacle table;
    table.id = "rec0";
    table.category = "table";
    table.position = {1.0 + rng.uniform(0.0, 0.25), 1.25, 0.5};
    table.position.x = cell_center(cell_of(table.position.planar(), s.cell_size), s.cell_size).x;
    table.position.y = cell_center(cell_of(table.position.planar(), s.cell_size), s.cell_size).y;
    s.receptacles.push_back(table);
    s.obstacles.push_back(cell_of(table.position.planar(), s.cell_size));

    // distant landmark so exploration heads right
    world::Receptacle shelf;
    shelf.id = "rec1";
    shelf.category = "shelf";
    shelf.position = {8.25, 1.25, 0.5};
    s.receptacles.push_back(shelf);
    s.obstacles.push_back(cell_of(shelf.position.planar(), s.cell_size));

    s.instruction.subgoals.push_back({"apple", "table"});
    s.instruction.text = "move the apple to the table";

    // the apple pops up ahead of the route shortly after departure
    long appear_tick = params.reconstruct_ticks + 8 + rng.uniform_int(0, 4);
    double appear_x = 3.5 + rng.uniform(0.0, 1.0);
    double appear_y = rng.bernoulli(0.5) ? 2.25 : 0.9;
    world::WorldObject apple;
    apple.id = "obj_appear";
    apple.category = "apple";
    Cell ac = cell_of({appear_x, s.robot_start.y + (appear_y - 1.5)}, s.cell_size);
    apple.position = {cell_center(ac, s.cell_size).x, cell_center(ac, s.cell_size).y, 0.1};
    world::ScenarioEvent ev;
    ev.trigger = {world::Trigger::Kind::at_tick, appear_tick, 0.0, "", Phase::explore};
    ev.effect.kind = world::Effect::Kind::add_object;
    ev.effect.object = apple;
    s.events.push_back(ev);

    s.param_overrides["max_ticks"] = 900;
    scenario::validate(s);
    return s;
}

// Object and receptacle both in view; the object is nudged every time a grasp
// begins. Repeats outlast the replan budget of agents without monitoring.
inline scenario::Scenario make_grasp_displacement(uint64_t seed, int repeats,
                                                  const Params& params) {
    Rng rng(seed);
    scenario::Scenario s;
    s.name = "grasp_displacement_" + std::to_string(seed);
    s.width = 16;
    s.height = 16;
    s.cell_size = 0.25;
    s.seed = seed;
    s.robot_start = cell_center({8, 2}, s.cell_size);
    s.robot_heading = deg2rad(90.0);

    Cell obj_cell{8, 8};
    world::WorldObject can;
    can.id = "obj0";
    can.category = "coke can";
    can.position = {cell_center(obj_cell, s.cell_size).x, cell_center(obj_cell, s.cell_size).y, 0.1};
    s.objects.push_back(can);

    world::Receptacle bin;
    bin.id = "rec0";
    bin.category = "bin";
    bin.position = {cell_center({12, 12}, s.cell_size).x, cell_center({12, 12}, s.cell_size).y, 0.5};
    s.receptacles.push_back(bin);
    s.obstacles.push_back({12, 12});

    s.instruction.subgoals.push_back({"coke can", "bin"});
    s.instruction.text = "move the coke can to the bin";

    double dist = 0.12 + rng.uniform(0.0, 0.06);
    double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (int e = 0; e < repeats; ++e) {
        double sign = (e % 2 == 0) ? 1.0 : -1.0;
        world::ScenarioEvent ev;
        ev.trigger = {world::Trigger::Kind::phase_entered, 0, 0.0, "", Phase::grasp};
        ev.effect.kind = world::Effect::Kind::move_object;
        ev.effect.id = can.id;
        ev.effect.position = {can.position.x + sign * dist * std::cos(ang),
                              can.position.y + sign * dist * std::sin(ang), can.position.z};
        s.events.push_back(ev);
    }
    s.param_overrides["max_ticks"] = 700;
    s.param_overrides["p_grasp"] = 1.0;  // isolate the displacement mechanism
    scenario::validate(s);
    (void)params;
    return s;
}

// Reactivity probe: a watched object is injected directly ahead of the
// exploring robot, unoccluded, at a known tick.
inline scenario::Scenario make_reactivity(uint64_t seed, const Params& params, long* appear_tick_out) {
    Rng rng(seed);
    scenario::Scenario s;
    s.name = "reactivity_" + std::to_string(seed);
    s.width = 32 + rng.uniform_int(0, 8);
    s.height = 10 + rng.uniform_int(0, 4);
    s.cell_size = 0.25;
    s.seed = seed;
    int mid_y = s.height / 2;
    s.robot_start = cell_center({2, mid_y}, s.cell_size);
    s.robot_heading = 0.0;

    world::Receptacle table;
    table.id = "rec0";
    table.category = "table";
    table.position = {cell_center({s.width - 3, mid_y - 2}, s.cell_size).x,
                      cell_center({s.width - 3, mid_y - 2}, s.cell_size).y, 0.5};
    s.receptacles.push_back(table);
    s.obstacles.push_back({s.width - 3, mid_y - 2});

    s.instruction.subgoals.push_back({"banana", "table"});
    s.instruction.text = "move the banana to the table";

    long appear = params.reconstruct_ticks + 6 + rng.uniform_int(0, 6);
    if (appear_tick_out) *appear_tick_out = appear;
    // two meters ahead of where the eastbound route will be at that tick
    double robot_x_then = s.robot_start.x + (appear - params.reconstruct_ticks) * s.cell_size;
    Cell bc = cell_of({robot_x_then + 2.0, s.robot_start.y + 0.5}, s.cell_size);
    world::WorldObject banana;
    banana.id = "obj_appear";
    banana.category = "banana";
    banana.position = {cell_center(bc, s.cell_size).x, cell_center(bc, s.cell_size).y, 0.1};
    world::ScenarioEvent ev;
    ev.trigger = {world::Trigger::Kind::at_tick, appear, 0.0, "", Phase::explore};
    ev.effect.kind = world::Effect::Kind::add_object;
    ev.effect.object = banana;
    s.events.push_back(ev);

    s.param_overrides["max_ticks"] = 900;
    scenario::validate(s);
    return s;
}

// Tabletop study: everything within reach, restricted motion, manipulation
// difficulty varies by seed band.
inline scenario::Scenario make_tabletop(uint64_t seed, const Params& params) {
    Rng rng(seed);
    scenario::Scenario s;
    s.name = "tabletop_" + std::to_string(seed);
    s.width = 12;
    s.height = 12;
    s.cell_size = 0.25;
    s.seed = seed;
    s.robot_start = cell_center({6, 5}, s.cell_size);
    s.robot_heading = deg2rad(90.0);

    const char* cats[3] = {"coke can", "mug", "apple"};
    for (int i = 0; i < 3; ++i) {
        world::WorldObject o;
        o.id = "obj" + std::to_string(i);
        o.category = cats[i];
        Cell c{4 + 2 * i, 7};
        o.position = {cell_center(c, s.cell_size).x, cell_center(c, s.cell_size).y, 0.1};
        s.objects.push_back(o);
    }
    const char* recs[3] = {"bin", "tray", "plate"};
    for (int i = 0; i < 3; ++i) {
        world::Receptacle r;
        r.id = "rec" + std::to_string(i);
        r.category = recs[i];
        Cell c{4 + 2 * i, 3};
        r.position = {cell_center(c, s.cell_size).x, cell_center(c, s.cell_size).y, 0.5};
        s.receptacles.push_back(r);
        s.obstacles.push_back(c);
    }

    int pick = rng.uniform_int(0, 2);
    int place = rng.uniform_int(0, 2);
    s.instruction.subgoals.push_back({cats[pick], recs[place]});
    s.instruction.text = std::string("move the ") + cats[pick] + " to the " + recs[place];

    double band = rng.uniform();
    if (band < 0.45) {
        // repeated displacement: monitoring required
        double dist = 0.12 + rng.uniform(0.0, 0.05);
        double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const auto& obj = s.objects[pick];
        for (int e = 0; e < 4; ++e) {
            double sign = (e % 2 == 0) ? 1.0 : -1.0;
            world::ScenarioEvent ev;
            ev.trigger = {world::Trigger::Kind::phase_entered, 0, 0.0, "", Phase::grasp};
            ev.effect.kind = world::Effect::Kind::move_object;
            ev.effect.id = obj.id;
            ev.effect.position = {obj.position.x + sign * dist * std::cos(ang),
                                  obj.position.y + sign * dist * std::sin(ang), obj.position.z};
            s.events.push_back(ev);
        }
    } else if (band < 0.75) {
        // single displacement: recoverable either way, slower without monitoring
        double dist = 0.12 + rng.uniform(0.0, 0.05);
        double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const auto& obj = s.objects[pick];
        world::ScenarioEvent ev;
        ev.trigger = {world::Trigger::Kind::phase_entered, 0, 0.0, "", Phase::grasp};
        ev.effect.kind = world::Effect::Kind::move_object;
        ev.effect.id = obj.id;
        ev.effect.position = {obj.position.x + dist * std::cos(ang),
                              obj.position.y + dist * std::sin(ang), obj.position.z};
        s.events.push_back(ev);
    }
    s.param_overrides["max_ticks"] = 600;
    s.param_overrides["p_grasp"] = 1.0;
    scenario::validate(s);
    (void)params;
    return s;
}

}  // namespace binder::harness
