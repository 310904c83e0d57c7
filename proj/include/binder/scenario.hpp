#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "binder/world.hpp"
#include "json.hpp"

namespace binder::scenario {

struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Scenario {
    std::string name;
    int width = 0;
    int height = 0;
    double cell_size = 0.25;
    std::vector<Cell> obstacles;
    std::vector<world::WorldObject> objects;
    std::vector<world::Receptacle> receptacles;
    Vec2 robot_start;
    double robot_heading = 0.0;
    std::vector<world::ScenarioEvent> events;
    TaskInstruction instruction;
    uint64_t seed = 1;
    nlohmann::json param_overrides = nlohmann::json::object();
};

inline world::WorldState make_world(const Scenario& s, uint64_t seed) {
    world::WorldState w;
    w.width = s.width;
    w.height = s.height;
    w.cell_size = s.cell_size;
    w.obstacles = Grid<uint8_t>(s.width, s.height, 0);
    for (Cell c : s.obstacles) w.obstacles.at(c) = 1;
    for (const auto& o : s.objects) w.objects.emplace(o.id, o);
    for (const auto& r : s.receptacles) w.receptacles.emplace(r.id, r);
    w.robot.position = s.robot_start;
    w.robot.heading = s.robot_heading;
    w.events = s.events;
    world::seed_world(w, seed);
    return w;
}

inline world::WorldState make_world(const Scenario& s) { return make_world(s, s.seed); }

inline Params scenario_params(const Scenario& s, const Params& base) {
    Params p = base;
    apply_params(p, s.param_overrides);
    return p;
}

// --- JSON serialization -----------------------------------------------------

namespace detail {

inline nlohmann::json vec3_json(const Vec3& v) { return {{"x", v.x}, {"y", v.y}, {"z", v.z}}; }
inline Vec3 vec3_from(const nlohmann::json& j) {
    return {j.at("x").get<double>(), j.at("y").get<double>(), j.value("z", 0.0)};
}

inline nlohmann::json trigger_json(const world::Trigger& t) {
    using K = world::Trigger::Kind;
    switch (t.kind) {
        case K::at_tick: return {{"type", "at_tick"}, {"tick", t.tick}};
        case K::robot_within:
            return {{"type", "robot_within"}, {"radius", t.radius}, {"target", t.target}};
        case K::phase_entered: return {{"type", "phase_entered"}, {"phase", phase_name(t.phase)}};
    }
    return {};
}

inline world::Trigger trigger_from(const nlohmann::json& j) {
    world::Trigger t;
    std::string type = j.at("type").get<std::string>();
    if (type == "at_tick") {
        t.kind = world::Trigger::Kind::at_tick;
        t.tick = j.at("tick").get<long>();
    } else if (type == "robot_within") {
        t.kind = world::Trigger::Kind::robot_within;
        t.radius = j.at("radius").get<double>();
        t.target = j.at("target").get<std::string>();
    } else if (type == "phase_entered") {
        t.kind = world::Trigger::Kind::phase_entered;
        t.phase = phase_from_name(j.at("phase").get<std::string>());
    } else {
        throw ScenarioError("unknown trigger type: " + type);
    }
    return t;
}

inline nlohmann::json object_json(const world::WorldObject& o) {
    return {{"id", o.id}, {"category", o.category}, {"x", o.position.x}, {"y", o.position.y},
            {"z", o.position.z}};
}

inline world::WorldObject object_from(const nlohmann::json& j) {
    world::WorldObject o;
    o.id = j.at("id").get<std::string>();
    o.category = j.at("category").get<std::string>();
    o.position = {j.at("x").get<double>(), j.at("y").get<double>(), j.value("z", 0.0)};
    return o;
}

inline nlohmann::json effect_json(const world::Effect& e) {
    using K = world::Effect::Kind;
    switch (e.kind) {
        case K::move_object:
            return {{"type", "move_object"}, {"id", e.id}, {"x", e.position.x}, {"y", e.position.y},
                    {"z", e.position.z}};
        case K::move_receptacle:
            return {{"type", "move_receptacle"}, {"id", e.id}, {"x", e.position.x},
                    {"y", e.position.y}, {"z", e.position.z}};
        case K::add_object: return {{"type", "add_object"}, {"object", object_json(e.object)}};
        case K::remove_object: return {{"type", "remove_object"}, {"id", e.id}};
        case K::disable_receptacle: return {{"type", "disable_receptacle"}, {"id", e.id}};
    }
    return {};
}

inline world::Effect effect_from(const nlohmann::json& j) {
    world::Effect e;
    std::string type = j.at("type").get<std::string>();
    if (type == "move_object") {
        e.kind = world::Effect::Kind::move_object;
        e.id = j.at("id").get<std::string>();
        e.position = {j.at("x").get<double>(), j.at("y").get<double>(), j.value("z", 0.0)};
    } else if (type == "move_receptacle") {
        e.kind = world::Effect::Kind::move_receptacle;
        e.id = j.at("id").get<std::string>();
        e.position = {j.at("x").get<double>(), j.at("y").get<double>(), j.value("z", 0.0)};
    } else if (type == "add_object") {
        e.kind = world::Effect::Kind::add_object;
        e.object = object_from(j.at("object"));
    } else if (type == "remove_object") {
        e.kind = world::Effect::Kind::remove_object;
        e.id = j.at("id").get<std::string>();
    } else if (type == "disable_receptacle") {
        e.kind = world::Effect::Kind::disable_receptacle;
        e.id = j.at("id").get<std::string>();
    } else {
        throw ScenarioError("unknown effect type: " + type);
    }
    return e;
}

}  // namespace detail

inline nlohmann::json to_json(const Scenario& s) {
    nlohmann::json j;
    j["name"] = s.name;
    j["grid"] = {{"width", s.width}, {"height", s.height}, {"cell_size", s.cell_size}};
    nlohmann::json obs = nlohmann::json::array();
    for (Cell c : s.obstacles) obs.push_back({c.x, c.y});
    j["obstacles"] = obs;
    nlohmann::json objs = nlohmann::json::array();
    for (const auto& o : s.objects) objs.push_back(detail::object_json(o));
    j["objects"] = objs;
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : s.receptacles)
        recs.push_back({{"id", r.id}, {"category", r.category}, {"x", r.position.x},
                        {"y", r.position.y}, {"surface_height", r.surface_height},
                        {"available", r.available}});
    j["receptacles"] = recs;
    j["robot"] = {{"x", s.robot_start.x}, {"y", s.robot_start.y}, {"heading", s.robot_heading}};
    nlohmann::json evs = nlohmann::json::array();
    for (const auto& e : s.events)
        evs.push_back({{"trigger", detail::trigger_json(e.trigger)},
                       {"effect", detail::effect_json(e.effect)}});
    j["events"] = evs;
    nlohmann::json subgoals = nlohmann::json::array();
    for (const auto& g : s.instruction.subgoals)
        subgoals.push_back({{"object", g.object_query}, {"receptacle", g.receptacle_query}});
    j["instruction"] = {{"subgoals", subgoals}, {"text", s.instruction.text}};
    j["params"] = s.param_overrides;
    j["seed"] = s.seed;
    return j;
}

inline Scenario from_json(const nlohmann::json& j) {
    Scenario s;
    try {
        s.name = j.value("name", "");
        const auto& g = j.at("grid");
        s.width = g.at("width").get<int>();
        s.height = g.at("height").get<int>();
        s.cell_size = g.at("cell_size").get<double>();
        for (const auto& c : j.value("obstacles", nlohmann::json::array()))
            s.obstacles.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
        for (const auto& o : j.value("objects", nlohmann::json::array()))
            s.objects.push_back(detail::object_from(o));
        for (const auto& r : j.value("receptacles", nlohmann::json::array())) {
            world::Receptacle rec;
            rec.id = r.at("id").get<std::string>();
            rec.category = r.at("category").get<std::string>();
            rec.position = {r.at("x").get<double>(), r.at("y").get<double>(),
                            r.value("surface_height", 0.5)};
            rec.surface_height = r.value("surface_height", 0.5);
            rec.available = r.value("available", true);
            s.receptacles.push_back(rec);
        }
        const auto& rb = j.at("robot");
        s.robot_start = {rb.at("x").get<double>(), rb.at("y").get<double>()};
        s.robot_heading = rb.value("heading", 0.0);
        for (const auto& e : j.value("events", nlohmann::json::array())) {
            world::ScenarioEvent ev;
            ev.trigger = detail::trigger_from(e.at("trigger"));
            ev.effect = detail::effect_from(e.at("effect"));
            s.events.push_back(ev);
        }
        if (j.contains("instruction")) {
            for (const auto& sg : j.at("instruction").value("subgoals", nlohmann::json::array()))
                s.instruction.subgoals.push_back(
                    {sg.at("object").get<std::string>(), sg.at("receptacle").get<std::string>()});
            s.instruction.text = j.at("instruction").value("text", "");
        }
        s.param_overrides = j.value("params", nlohmann::json::object());
        s.seed = j.value("seed", 1ull);
    } catch (const nlohmann::json::exception& e) {
        throw ScenarioError(std::string("malformed scenario: ") + e.what());
    }
    return s;
}

inline void validate(const Scenario& s) {
    auto fail = [&](const std::string& msg) {
        throw ScenarioError("scenario '" + s.name + "': " + msg);
    };
    if (s.width <= 0 || s.height <= 0) fail("grid dimensions must be positive");
    if (s.cell_size <= 0) fail("cell_size must be positive");
    auto in_bounds = [&](const Vec3& p) {
        return p.x >= 0 && p.y >= 0 && p.x < s.width * s.cell_size && p.y < s.height * s.cell_size;
    };
    Grid<uint8_t> obst(s.width, s.height, 0);
    for (Cell c : s.obstacles) {
        if (c.x < 0 || c.y < 0 || c.x >= s.width || c.y >= s.height) fail("obstacle out of bounds");
        obst.at(c) = 1;
    }
    Cell rc = cell_of(s.robot_start, s.cell_size);
    if (!obst.in_bounds(rc)) fail("robot start out of bounds");
    if (obst.at(rc)) fail("robot start inside an obstacle");
    std::set<std::string> ids;
    for (const auto& o : s.objects) {
        if (!in_bounds(o.position)) fail("object " + o.id + " out of bounds");
        if (!ids.insert(o.id).second) fail("duplicate id " + o.id);
    }
    for (const auto& r : s.receptacles) {
        if (!in_bounds(r.position)) fail("receptacle " + r.id + " out of bounds");
        if (!ids.insert(r.id).second) fail("duplicate id " + r.id);
    }
    for (const auto& e : s.events) {
        using EK = world::Effect::Kind;
        if ((e.effect.kind == EK::move_object || e.effect.kind == EK::move_receptacle) &&
            !in_bounds(e.effect.position))
            fail("event moves entity out of bounds");
        if (e.effect.kind == EK::add_object && !in_bounds(e.effect.object.position))
            fail("event adds object out of bounds");
    }
    if (s.instruction.subgoals.empty()) fail("instruction requires at least one subgoal");
    for (const auto& g : s.instruction.subgoals)
        if (g.object_query.empty() || g.receptacle_query.empty()) fail("empty subgoal query");
}

inline Scenario load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ScenarioError(path + ": " + e.what());
    }
    Scenario s = from_json(j);
    if (s.name.empty()) s.name = path;
    validate(s);
    return s;
}

inline void save_file(const Scenario& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ScenarioError("cannot write scenario file: " + path);
    out << to_json(s).dump(2) << "\n";
}

// Parses "banana>table,apple>bin" style pre-structured instruction text.
inline TaskInstruction parse_instruction(const std::string& text) {
    TaskInstruction inst;
    inst.text = text;
    std::stringstream ss(text);
    std::string pair;
    while (std::getline(ss, pair, ',')) {
        auto sep = pair.find('>');
        if (sep == std::string::npos) throw ScenarioError("instruction pair missing '>': " + pair);
        auto trim = [](std::string v) {
            size_t b = v.find_first_not_of(" \t");
            size_t e = v.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
        };
        std::string obj = trim(pair.substr(0, sep));
        std::string rec = trim(pair.substr(sep + 1));
        if (obj.empty() || rec.empty()) throw ScenarioError("empty query in instruction: " + pair);
        inst.subgoals.push_back({obj, rec});
    }
    if (inst.subgoals.empty()) throw ScenarioError("instruction has no subgoals");
    return inst;
}

}  // namespace binder::scenario
