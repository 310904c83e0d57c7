#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "binder/embedding.hpp"
#include "binder/world.hpp"
#include "json.hpp"

namespace binder::memory {

enum class CellState : uint8_t { unknown, free_cell, occupied };

struct SemanticCell {
    CellState state = CellState::unknown;
    std::map<std::string, int> labels;
    long last_seen = kNeverSeen;
};

struct SemanticGrid {
    int width = 0;
    int height = 0;
    double cell_size = 0.25;
    std::vector<SemanticCell> cells;

    SemanticGrid() = default;
    SemanticGrid(int w, int h, double cs)
        : width(w), height(h), cell_size(cs), cells(static_cast<size_t>(w) * h) {}

    bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
    SemanticCell& at(Cell c) { return cells[static_cast<size_t>(c.y) * width + c.x]; }
    const SemanticCell& at(Cell c) const { return cells[static_cast<size_t>(c.y) * width + c.x]; }
};

struct OccupancyGrid {
    int width = 0;
    int height = 0;
    double cell_size = 0.25;
    std::vector<CellState> cells;

    OccupancyGrid() = default;
    OccupancyGrid(int w, int h, double cs)
        : width(w), height(h), cell_size(cs), cells(static_cast<size_t>(w) * h, CellState::unknown) {}

    bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
    CellState at(Cell c) const { return cells[static_cast<size_t>(c.y) * width + c.x]; }
    CellState& at(Cell c) { return cells[static_cast<size_t>(c.y) * width + c.x]; }
    bool is_free(Cell c) const { return in_bounds(c) && at(c) == CellState::free_cell; }
};

// Derived cell-wise from the semantic grid's state channel; never mutated
// independently.
inline OccupancyGrid project_occupancy(const SemanticGrid& s) {
    OccupancyGrid occ(s.width, s.height, s.cell_size);
    for (size_t i = 0; i < s.cells.size(); ++i) occ.cells[i] = s.cells[i].state;
    return occ;
}

enum class RecordSource { reconstruction, irm_detection };

struct RegistryRecord {
    std::string id;
    std::string category;
    Vec3 position;
    bool is_receptacle = false;
    bool available = true;
    long last_confirmed = 0;
    RecordSource source = RecordSource::reconstruction;
    bool stale = false;
};

struct ObjectRegistry {
    std::vector<RegistryRecord> records;  // insertion order, deterministic
    int next_id = 1;

    RegistryRecord* find(const std::string& id) {
        for (auto& r : records)
            if (r.id == id) return &r;
        return nullptr;
    }
    const RegistryRecord* find(const std::string& id) const {
        for (const auto& r : records)
            if (r.id == id) return &r;
        return nullptr;
    }
};

struct HistoryEntry {
    long tick = 0;
    std::string action;
    std::string target;
    std::string outcome;
    int subgoal = -1;
};

struct AgentMemory {
    SemanticGrid semantic;
    OccupancyGrid occupancy;
    std::vector<HistoryEntry> history;  // append-only
    ObjectRegistry registry;
    Vec2 robot_position;
    double robot_heading = 0.0;
    long reconstruct_count = 0;

    AgentMemory() = default;
    AgentMemory(int w, int h, double cs) : semantic(w, h, cs), occupancy(w, h, cs) {}
};

// Median world position of one detection's range samples under the stamped
// pose: planar rotation + translation, z = elevation * range. Even counts
// average the two middles.
inline Vec3 localize_detection(const world::Detection& det, Vec2 pose, double heading) {
    std::vector<double> xs, ys, zs;
    xs.reserve(det.samples.size());
    ys.reserve(det.samples.size());
    zs.reserve(det.samples.size());
    for (const auto& s : det.samples) {
        double a = heading + s.bearing;
        xs.push_back(pose.x + s.range * std::cos(a));
        ys.push_back(pose.y + s.range * std::sin(a));
        zs.push_back(s.elevation * s.range);
    }
    auto median = [](std::vector<double>& v) {
        size_t n = v.size();
        size_t mid = n / 2;
        std::nth_element(v.begin(), v.begin() + mid, v.end());
        double hi = v[mid];
        if (n % 2 == 1) return hi;
        std::nth_element(v.begin(), v.begin() + mid - 1, v.end());
        return (v[mid - 1] + hi) / 2.0;
    };
    return {median(xs), median(ys), median(zs)};
}

namespace detail {

struct BatchEntry {
    std::string category;
    Vec3 position;
    bool is_receptacle = false;
    bool available = true;
};

// Single-linkage clusters per category at merge_radius; deterministic after
// sorting by (category, x, y, z).
inline std::vector<BatchEntry> cluster_batch(std::vector<BatchEntry> entries, double merge_radius) {
    std::sort(entries.begin(), entries.end(), [](const BatchEntry& a, const BatchEntry& b) {
        if (a.category != b.category) return a.category < b.category;
        if (a.position.x != b.position.x) return a.position.x < b.position.x;
        if (a.position.y != b.position.y) return a.position.y < b.position.y;
        return a.position.z < b.position.z;
    });
    size_t n = entries.size();
    std::vector<size_t> parent(n);
    for (size_t i = 0; i < n; ++i) parent[i] = i;
    std::function<size_t(size_t)> root = [&](size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            if (entries[i].category != entries[j].category) continue;
            if (distance3(entries[i].position, entries[j].position) <= merge_radius)
                parent[root(i)] = root(j);
        }
    std::map<size_t, std::vector<size_t>> groups;
    for (size_t i = 0; i < n; ++i) groups[root(i)].push_back(i);
    std::vector<BatchEntry> out;
    out.reserve(groups.size());
    for (const auto& [r, members] : groups) {
        BatchEntry e = entries[members.front()];
        Vec3 c{0, 0, 0};
        bool avail = true;
        for (size_t m : members) {
            c.x += entries[m].position.x;
            c.y += entries[m].position.y;
            c.z += entries[m].position.z;
            avail = avail && entries[m].available;
        }
        double k = static_cast<double>(members.size());
        e.position = {c.x / k, c.y / k, c.z / k};
        e.available = avail;
        out.push_back(e);
    }
    // group iteration order follows sorted indices, already deterministic
    std::sort(out.begin(), out.end(), [](const BatchEntry& a, const BatchEntry& b) {
        if (a.category != b.category) return a.category < b.category;
        if (a.position.x != b.position.x) return a.position.x < b.position.x;
        if (a.position.y != b.position.y) return a.position.y < b.position.y;
        return a.position.z < b.position.z;
    });
    return out;
}

inline RegistryRecord* match_record(ObjectRegistry& reg, const BatchEntry& e, double merge_radius) {
    RegistryRecord* best = nullptr;
    double best_d = merge_radius;
    for (auto& r : reg.records) {
        if (r.category != e.category) continue;
        double d = distance3(r.position, e.position);
        if (d <= best_d) {
            best_d = d;
            best = &r;
        }
    }
    return best;
}

inline void upsert(ObjectRegistry& reg, const BatchEntry& e, long tick, RecordSource source,
                   double merge_radius) {
    if (RegistryRecord* r = match_record(reg, e, merge_radius)) {
        r->position = e.position;
        r->last_confirmed = tick;
        r->source = source;
        r->stale = false;
        r->available = e.available;
        r->is_receptacle = r->is_receptacle || e.is_receptacle;
        return;
    }
    RegistryRecord rec;
    rec.id = "r" + std::to_string(reg.next_id++);
    rec.category = e.category;
    rec.position = e.position;
    rec.is_receptacle = e.is_receptacle;
    rec.available = e.available;
    rec.last_confirmed = tick;
    rec.source = source;
    reg.records.push_back(rec);
}

}  // namespace detail

// Full memory refresh from a panoramic reconstruction: visible cells get
// state, labels and last_seen; detections cluster into registry records;
// records whose position was observed empty go stale; occupancy re-projects.
inline void reconstruct(AgentMemory& mem, std::span<const world::Observation> panorama, long tick,
                        double merge_radius) {
    std::vector<Cell> observed;
    for (const auto& obs : panorama) {
        for (const auto& cs : obs.visible_cells) {
            if (!mem.semantic.in_bounds(cs.cell)) continue;
            SemanticCell& c = mem.semantic.at(cs.cell);
            if (c.last_seen != tick) {
                c.labels.clear();  // refresh labels for everything observed now
                observed.push_back(cs.cell);
            }
            c.state = cs.occupied ? CellState::occupied : CellState::free_cell;
            c.last_seen = tick;
        }
    }

    std::vector<detail::BatchEntry> batch;
    for (const auto& obs : panorama)
        for (const auto& det : obs.detections)
            batch.push_back({det.category,
                             localize_detection(det, obs.robot_position, obs.robot_heading),
                             det.is_receptacle, det.available});
    auto clusters = detail::cluster_batch(std::move(batch), merge_radius);

    for (const auto& e : clusters) {
        Cell c = cell_of(e.position.planar(), mem.semantic.cell_size);
        if (mem.semantic.in_bounds(c) && mem.semantic.at(c).last_seen == tick)
            mem.semantic.at(c).labels[e.category] += 1;
        detail::upsert(mem.registry, e, tick, RecordSource::reconstruction, merge_radius);
    }

    // A record observed as absent (its cell was seen, no matching cluster
    // confirmed it this tick) is stale until re-confirmed.
    for (auto& r : mem.registry.records) {
        if (r.last_confirmed == tick) continue;
        Cell c = cell_of(r.position.planar(), mem.semantic.cell_size);
        if (mem.semantic.in_bounds(c) && mem.semantic.at(c).last_seen == tick) r.stale = true;
    }

    mem.occupancy = project_occupancy(mem.semantic);
    mem.reconstruct_count += 1;
}

// Registry-only incremental update from IRM detections; grids untouched.
inline void merge_detections(AgentMemory& mem,
                             std::span<const std::pair<std::string, Vec3>> detections, long tick,
                             double merge_radius) {
    std::vector<detail::BatchEntry> batch;
    batch.reserve(detections.size());
    for (const auto& [category, position] : detections)
        batch.push_back({category, position, false, true});
    for (const auto& e : detail::cluster_batch(std::move(batch), merge_radius))
        detail::upsert(mem.registry, e, tick, RecordSource::irm_detection, merge_radius);
}

enum class MarkStaleResult { ok, unknown_id };

inline MarkStaleResult mark_stale(AgentMemory& mem, const std::string& record_id) {
    if (RegistryRecord* r = mem.registry.find(record_id)) {
        r->stale = true;
        return MarkStaleResult::ok;
    }
    return MarkStaleResult::unknown_id;
}

// Debug/acceptance snapshot: grids as row-major arrays, registry as records.
inline nlohmann::json snapshot_json(const AgentMemory& mem) {
    nlohmann::json j;
    j["width"] = mem.semantic.width;
    j["height"] = mem.semantic.height;
    j["cell_size"] = mem.semantic.cell_size;
    nlohmann::json states = nlohmann::json::array();
    nlohmann::json last_seen = nlohmann::json::array();
    for (const auto& c : mem.semantic.cells) {
        states.push_back(static_cast<int>(c.state));
        last_seen.push_back(c.last_seen == kNeverSeen ? nlohmann::json(nullptr)
                                                      : nlohmann::json(c.last_seen));
    }
    j["semantic_state"] = states;
    j["last_seen"] = last_seen;
    nlohmann::json occ = nlohmann::json::array();
    for (const auto& c : mem.occupancy.cells) occ.push_back(static_cast<int>(c));
    j["occupancy"] = occ;
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : mem.registry.records)
        recs.push_back({{"id", r.id},
                        {"category", r.category},
                        {"x", r.position.x},
                        {"y", r.position.y},
                        {"z", r.position.z},
                        {"receptacle", r.is_receptacle},
                        {"available", r.available},
                        {"last_confirmed", r.last_confirmed},
                        {"source", r.source == RecordSource::reconstruction ? "reconstruction"
                                                                            : "irm_detection"},
                        {"stale", r.stale}});
    j["registry"] = recs;
    j["history_len"] = mem.history.size();
    return j;
}

}  // namespace binder::memory
