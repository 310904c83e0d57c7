#pragma once

#include <map>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "binder/memory.hpp"

namespace binder::exploration {

// Clamped linear recency ramp; never-seen cells saturate at 1.
inline double temporal_value(long last_seen, long now, double tau) {
    if (last_seen == kNeverSeen) return 1.0;
    double dt = static_cast<double>(now - last_seen);
    return std::clamp(dt / tau, 0.0, 1.0);
}

// Max query similarity over the labels visible from a cell; 0 when label-free.
inline double semantic_value(std::span<const std::string> labels, const std::string& query) {
    double best = 0.0;
    for (const auto& label : labels)
        best = std::max(best, embedding::text_similarity(label, query));
    return std::clamp(best, 0.0, 1.0);
}

// What the memory believes is visible from a cell: labels within a small
// neighborhood of the semantic grid.
inline std::vector<std::string> gather_view_labels(const memory::SemanticGrid& sem, Cell at,
                                                   int radius) {
    std::vector<std::string> labels;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            Cell c{at.x + dx, at.y + dy};
            if (!sem.in_bounds(c)) continue;
            for (const auto& [label, count] : sem.at(c).labels) labels.push_back(label);
        }
    return labels;
}

// Free cells 4-adjacent to at least one unknown cell, in row-major order.
inline std::vector<Cell> extract_frontiers(const memory::OccupancyGrid& occ) {
    static const int kDx[4] = {1, -1, 0, 0};
    static const int kDy[4] = {0, 0, 1, -1};
    std::vector<Cell> out;
    for (int y = 0; y < occ.height; ++y)
        for (int x = 0; x < occ.width; ++x) {
            Cell c{x, y};
            if (occ.at(c) != memory::CellState::free_cell) continue;
            for (int k = 0; k < 4; ++k) {
                Cell n{x + kDx[k], y + kDy[k]};
                if (occ.in_bounds(n) && occ.at(n) == memory::CellState::unknown) {
                    out.push_back(c);
                    break;
                }
            }
        }
    return out;
}

struct FrontierValue {
    Cell cell;
    double v_temporal = 0.0;
    double v_semantic = 0.0;
    double value = 0.0;  // v_temporal + v_semantic, exactly
};

// The observation obtained by orienting toward a frontier: visible category
// counts plus the visible-free-area fraction.
struct FrontierView {
    std::map<std::string, int> categories;
    double free_fraction = 0.0;
};

inline std::vector<FrontierValue> score_frontiers(const memory::AgentMemory& mem,
                                                  std::span<const std::string> queries, long now,
                                                  const Params& p) {
    std::vector<FrontierValue> out;
    for (Cell c : extract_frontiers(mem.occupancy)) {
        FrontierValue f;
        f.cell = c;
        f.v_temporal = temporal_value(mem.semantic.at(c).last_seen, now, p.tau);
        auto labels = gather_view_labels(mem.semantic, c, p.semantic_radius);
        for (const auto& q : queries)
            f.v_semantic = std::max(f.v_semantic, semantic_value(labels, q));
        f.value = f.v_temporal + f.v_semantic;
        out.push_back(f);
    }
    return out;
}

// Greedy diverse selection: sort by value descending (ties toward the lower
// cell index), accept only frontiers at least d_min meters from everything
// already accepted.
inline std::vector<FrontierValue> select_topk_diverse(std::vector<FrontierValue> frontiers, int k,
                                                      double d_min, double cell_size, int width) {
    std::sort(frontiers.begin(), frontiers.end(), [&](const FrontierValue& a, const FrontierValue& b) {
        if (a.value != b.value) return a.value > b.value;
        return cell_index(a.cell, width) < cell_index(b.cell, width);
    });
    std::vector<FrontierValue> picked;
    for (const auto& f : frontiers) {
        if (static_cast<int>(picked.size()) >= k) break;
        bool ok = true;
        for (const auto& q : picked)
            if (cell_distance_m(f.cell, q.cell, cell_size) < d_min) {
                ok = false;
                break;
            }
        if (ok) picked.push_back(f);
    }
    return picked;
}

enum class PathStatus { found, no_path, goal_blocked };

struct PathResult {
    PathStatus status = PathStatus::no_path;
    std::vector<Cell> cells;  // includes the start cell when found

    bool ok() const { return status == PathStatus::found; }
    int steps() const { return cells.empty() ? 0 : static_cast<int>(cells.size()) - 1; }
    double length_m(double cell_size) const { return steps() * cell_size; }
};

namespace detail {

// A* over free cells with Manhattan heuristic; among equal f-scores the lower
// cell index pops first. Multi-goal form takes the min heuristic over goals.
inline PathResult astar_impl(const memory::OccupancyGrid& occ, Cell start,
                             std::span<const Cell> goals) {
    PathResult res;
    if (!occ.in_bounds(start) || occ.at(start) != memory::CellState::free_cell) return res;
    if (goals.empty()) return res;

    auto h = [&](Cell c) {
        int best = std::numeric_limits<int>::max();
        for (Cell g : goals) best = std::min(best, manhattan(c, g));
        return best;
    };
    auto is_goal = [&](Cell c) {
        for (Cell g : goals)
            if (c == g) return true;
        return false;
    };

    const size_t n = static_cast<size_t>(occ.width) * occ.height;
    std::vector<int> g_cost(n, std::numeric_limits<int>::max());
    std::vector<long> parent(n, -1);
    std::vector<uint8_t> closed(n, 0);

    struct QItem {
        int f;
        long idx;
        bool operator>(const QItem& o) const { return f != o.f ? f > o.f : idx > o.idx; }
    };
    std::priority_queue<QItem, std::vector<QItem>, std::greater<QItem>> open;

    long si = cell_index(start, occ.width);
    g_cost[si] = 0;
    open.push({h(start), si});

    static const int kDx[4] = {1, -1, 0, 0};
    static const int kDy[4] = {0, 0, 1, -1};

    while (!open.empty()) {
        auto [f, idx] = open.top();
        open.pop();
        if (closed[idx]) continue;
        closed[idx] = 1;
        Cell cur{static_cast<int>(idx % occ.width), static_cast<int>(idx / occ.width)};
        if (is_goal(cur)) {
            std::vector<Cell> path;
            for (long i = idx; i != -1; i = parent[i])
                path.push_back({static_cast<int>(i % occ.width), static_cast<int>(i / occ.width)});
            std::reverse(path.begin(), path.end());
            res.status = PathStatus::found;
            res.cells = std::move(path);
            return res;
        }
        for (int k = 0; k < 4; ++k) {
            Cell nc{cur.x + kDx[k], cur.y + kDy[k]};
            if (!occ.in_bounds(nc) || occ.at(nc) != memory::CellState::free_cell) continue;
            long ni = cell_index(nc, occ.width);
            if (closed[ni]) continue;
            int ng = g_cost[idx] + 1;
            if (ng < g_cost[ni]) {
                g_cost[ni] = ng;
                parent[ni] = idx;
                open.push({ng + h(nc), ni});
            }
        }
    }
    return res;
}

}  // namespace detail

// Unknown and occupied cells are non-traversable. GoalBlocked tells the
// caller to retarget to a free neighbor.
inline PathResult astar(const memory::OccupancyGrid& occ, Cell start, Cell goal) {
    if (occ.in_bounds(goal) && occ.at(goal) == memory::CellState::occupied) {
        PathResult res;
        res.status = PathStatus::goal_blocked;
        return res;
    }
    if (!occ.in_bounds(goal) || occ.at(goal) != memory::CellState::free_cell) return {};
    Cell goals[1] = {goal};
    return detail::astar_impl(occ, start, goals);
}

// Shortest path to any of a set of free goal cells.
inline PathResult astar_any(const memory::OccupancyGrid& occ, Cell start,
                            std::span<const Cell> goals) {
    std::vector<Cell> free_goals;
    for (Cell g : goals)
        if (occ.is_free(g)) free_goals.push_back(g);
    if (free_goals.empty()) return {};
    return detail::astar_impl(occ, start, free_goals);
}

// Free cells whose center lies within range_m of a target position.
inline std::vector<Cell> cells_within(const memory::OccupancyGrid& occ, Vec2 target,
                                      double range_m) {
    std::vector<Cell> cells;
    Cell tc = cell_of(target, occ.cell_size);
    int r = static_cast<int>(std::ceil(range_m / occ.cell_size)) + 1;
    for (int y = tc.y - r; y <= tc.y + r; ++y)
        for (int x = tc.x - r; x <= tc.x + r; ++x) {
            Cell c{x, y};
            if (!occ.is_free(c)) continue;
            if (distance(cell_center(c, occ.cell_size), target) <= range_m) cells.push_back(c);
        }
    return cells;
}

// Free cells reachable from start, used to keep exploration targets honest.
inline std::vector<uint8_t> reachable_mask(const memory::OccupancyGrid& occ, Cell start) {
    std::vector<uint8_t> mask(static_cast<size_t>(occ.width) * occ.height, 0);
    if (!occ.is_free(start)) return mask;
    std::queue<Cell> q;
    q.push(start);
    mask[cell_index(start, occ.width)] = 1;
    static const int kDx[4] = {1, -1, 0, 0};
    static const int kDy[4] = {0, 0, 1, -1};
    while (!q.empty()) {
        Cell c = q.front();
        q.pop();
        for (int k = 0; k < 4; ++k) {
            Cell n{c.x + kDx[k], c.y + kDy[k]};
            if (!occ.is_free(n)) continue;
            auto& m = mask[cell_index(n, occ.width)];
            if (!m) {
                m = 1;
                q.push(n);
            }
        }
    }
    return mask;
}

}  // namespace binder::exploration
