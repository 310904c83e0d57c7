#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace binder {

// Tick stamp for cells that were never observed.
constexpr long kNeverSeen = std::numeric_limits<long>::min();

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec2 planar() const { return {x, y}; }
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }

inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(b - a); }
inline double planar_distance(const Vec3& a, const Vec3& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}
inline double distance3(const Vec3& a, const Vec3& b) {
    return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
                     (a.z - b.z) * (a.z - b.z));
}

struct Cell {
    int x = 0;
    int y = 0;

    bool operator==(const Cell&) const = default;
};

// Row-major index; "lower cell index" tie-breaks throughout refer to this.
inline long cell_index(Cell c, int width) { return static_cast<long>(c.y) * width + c.x; }

inline Cell cell_of(Vec2 p, double cell_size) {
    return {static_cast<int>(std::floor(p.x / cell_size)),
            static_cast<int>(std::floor(p.y / cell_size))};
}

inline Vec2 cell_center(Cell c, double cell_size) {
    return {(c.x + 0.5) * cell_size, (c.y + 0.5) * cell_size};
}

inline int manhattan(Cell a, Cell b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

inline double cell_distance_m(Cell a, Cell b, double cell_size) {
    return distance(cell_center(a, cell_size), cell_center(b, cell_size));
}

// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a, two_pi);
    if (a <= -std::numbers::pi) a += two_pi;
    if (a > std::numbers::pi) a -= two_pi;
    return a;
}

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

template <typename T>
struct Grid {
    int width = 0;
    int height = 0;
    std::vector<T> cells;

    Grid() = default;
    Grid(int w, int h, T fill = T{}) : width(w), height(h), cells(static_cast<size_t>(w) * h, fill) {}

    bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
    T& at(Cell c) { return cells[static_cast<size_t>(c.y) * width + c.x]; }
    const T& at(Cell c) const { return cells[static_cast<size_t>(c.y) * width + c.x]; }
};

inline uint32_t fnv1a32(std::string_view s) {
    uint32_t h = 2166136261u;
    for (unsigned char c : s) {
        h ^= c;
        h *= 16777619u;
    }
    return h;
}

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Seeded RNG with per-call distribution objects so draw counts stay fixed.
class Rng {
public:
    explicit Rng(uint64_t seed = 1) : gen_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(gen_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
    int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
    bool bernoulli(double p) { return uniform() < p; }
    double gaussian(double sigma) { return std::normal_distribution<double>(0.0, sigma)(gen_); }
    double clamped_gaussian(double sigma, double max_abs) {
        return std::clamp(gaussian(sigma), -max_abs, max_abs);
    }

private:
    std::mt19937_64 gen_;
};

enum class Phase { explore, navigate, grasp, place };

inline const char* phase_name(Phase p) {
    switch (p) {
        case Phase::explore: return "explore";
        case Phase::navigate: return "navigate";
        case Phase::grasp: return "grasp";
        case Phase::place: return "place";
    }
    return "?";
}

inline Phase phase_from_name(std::string_view s) {
    if (s == "explore") return Phase::explore;
    if (s == "navigate") return Phase::navigate;
    if (s == "grasp") return Phase::grasp;
    return Phase::place;
}

// One object->receptacle pair per subgoal; instructions arrive pre-structured.
struct TaskInstruction {
    struct Subgoal {
        std::string object_query;
        std::string receptacle_query;
    };
    std::vector<Subgoal> subgoals;
    std::string text;
};

}  // namespace binder
