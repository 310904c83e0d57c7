#pragma once

#include <string>

#include "json.hpp"

namespace binder {

// Every tunable named across the module design decisions, overridable from a
// config file and per-scenario "params" blocks.
struct Params {
    // sensing
    double fov_deg = 90.0;
    double max_range = 4.0;
    double noise_sigma = 0.02;   // range noise, meters
    int range_samples = 5;
    double object_radius = 0.05;

    // manipulation outcome model
    double align_tol = 0.05;
    double p_grasp = 0.9;
    double p_place = 1.0;
    double grasp_range = 0.6;
    double place_range = 0.6;

    // memory
    double merge_radius = 0.5;

    // exploration
    double tau = 200.0;          // temporal-value ramp, ticks
    double d_min = 1.5;          // frontier diversity threshold, meters
    int top_k = 3;
    int semantic_radius = 3;     // label neighborhood for frontier V_S, cells

    // irm
    int window = 8;              // clip length, observations
    double theta_match = 0.35;
    double shift_tol = 0.3;
    double reroute_tol = 0.5;
    int resolve_after = 2;       // async localization delay, ticks

    // drm
    double free_area_weight = 0.1;
    double promote_ratio = 0.5;
    double in_range_frac = 0.75;

    // executor
    int reconstruct_ticks = 20;  // charged per look_around
    int panorama_views = 8;
    int max_adjust = 2;
    int max_replans_per_cause = 3;
    int max_total_replans = 25;
    long max_ticks = 1500;
    int grasp_align_ticks = 1;
    int place_align_ticks = 1;
    double waypoint_interval = 1.0;

    // external hooks (disabled when empty)
    std::string scorer_command;
    std::string monitor_command;
    int hook_timeout_ms = 500;
};

inline void to_json(nlohmann::json& j, const Params& p) {
    j = nlohmann::json{
        {"fov_deg", p.fov_deg},
        {"max_range", p.max_range},
        {"noise_sigma", p.noise_sigma},
        {"range_samples", p.range_samples},
        {"object_radius", p.object_radius},
        {"align_tol", p.align_tol},
        {"p_grasp", p.p_grasp},
        {"p_place", p.p_place},
        {"grasp_range", p.grasp_range},
        {"place_range", p.place_range},
        {"merge_radius", p.merge_radius},
        {"tau", p.tau},
        {"d_min", p.d_min},
        {"top_k", p.top_k},
        {"semantic_radius", p.semantic_radius},
        {"window", p.window},
        {"theta_match", p.theta_match},
        {"shift_tol", p.shift_tol},
        {"reroute_tol", p.reroute_tol},
        {"resolve_after", p.resolve_after},
        {"free_area_weight", p.free_area_weight},
        {"promote_ratio", p.promote_ratio},
        {"in_range_frac", p.in_range_frac},
        {"reconstruct_ticks", p.reconstruct_ticks},
        {"panorama_views", p.panorama_views},
        {"max_adjust", p.max_adjust},
        {"max_replans_per_cause", p.max_replans_per_cause},
        {"max_total_replans", p.max_total_replans},
        {"max_ticks", p.max_ticks},
        {"grasp_align_ticks", p.grasp_align_ticks},
        {"place_align_ticks", p.place_align_ticks},
        {"waypoint_interval", p.waypoint_interval},
        {"scorer_command", p.scorer_command},
        {"monitor_command", p.monitor_command},
        {"hook_timeout_ms", p.hook_timeout_ms},
    };
}

// Partial update: only keys present in j are applied.
inline void apply_params(Params& p, const nlohmann::json& j) {
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("fov_deg", p.fov_deg);
    get("max_range", p.max_range);
    get("noise_sigma", p.noise_sigma);
    get("range_samples", p.range_samples);
    get("object_radius", p.object_radius);
    get("align_tol", p.align_tol);
    get("p_grasp", p.p_grasp);
    get("p_place", p.p_place);
    get("grasp_range", p.grasp_range);
    get("place_range", p.place_range);
    get("merge_radius", p.merge_radius);
    get("tau", p.tau);
    get("d_min", p.d_min);
    get("top_k", p.top_k);
    get("semantic_radius", p.semantic_radius);
    get("window", p.window);
    get("theta_match", p.theta_match);
    get("shift_tol", p.shift_tol);
    get("reroute_tol", p.reroute_tol);
    get("resolve_after", p.resolve_after);
    get("free_area_weight", p.free_area_weight);
    get("promote_ratio", p.promote_ratio);
    get("in_range_frac", p.in_range_frac);
    get("reconstruct_ticks", p.reconstruct_ticks);
    get("panorama_views", p.panorama_views);
    get("max_adjust", p.max_adjust);
    get("max_replans_per_cause", p.max_replans_per_cause);
    get("max_total_replans", p.max_total_replans);
    get("max_ticks", p.max_ticks);
    get("grasp_align_ticks", p.grasp_align_ticks);
    get("place_align_ticks", p.place_align_ticks);
    get("waypoint_interval", p.waypoint_interval);
    get("scorer_command", p.scorer_command);
    get("monitor_command", p.monitor_command);
    get("hook_timeout_ms", p.hook_timeout_ms);
}

inline void from_json(const nlohmann::json& j, Params& p) { apply_params(p, j); }

}  // namespace binder
