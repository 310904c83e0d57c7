#pragma once

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <string_view>

#include "binder/core.hpp"

namespace binder::embedding {

// Character-trigram frequency embedding, hashed into a fixed-length vector and
// L2-normalized. Identical texts embed identically; unrelated texts land near
// zero similarity. Swappable stand-in for a learned text encoder.
constexpr int kDim = 512;
using Vector = std::array<double, kDim>;

inline std::string canonicalize(std::string_view s) {
    std::string tmp;
    tmp.reserve(s.size());
    for (char ch : s) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
        if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'))
            tmp.push_back(static_cast<char>(c));
        else
            tmp.push_back(' ');
    }
    // collapse runs of spaces and trim
    std::string out;
    out.reserve(tmp.size());
    bool in_space = true;
    for (char c : tmp) {
        if (c == ' ') {
            if (!in_space) out.push_back(' ');
            in_space = true;
        } else {
            out.push_back(c);
            in_space = false;
        }
    }
    if (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

inline Vector embed(std::string_view text) {
    Vector v{};
    std::string c = canonicalize(text);
    if (c.empty()) return v;
    std::string t = " " + c + " ";
    for (size_t i = 0; i + 3 <= t.size(); ++i)
        v[fnv1a32(std::string_view(t).substr(i, 3)) % kDim] += 1.0;
    double n2 = 0.0;
    for (double x : v) n2 += x * x;
    if (n2 > 0.0) {
        double n = std::sqrt(n2);
        for (double& x : v) x /= n;
    }
    return v;
}

inline double dot(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (int i = 0; i < kDim; ++i) s += a[i] * b[i];
    return s;
}

// Clamped to [0,1]; both inputs are unit (or zero) vectors.
inline double similarity(const Vector& a, const Vector& b) {
    return std::clamp(dot(a, b), 0.0, 1.0);
}

inline const Vector& cached_embed(const std::string& text) {
    thread_local std::map<std::string, Vector> cache;
    auto it = cache.find(text);
    if (it == cache.end()) it = cache.emplace(text, embed(text)).first;
    return it->second;
}

inline double text_similarity(const std::string& a, const std::string& b) {
    return similarity(cached_embed(a), cached_embed(b));
}

}  // namespace binder::embedding
