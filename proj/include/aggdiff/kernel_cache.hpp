#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "aggdiff/riesz.hpp"

namespace aggdiff {

/// Binary kernel cache: little-endian flat array with a 6-field header
/// (d, s, epsilon, r_max, n, entry_count). An optimization only; a cache miss
/// or mismatch always falls back to assembly.
namespace kernel_cache {

struct Header {
    std::uint64_t d;
    double s;
    double epsilon;
    double r_max;
    std::uint64_t n;
    std::uint64_t entry_count;
};

inline std::string file_name(const ModelParams& p, const RadialGrid& g) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "kernel_d%d_s%.9g_eps%.9g_rmax%.9g_n%d.bin",
                  p.d, p.s, p.epsilon, g.r_max, g.n);
    return buf;
}

inline bool save(const std::filesystem::path& dir, const KernelMatrix& K) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const ModelParams& p = K.params();
    const RadialGrid& g = K.grid();
    Header h{static_cast<std::uint64_t>(p.d), p.s, p.epsilon, g.r_max,
             static_cast<std::uint64_t>(g.n), K.entries().size()};
    std::ofstream out(dir / file_name(p, g), std::ios::binary | std::ios::trunc);
    if (!out) return false;
    out.write(reinterpret_cast<const char*>(&h), sizeof(h));
    out.write(reinterpret_cast<const char*>(K.entries().data()),
              static_cast<std::streamsize>(K.entries().size() * sizeof(double)));
    return static_cast<bool>(out);
}

inline std::optional<KernelMatrix> load(const std::filesystem::path& dir, const RadialGrid& g,
                                        const ModelParams& p) {
    std::ifstream in(dir / file_name(p, g), std::ios::binary);
    if (!in) return std::nullopt;
    Header h{};
    in.read(reinterpret_cast<char*>(&h), sizeof(h));
    if (!in) return std::nullopt;
    const std::uint64_t want = static_cast<std::uint64_t>(g.n) * static_cast<std::uint64_t>(g.n);
    if (h.d != static_cast<std::uint64_t>(p.d) || h.s != p.s || h.epsilon != p.epsilon ||
        h.r_max != g.r_max || h.n != static_cast<std::uint64_t>(g.n) || h.entry_count != want)
        return std::nullopt;
    std::vector<double> entries(want);
    in.read(reinterpret_cast<char*>(entries.data()),
            static_cast<std::streamsize>(want * sizeof(double)));
    if (!in) return std::nullopt;
    return KernelMatrix(g, p, std::move(entries));
}

/// Assemble, or reuse the cache under AGGDIFF_CACHE_DIR when that is set.
inline KernelMatrix assemble_or_load(const RadialGrid& g, const ModelParams& p) {
    const char* dir = std::getenv("AGGDIFF_CACHE_DIR");
    if (dir != nullptr && *dir != '\0') {
        if (auto k = load(dir, g, p)) return std::move(*k);
        KernelMatrix k = assemble_kernel(g, p);
        save(dir, k);
        return k;
    }
    return assemble_kernel(g, p);
}

} // namespace kernel_cache
} // namespace aggdiff
