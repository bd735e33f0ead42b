#pragma once

#include "octolb/forest.hpp"
#include "octolb/geometry.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <unordered_map>
#include <vector>

namespace octolb {

struct ParticleSet {
    std::vector<Vec3> positions;
    double radius = 0.0;
    std::vector<Vec3> velocities; ///< empty for static scenarios
};

/// The four z-parallel edges of the box a pile can lean against.
enum class GravityEdge { XLowYLow, XHighYLow, XLowYHigh, XHighYHigh };

struct StaticScenarioConfig {
    Aabb domain;
    double fill_fraction = 0.125;
    double particle_radius = 0.01;
    GravityEdge gravity_edge = GravityEdge::XLowYLow;
};

/// Relative tolerance for touching-distance and lattice boundary tests.
inline constexpr double kContactEps = 1e-9;

namespace detail {

/// Cross-section cut: the pile against the edge is the triangle u + v <= c
/// in wall-normalized coordinates; c chosen so the covered area fraction
/// equals the fill fraction.
inline double triangle_cut(double fill_fraction) {
    if (fill_fraction <= 0.5)
        return std::sqrt(2.0 * fill_fraction);
    return 2.0 - std::sqrt(2.0 * (1.0 - fill_fraction));
}

inline std::int64_t floor_div_tol(double value, double step) {
    return static_cast<std::int64_t>(std::floor(value / step + kContactEps));
}

inline std::int64_t ceil_div_tol(double value, double step) {
    return static_cast<std::int64_t>(std::ceil(value / step - kContactEps));
}

} // namespace detail

/// Hexagonal close packing at touching distance (nearest neighbors exactly
/// 2*radius apart), filling the triangular prism of `fill_fraction` of the
/// xy cross-section anchored at the gravity edge, z-periodic with period
/// 2*radius so the count scales exactly with commensurate z extents.
inline ParticleSet generate_hcp_fill(const StaticScenarioConfig& cfg) {
    require_valid(cfg.domain, "generate_hcp_fill");
    const double r = cfg.particle_radius;
    const double d = 2.0 * r;
    if (r <= 0.0)
        throw GeometryError("generate_hcp_fill: particle_radius must be positive");
    if (cfg.fill_fraction <= 0.0 || cfg.fill_fraction > 1.0)
        throw GeometryError("generate_hcp_fill: fill_fraction must be in (0, 1]");
    const Vec3 ext = cfg.domain.extent();
    if (cfg.fill_fraction * cfg.domain.volume() < d * d * d / std::sqrt(2.0))
        throw GeometryError("generate_hcp_fill: domain too small for one lattice cell");

    // lattice in a canonical frame anchored at the (x-low, y-low) edge;
    // mirrored onto the requested edge afterwards
    const bool flip_x =
        cfg.gravity_edge == GravityEdge::XHighYLow || cfg.gravity_edge == GravityEdge::XHighYHigh;
    const bool flip_y =
        cfg.gravity_edge == GravityEdge::XLowYHigh || cfg.gravity_edge == GravityEdge::XHighYHigh;

    const double cut = detail::triangle_cut(cfg.fill_fraction);
    const double row_dx = d * std::sqrt(3.0) / 2.0; // x spacing of in-layer rows
    const double layer_dy = d * std::sqrt(2.0 / 3.0);
    const double hi_x = ext.x - r;
    const double hi_y = ext.y - r;

    ParticleSet out;
    out.radius = r;
    for (int s = 0; s < 2; ++s) { // the two hcp sublattices
        const double off_x = s * (d * std::sqrt(3.0) / 6.0);
        const double off_y = s * layer_dy;
        const std::int64_t m_max = detail::floor_div_tol(hi_x - r - off_x, row_dx);
        const std::int64_t j_max = detail::floor_div_tol(hi_y - r - off_y, 2.0 * layer_dy);
        for (std::int64_t j = 0; j <= j_max; ++j) {
            const double y = r + off_y + double(j) * 2.0 * layer_dy;
            for (std::int64_t m = 0; m <= m_max; ++m) {
                const double x = r + off_x + double(m) * row_dx;
                const double u = x / ext.x;
                const double v = y / ext.y;
                if (u + v > cut + kContactEps)
                    continue;
                // rows run along z on the half-open window [0, ext.z): the
                // site pattern repeats every d, so commensurate extents scale
                // the count exactly
                const double z0 = std::fmod(r + double((m + s) & 1) * (d / 2.0), d);
                const auto k_max = static_cast<std::int64_t>(
                    std::floor((ext.z - z0) / d - kContactEps));
                for (std::int64_t k = 0; k <= k_max; ++k) {
                    const double z = z0 + double(k) * d;
                    Vec3 p{x, y, z};
                    if (flip_x)
                        p.x = ext.x - p.x;
                    if (flip_y)
                        p.y = ext.y - p.y;
                    out.positions.push_back(cfg.domain.min + p);
                }
            }
        }
    }
    return out;
}

namespace detail {

/// Uniform cell list with cell size 2*radius; neighbors within one cell ring
/// cover every pair at touching distance. The cell edge carries a 1e-6
/// relative pad so boundary rounding cannot split a touching pair across
/// two rings.
class CellList {
public:
    CellList(const ParticleSet& ps, const Vec3& origin)
        : cell_(2.0 * ps.radius * (1.0 + kContactEps) * (1.0 + 1e-6)) {
        for (std::size_t i = 0; i < ps.positions.size(); ++i)
            cells_[key(ps.positions[i], origin)].push_back(i);
        origin_ = origin;
    }

    template <typename F>
    void for_each_pair(const ParticleSet& ps, F&& f) const {
        const double touch = 2.0 * ps.radius * (1.0 + kContactEps);
        const double touch2 = touch * touch;
        for (const auto& [k, members] : cells_) {
            for (int dz = -1; dz <= 1; ++dz)
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const std::uint64_t nk = offset_key(k, dx, dy, dz);
                        const auto it = cells_.find(nk);
                        if (it == cells_.end())
                            continue;
                        for (const std::size_t i : members)
                            for (const std::size_t j : it->second) {
                                if (j <= i)
                                    continue;
                                const Vec3 dp = ps.positions[i] - ps.positions[j];
                                if (dp.x * dp.x + dp.y * dp.y + dp.z * dp.z <= touch2)
                                    f(i, j);
                            }
                    }
        }
    }

private:
    static constexpr std::int64_t kBias = 1 << 20;

    std::uint64_t key(const Vec3& p, const Vec3& origin) const {
        const auto cx = static_cast<std::int64_t>(std::floor((p.x - origin.x) / cell_)) + kBias;
        const auto cy = static_cast<std::int64_t>(std::floor((p.y - origin.y) / cell_)) + kBias;
        const auto cz = static_cast<std::int64_t>(std::floor((p.z - origin.z) / cell_)) + kBias;
        return pack(cx, cy, cz);
    }

    static std::uint64_t pack(std::int64_t cx, std::int64_t cy, std::int64_t cz) {
        return (static_cast<std::uint64_t>(cx) & 0x1fffff) |
               ((static_cast<std::uint64_t>(cy) & 0x1fffff) << 21) |
               ((static_cast<std::uint64_t>(cz) & 0x1fffff) << 42);
    }

    static std::uint64_t offset_key(std::uint64_t k, int dx, int dy, int dz) {
        const std::int64_t cx = static_cast<std::int64_t>(k & 0x1fffff) + dx;
        const std::int64_t cy = static_cast<std::int64_t>((k >> 21) & 0x1fffff) + dy;
        const std::int64_t cz = static_cast<std::int64_t>((k >> 42) & 0x1fffff) + dz;
        return pack(cx, cy, cz);
    }

    double cell_;
    Vec3 origin_;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

} // namespace detail

/// Unordered touching pairs (center distance <= 2r(1+eps)), each charged to
/// the leaf containing the contact midpoint.
inline std::map<BlockId, std::uint64_t> count_contacts(const ParticleSet& ps,
                                                       const Forest& forest) {
    std::map<BlockId, std::uint64_t> counts;
    for (const BlockId& id : forest.leaves())
        counts[id] = 0;
    if (ps.positions.empty())
        return counts;
    const detail::CellList cl(ps, forest.domain().min);
    cl.for_each_pair(ps, [&](std::size_t i, std::size_t j) {
        const Vec3 mid = (ps.positions[i] + ps.positions[j]) * 0.5;
        ++counts[forest.locate(mid)];
    });
    return counts;
}

/// Incident contact count per particle (test and diagnostics aid).
inline std::vector<std::uint32_t> contact_degrees(const ParticleSet& ps) {
    std::vector<std::uint32_t> deg(ps.positions.size(), 0);
    if (ps.positions.empty())
        return deg;
    const detail::CellList cl(ps, {0, 0, 0});
    cl.for_each_pair(ps, [&](std::size_t i, std::size_t j) {
        ++deg[i];
        ++deg[j];
    });
    return deg;
}

/// Each particle charged to the leaf containing its center; boundary ties go
/// to the lower-coordinate leaf (Forest::locate).
inline std::map<BlockId, std::uint64_t> particles_per_leaf(const ParticleSet& ps,
                                                           const Forest& forest) {
    std::map<BlockId, std::uint64_t> counts;
    for (const BlockId& id : forest.leaves())
        counts[id] = 0;
    for (const Vec3& p : ps.positions)
        ++counts[forest.locate(p)];
    return counts;
}

} // namespace octolb
