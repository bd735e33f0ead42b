#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <string>

namespace octolb {

/// Hard cap on octree depth; keeps path keys inside 64 bits (3 bits per level).
inline constexpr std::uint32_t kLevelCap = 20;

/// Identifies one octree node: root brick index plus the octant path, the
/// latter stored as lattice coordinates inside the brick at `level`
/// (x, y, z < 2^level). Octant digit convention: bit 0 = x-high,
/// bit 1 = y-high, bit 2 = z-high.
struct BlockId {
    std::array<std::int32_t, 3> root{0, 0, 0};
    std::uint8_t level = 0;
    std::uint32_t x = 0;
    std::uint32_t y = 0;
    std::uint32_t z = 0;

    /// Octant digit at depth t, t = 0 being the coarsest split.
    std::uint32_t octant(std::uint32_t t) const {
        const std::uint32_t shift = level - 1u - t;
        return ((x >> shift) & 1u) | (((y >> shift) & 1u) << 1) | (((z >> shift) & 1u) << 2);
    }

    BlockId child(std::uint32_t o) const {
        BlockId c = *this;
        c.level = static_cast<std::uint8_t>(level + 1);
        c.x = (x << 1) | (o & 1u);
        c.y = (y << 1) | ((o >> 1) & 1u);
        c.z = (z << 1) | ((o >> 2) & 1u);
        return c;
    }

    BlockId parent() const {
        BlockId p = *this;
        p.level = static_cast<std::uint8_t>(level - 1);
        p.x = x >> 1;
        p.y = y >> 1;
        p.z = z >> 1;
        return p;
    }

    /// Ancestor at the given (not deeper) level.
    BlockId ancestor(std::uint32_t lev) const {
        const std::uint32_t shift = level - lev;
        BlockId a = *this;
        a.level = static_cast<std::uint8_t>(lev);
        a.x = x >> shift;
        a.y = y >> shift;
        a.z = z >> shift;
        return a;
    }

    std::uint32_t sibling_octant() const {
        return (x & 1u) | ((y & 1u) << 1) | ((z & 1u) << 2);
    }

    /// Octant path bit-interleaved, aligned to the level cap so that numeric
    /// order equals lexicographic path order with ancestors first.
    std::uint64_t path_key() const {
        std::uint64_t key = 0;
        for (std::uint32_t t = 0; t < level; ++t)
            key = (key << 3) | octant(t);
        return key << (3 * (kLevelCap - level));
    }

    friend bool operator==(const BlockId& a, const BlockId& b) {
        return a.root == b.root && a.level == b.level && a.x == b.x && a.y == b.y && a.z == b.z;
    }

    /// Total order: bricks x-fastest lexicographic, then path, ancestors first.
    friend std::strong_ordering operator<=>(const BlockId& a, const BlockId& b) {
        if (auto c = a.root[2] <=> b.root[2]; c != 0) return c;
        if (auto c = a.root[1] <=> b.root[1]; c != 0) return c;
        if (auto c = a.root[0] <=> b.root[0]; c != 0) return c;
        if (auto c = a.path_key() <=> b.path_key(); c != 0) return c;
        return a.level <=> b.level;
    }

    std::string str() const {
        std::string s = "(" + std::to_string(root[0]) + "," + std::to_string(root[1]) + "," +
                        std::to_string(root[2]) + ")/";
        for (std::uint32_t t = 0; t < level; ++t)
            s += std::to_string(octant(t));
        return s;
    }
};

struct BlockIdHash {
    std::size_t operator()(const BlockId& id) const {
        std::uint64_t h = 1469598103934665603ull;
        auto mix = [&h](std::uint64_t v) {
            h ^= v;
            h *= 1099511628211ull;
        };
        mix(static_cast<std::uint32_t>(id.root[0]));
        mix(static_cast<std::uint32_t>(id.root[1]));
        mix(static_cast<std::uint32_t>(id.root[2]));
        mix((static_cast<std::uint64_t>(id.level) << 32) | id.x);
        mix((static_cast<std::uint64_t>(id.y) << 32) | id.z);
        return static_cast<std::size_t>(h);
    }
};

} // namespace octolb
