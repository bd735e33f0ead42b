#pragma once

#include "octolb/errors.hpp"
#include "octolb/forest.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

namespace octolb {

enum class CurveKind { Morton, Hilbert };

inline const char* curve_name(CurveKind k) {
    return k == CurveKind::Morton ? "morton" : "hilbert";
}

/// Lattice cell inside one root brick: x, y, z < 2^level.
struct CellCoord {
    std::uint32_t x = 0;
    std::uint32_t y = 0;
    std::uint32_t z = 0;
    std::uint32_t level = 0;
};

namespace detail {

inline void check_cell(const CellCoord& c) {
    if (c.level > kLevelCap)
        throw DomainError("cell level exceeds the level cap");
    const std::uint64_t n = std::uint64_t{1} << c.level;
    if (c.x >= n || c.y >= n || c.z >= n)
        throw DomainError("cell coordinate out of range for its level");
}

// 3D Hilbert curve as an octant state machine (12 orientation states).
// Octant convention matches BlockId: bit0 = x-high, bit1 = y-high,
// bit2 = z-high. State 0 is the canonical orientation entering at the
// origin corner.
inline constexpr std::uint8_t kHilbertDigit[12][8] = {
    {0, 1, 3, 2, 7, 6, 4, 5},
    {0, 7, 1, 6, 3, 4, 2, 5},
    {0, 3, 7, 4, 1, 2, 6, 5},
    {2, 3, 1, 0, 5, 4, 6, 7},
    {4, 3, 5, 2, 7, 0, 6, 1},
    {6, 5, 1, 2, 7, 4, 0, 3},
    {4, 7, 3, 0, 5, 6, 2, 1},
    {6, 7, 5, 4, 1, 0, 2, 3},
    {2, 5, 3, 4, 1, 6, 0, 7},
    {2, 1, 5, 6, 3, 0, 4, 7},
    {4, 5, 7, 6, 3, 2, 0, 1},
    {6, 1, 7, 0, 5, 2, 4, 3},
};

inline constexpr std::uint8_t kHilbertNextState[12][8] = {
    {1, 2, 3, 2, 4, 5, 3, 5},
    {2, 6, 0, 7, 8, 8, 0, 7},
    {0, 9, 10, 9, 1, 1, 11, 11},
    {6, 0, 6, 11, 9, 0, 9, 8},
    {11, 11, 0, 7, 5, 9, 0, 7},
    {4, 4, 8, 8, 0, 6, 10, 6},
    {5, 7, 5, 3, 1, 1, 11, 11},
    {6, 1, 6, 10, 9, 4, 9, 10},
    {10, 3, 1, 1, 10, 3, 5, 9},
    {4, 4, 8, 8, 2, 7, 2, 3},
    {7, 2, 11, 2, 7, 5, 8, 5},
    {10, 3, 2, 6, 10, 3, 4, 4},
};

} // namespace detail

/// Bit-interleaved index: bit 3t+0 of the result is bit t of x, 3t+1 of y,
/// 3t+2 of z. Bijective on the level cube.
inline std::uint64_t morton_index(const CellCoord& c) {
    detail::check_cell(c);
    std::uint64_t out = 0;
    for (std::uint32_t t = 0; t < c.level; ++t) {
        out |= static_cast<std::uint64_t>((c.x >> t) & 1u) << (3 * t);
        out |= static_cast<std::uint64_t>((c.y >> t) & 1u) << (3 * t + 1);
        out |= static_cast<std::uint64_t>((c.z >> t) & 1u) << (3 * t + 2);
    }
    return out;
}

/// Table-driven 3D Hilbert index; consecutive indices are face-adjacent cells.
inline std::uint64_t hilbert_index(const CellCoord& c) {
    detail::check_cell(c);
    std::uint64_t out = 0;
    std::uint32_t state = 0;
    for (std::uint32_t t = c.level; t-- > 0;) {
        const std::uint32_t o =
            ((c.x >> t) & 1u) | (((c.y >> t) & 1u) << 1) | (((c.z >> t) & 1u) << 2);
        out = (out << 3) | detail::kHilbertDigit[state][o];
        state = detail::kHilbertNextState[state][o];
    }
    return out;
}

/// Total order of a forest's leaves along the chosen curve. Bricks are
/// visited x-fastest lexicographically; within a brick a leaf sits at the
/// start of the index range its descendants would occupy.
inline std::vector<BlockId> order_leaves(const Forest& forest, CurveKind kind) {
    struct Key {
        std::uint64_t brick;
        std::uint64_t digits;
        std::uint8_t level;
        BlockId id;
    };
    const auto dims = forest.root_dims();
    const std::uint32_t cap = forest.max_level();
    std::vector<Key> keys;
    keys.reserve(forest.size());
    for (const BlockId& id : forest.leaves()) {
        const std::uint64_t brick =
            static_cast<std::uint64_t>(id.root[0]) +
            static_cast<std::uint64_t>(dims[0]) *
                (static_cast<std::uint64_t>(id.root[1]) +
                 static_cast<std::uint64_t>(dims[1]) * static_cast<std::uint64_t>(id.root[2]));
        std::uint64_t digits = 0;
        if (kind == CurveKind::Morton) {
            for (std::uint32_t t = 0; t < id.level; ++t)
                digits = (digits << 3) | id.octant(t);
        } else {
            std::uint32_t state = 0;
            for (std::uint32_t t = 0; t < id.level; ++t) {
                const std::uint32_t o = id.octant(t);
                digits = (digits << 3) | detail::kHilbertDigit[state][o];
                state = detail::kHilbertNextState[state][o];
            }
        }
        digits <<= 3 * (cap - id.level); // range start of the leaf's descendants
        keys.push_back({brick, digits, id.level, id});
    }
    std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
        if (a.brick != b.brick)
            return a.brick < b.brick;
        if (a.digits != b.digits)
            return a.digits < b.digits;
        return a.level < b.level;
    });
    std::vector<BlockId> out;
    out.reserve(keys.size());
    for (const Key& k : keys)
        out.push_back(k.id);
    return out;
}

} // namespace octolb
