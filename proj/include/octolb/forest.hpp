#pragma once

#include "octolb/block_id.hpp"
#include "octolb/errors.hpp"
#include "octolb/geometry.hpp"

#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

namespace octolb {

/// Integer extent of a block on the forest-wide finest lattice
/// (2^max_level cells per brick per axis). Closed boxes; two blocks touch
/// iff the boxes intersect, and interiors are disjoint for distinct leaves.
struct CellBox {
    std::array<std::uint64_t, 3> lo{};
    std::array<std::uint64_t, 3> hi{};

    bool touches(const CellBox& o) const {
        for (int k = 0; k < 3; ++k)
            if (lo[k] > o.hi[k] || o.lo[k] > hi[k])
                return false;
        return true;
    }
};

struct NeighborInfo {
    BlockId id;
    double interface_area = 0.0; ///< shared face area; 0 for edge/corner contact
};

/// Forest of octrees over a grid of brick-shaped root domains. The leaves
/// partition the domain exactly; all geometry is derived from integer
/// lattice coordinates scaled once into the domain box.
///
/// Value type: copy freely, mutate single-writer.
class Forest {
public:
    Forest(std::array<std::int32_t, 3> root_dims, const Aabb& domain,
           std::uint32_t initial_level, std::uint32_t max_level = 10)
        : root_dims_(root_dims), domain_(domain), max_level_(max_level) {
        require_valid(domain, "create_forest");
        if (root_dims_[0] < 1 || root_dims_[1] < 1 || root_dims_[2] < 1)
            throw GeometryError("create_forest: root_dims must be >= 1 on every axis");
        if (max_level_ > kLevelCap)
            throw DomainError("create_forest: max_level exceeds the level cap");
        if (initial_level > max_level_)
            throw RefinementError("create_forest: initial_level exceeds max_level");
        const std::uint32_t n = 1u << initial_level;
        for (std::int32_t k = 0; k < root_dims_[2]; ++k)
            for (std::int32_t j = 0; j < root_dims_[1]; ++j)
                for (std::int32_t i = 0; i < root_dims_[0]; ++i)
                    for (std::uint32_t lz = 0; lz < n; ++lz)
                        for (std::uint32_t ly = 0; ly < n; ++ly)
                            for (std::uint32_t lx = 0; lx < n; ++lx)
                                insert_leaf(BlockId{{i, j, k},
                                                    static_cast<std::uint8_t>(initial_level),
                                                    lx, ly, lz});
    }

    const std::set<BlockId>& leaves() const { return leaves_; }
    std::size_t size() const { return leaves_.size(); }
    const Aabb& domain() const { return domain_; }
    std::array<std::int32_t, 3> root_dims() const { return root_dims_; }
    std::uint32_t max_level() const { return max_level_; }

    bool is_leaf(const BlockId& id) const { return index_.count(id) != 0; }

    /// Physical cell size of one finest-lattice cell, per axis.
    std::array<double, 3> unit_lengths() const {
        const Vec3 e = domain_.extent();
        return {e.x / static_cast<double>(cells(0)), e.y / static_cast<double>(cells(1)),
                e.z / static_cast<double>(cells(2))};
    }

    CellBox cell_box(const BlockId& id) const {
        const std::uint64_t w = std::uint64_t{1} << (max_level_ - id.level);
        CellBox b;
        const std::array<std::uint64_t, 3> c = {id.x, id.y, id.z};
        for (int k = 0; k < 3; ++k) {
            b.lo[k] = (static_cast<std::uint64_t>(id.root[k]) << max_level_) + c[k] * w;
            b.hi[k] = b.lo[k] + w;
        }
        return b;
    }

    Aabb block_aabb(const BlockId& id) const {
        validate_id(id);
        const CellBox b = cell_box(id);
        const auto u = unit_lengths();
        Aabb out;
        for (int k = 0; k < 3; ++k) {
            out.min[k] = domain_.min[k] + static_cast<double>(b.lo[k]) * u[k];
            out.max[k] = domain_.min[k] + static_cast<double>(b.hi[k]) * u[k];
        }
        return out;
    }

    void refine(const BlockId& id) {
        if (!is_leaf(id))
            throw NotFoundError("refine_block: " + id.str() + " is not a leaf");
        if (id.level >= max_level_)
            throw RefinementError("refine_block: " + id.str() + " is already at max_level");
        erase_leaf(id);
        for (std::uint32_t o = 0; o < 8; ++o)
            insert_leaf(id.child(o));
    }

    void coarsen(const BlockId& parent) {
        validate_id(parent);
        if (parent.level + 1u > max_level_)
            throw CoarseningError("coarsen_siblings: children of " + parent.str() +
                                  " would be below max_level");
        for (std::uint32_t o = 0; o < 8; ++o)
            if (!is_leaf(parent.child(o)))
                throw CoarseningError("coarsen_siblings: child " + parent.child(o).str() +
                                      " of " + parent.str() + " is missing or refined");
        for (std::uint32_t o = 0; o < 8; ++o)
            erase_leaf(parent.child(o));
        insert_leaf(parent);
    }

    /// All leaves sharing a face, edge or corner with `id`, sorted by BlockId.
    std::vector<NeighborInfo> neighbors(const BlockId& id) const {
        if (!is_leaf(id))
            throw NotFoundError("neighbors: " + id.str() + " is not a leaf");
        const CellBox qbox = cell_box(id);
        const std::uint32_t L = id.level;
        std::set<BlockId> found;
        for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0 && dz == 0)
                        continue;
                    BlockId cell;
                    if (!level_neighbor(id, dx, dy, dz, cell))
                        continue;
                    // a coarser or equal cover of the cell
                    bool covered = false;
                    for (std::uint32_t lev = L + 1; lev-- > 0;) {
                        const BlockId cand = cell.ancestor(lev);
                        if (is_leaf(cand)) {
                            found.insert(cand);
                            covered = true;
                            break;
                        }
                    }
                    if (covered)
                        continue;
                    // finer leaves inside the cell, restricted to the contact region
                    std::vector<BlockId> stack{cell};
                    while (!stack.empty()) {
                        const BlockId n = stack.back();
                        stack.pop_back();
                        if (is_leaf(n)) {
                            found.insert(n);
                            continue;
                        }
                        if (n.level >= max_level_)
                            continue;
                        for (std::uint32_t o = 0; o < 8; ++o) {
                            const BlockId c = n.child(o);
                            if (cell_box(c).touches(qbox) && subtree_nonempty(c))
                                stack.push_back(c);
                        }
                    }
                }
        std::vector<NeighborInfo> out;
        out.reserve(found.size());
        const auto u = unit_lengths();
        for (const BlockId& nb : found)
            out.push_back({nb, interface_area(qbox, cell_box(nb), u)});
        return out;
    }

    /// Splits blocks until every neighboring pair differs by at most one
    /// level (faces, edges and corners alike). Refinement only. Returns the
    /// blocks that were split, in the order they were split.
    std::vector<BlockId> enforce_two_to_one() {
        std::vector<BlockId> split;
        for (;;) {
            std::set<BlockId> to_refine;
            for (const BlockId& leaf : leaves_) {
                if (leaf.level < 2)
                    continue;
                for (const NeighborInfo& nb : neighbors(leaf))
                    if (nb.id.level + 1u < leaf.level)
                        to_refine.insert(nb.id);
            }
            if (to_refine.empty())
                return split;
            for (const BlockId& b : to_refine) {
                if (b.level >= max_level_)
                    throw RefinementError("enforce_two_to_one: ripple would exceed max_level");
                refine(b);
                split.push_back(b);
            }
        }
    }

    /// Leaf whose box contains the point; on internal boundaries the
    /// lower-coordinate leaf wins.
    BlockId locate(const Vec3& p) const {
        const auto u = unit_lengths();
        std::array<std::uint64_t, 3> g{};
        for (int k = 0; k < 3; ++k) {
            const double f = (p[k] - domain_.min[k]) / u[k];
            double c = std::ceil(f) - 1.0;
            if (c < 0.0)
                c = 0.0;
            const std::uint64_t limit = cells(k) - 1;
            std::uint64_t gi = static_cast<std::uint64_t>(c);
            if (gi > limit)
                gi = limit;
            g[k] = gi;
        }
        BlockId fine;
        fine.level = static_cast<std::uint8_t>(max_level_);
        const std::uint64_t mask = (std::uint64_t{1} << max_level_) - 1;
        fine.root = {static_cast<std::int32_t>(g[0] >> max_level_),
                     static_cast<std::int32_t>(g[1] >> max_level_),
                     static_cast<std::int32_t>(g[2] >> max_level_)};
        fine.x = static_cast<std::uint32_t>(g[0] & mask);
        fine.y = static_cast<std::uint32_t>(g[1] & mask);
        fine.z = static_cast<std::uint32_t>(g[2] & mask);
        for (std::uint32_t lev = 0; lev <= max_level_; ++lev) {
            const BlockId cand = fine.ancestor(lev);
            if (is_leaf(cand))
                return cand;
        }
        throw ConsistencyError("locate: point is not covered by any leaf");
    }

    /// One leaf per line: "i j k / o1 o2 ... on".
    void write_leaves(std::ostream& os) const {
        for (const BlockId& id : leaves_) {
            os << id.root[0] << ' ' << id.root[1] << ' ' << id.root[2] << " /";
            for (std::uint32_t t = 0; t < id.level; ++t)
                os << ' ' << id.octant(t);
            os << '\n';
        }
    }

    std::string serialize_leaves() const {
        std::ostringstream os;
        write_leaves(os);
        return os.str();
    }

    static Forest parse_leaves(std::array<std::int32_t, 3> root_dims, const Aabb& domain,
                               std::uint32_t max_level, std::istream& is) {
        Forest f(root_dims, domain, 0, max_level);
        f.leaves_.clear();
        f.index_.clear();
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            if (line.empty())
                continue;
            std::istringstream ls(line);
            BlockId id;
            std::string slash;
            if (!(ls >> id.root[0] >> id.root[1] >> id.root[2] >> slash) || slash != "/")
                throw IoError("forest text, line " + std::to_string(lineno) +
                              ": expected \"i j k / o1 ... on\"");
            std::uint32_t o = 0;
            while (ls >> o) {
                if (o > 7)
                    throw IoError("forest text, line " + std::to_string(lineno) +
                                  ": octant digit out of range");
                if (id.level >= max_level)
                    throw IoError("forest text, line " + std::to_string(lineno) +
                                  ": path longer than max_level");
                id = id.child(o);
            }
            if (ls.fail() && !ls.eof())
                throw IoError("forest text, line " + std::to_string(lineno) +
                              ": trailing garbage after the octant path");
            f.validate_id(id);
            if (f.is_leaf(id))
                throw IoError("forest text, line " + std::to_string(lineno) + ": duplicate leaf");
            f.insert_leaf(id);
        }
        return f;
    }

    /// First leaf >= id in canonical order belongs to id's subtree?
    bool subtree_nonempty(const BlockId& id) const {
        auto it = leaves_.lower_bound(id);
        if (it == leaves_.end())
            return false;
        return it->level >= id.level && it->ancestor(id.level) == id;
    }

private:
    std::uint64_t cells(int k) const {
        return static_cast<std::uint64_t>(root_dims_[k]) << max_level_;
    }

    void insert_leaf(const BlockId& id) {
        leaves_.insert(id);
        index_.insert(id);
    }

    void erase_leaf(const BlockId& id) {
        leaves_.erase(id);
        index_.erase(id);
    }

    void validate_id(const BlockId& id) const {
        if (id.root[0] < 0 || id.root[0] >= root_dims_[0] || id.root[1] < 0 ||
            id.root[1] >= root_dims_[1] || id.root[2] < 0 || id.root[2] >= root_dims_[2])
            throw NotFoundError("block id " + id.str() + ": root index outside the grid");
        if (id.level > max_level_)
            throw NotFoundError("block id " + id.str() + ": level exceeds max_level");
        const std::uint32_t n = 1u << id.level;
        if (id.x >= n || id.y >= n || id.z >= n)
            throw NotFoundError("block id " + id.str() + ": coordinates outside the brick");
    }

    /// Same-level neighbor cell in direction (dx,dy,dz); false at the wall.
    bool level_neighbor(const BlockId& id, int dx, int dy, int dz, BlockId& out) const {
        const std::uint32_t L = id.level;
        const std::int64_t gx = (static_cast<std::int64_t>(id.root[0]) << L) + id.x + dx;
        const std::int64_t gy = (static_cast<std::int64_t>(id.root[1]) << L) + id.y + dy;
        const std::int64_t gz = (static_cast<std::int64_t>(id.root[2]) << L) + id.z + dz;
        if (gx < 0 || gy < 0 || gz < 0)
            return false;
        if (gx >= (static_cast<std::int64_t>(root_dims_[0]) << L) ||
            gy >= (static_cast<std::int64_t>(root_dims_[1]) << L) ||
            gz >= (static_cast<std::int64_t>(root_dims_[2]) << L))
            return false;
        const std::int64_t mask = (std::int64_t{1} << L) - 1;
        out.level = static_cast<std::uint8_t>(L);
        out.root = {static_cast<std::int32_t>(gx >> L), static_cast<std::int32_t>(gy >> L),
                    static_cast<std::int32_t>(gz >> L)};
        out.x = static_cast<std::uint32_t>(gx & mask);
        out.y = static_cast<std::uint32_t>(gy & mask);
        out.z = static_cast<std::uint32_t>(gz & mask);
        return true;
    }

    double interface_area(const CellBox& a, const CellBox& b,
                          const std::array<double, 3>& u) const {
        std::array<std::uint64_t, 3> ov{};
        int zero_axes = 0;
        for (int k = 0; k < 3; ++k) {
            const std::uint64_t lo = std::max(a.lo[k], b.lo[k]);
            const std::uint64_t hi = std::min(a.hi[k], b.hi[k]);
            ov[k] = hi - lo; // touches() guarantees hi >= lo
            if (ov[k] == 0)
                ++zero_axes;
        }
        if (zero_axes != 1)
            return 0.0;
        double area = 1.0;
        for (int k = 0; k < 3; ++k)
            if (ov[k] != 0)
                area *= static_cast<double>(ov[k]) * u[k];
        return area;
    }

    std::array<std::int32_t, 3> root_dims_;
    Aabb domain_;
    std::uint32_t max_level_;
    std::set<BlockId> leaves_;
    std::unordered_set<BlockId, BlockIdHash> index_;
};

/// Operation-style wrappers returning updated forests.
inline Forest create_forest(std::array<std::int32_t, 3> root_dims, const Aabb& domain,
                            std::uint32_t initial_level, std::uint32_t max_level = 10) {
    return Forest(root_dims, domain, initial_level, max_level);
}

inline Forest refine_block(Forest f, const BlockId& id) {
    f.refine(id);
    return f;
}

inline Forest coarsen_siblings(Forest f, const BlockId& parent) {
    f.coarsen(parent);
    return f;
}

inline Forest enforce_two_to_one(Forest f) {
    f.enforce_two_to_one();
    return f;
}

} // namespace octolb
