#pragma once

#include "octolb/scenario.hpp"

#include <algorithm>

#include <cmath>
#include <cstdint>
#include <vector>

namespace octolb {

/// Hopper discharge: a 45-degree-style cone above an orifice drains into a
/// collection tank. The tank box is the lower part of the simulation domain;
/// the orifice plane is the tank top. Spheres start on a simple cubic
/// lattice inside the cone with seeded random velocities.
struct HopperConfig {
    double cone_half_angle_deg = 45.0;
    double orifice_radius = 6.0;
    Aabb tank{{-32, -32, -28}, {32, 32, 0}};
    double lattice_spacing = 1.0;
    double particle_radius = 0.5;
    std::uint64_t velocity_seed = 1;
    double dt = 0.01;
    Vec3 gravity{0, 0, -1};
    /// Metered discharge: the cone releases particles bottom-center first,
    /// spread evenly over this many time units (0 = all at once). Stands in
    /// for the flux-limited outflow of a granular packing.
    double drain_time = 8.0;

    void validate() const {
        require_valid(tank, "hopper tank");
        if (cone_half_angle_deg <= 0.0 || cone_half_angle_deg >= 90.0)
            throw ValidationError("hopper: cone_half_angle_deg must lie in (0, 90)");
        if (orifice_radius <= particle_radius)
            throw ValidationError("hopper: orifice_radius must exceed particle_radius");
        if (lattice_spacing < 2.0 * particle_radius)
            throw ValidationError("hopper: lattice_spacing below touching distance");
        if (dt <= 0.0)
            throw ValidationError("hopper: dt must be positive");
        if (drain_time < 0.0)
            throw ValidationError("hopper: drain_time must be non-negative");
    }

    double tan_half_angle() const { return std::tan(cone_half_angle_deg * M_PI / 180.0); }

    /// Cone wall radius at height z above the orifice plane.
    double cone_radius(double z) const {
        return orifice_radius + (z - tank.max.z) * tan_half_angle();
    }

    /// The cone widens until it meets the box walls.
    double cone_top() const {
        const double half_x = (tank.max.x - tank.min.x) / 2.0;
        const double half_y = (tank.max.y - tank.min.y) / 2.0;
        const double rmax = std::min(half_x, half_y);
        return tank.max.z + (rmax - orifice_radius) / tan_half_angle();
    }

    /// Full simulation box: tank plus the cone head room.
    Aabb domain() const {
        Aabb d = tank;
        d.max.z = cone_top();
        return d;
    }

    Vec3 axis() const {
        return {(tank.min.x + tank.max.x) / 2.0, (tank.min.y + tank.max.y) / 2.0, 0.0};
    }
};

class HopperState {
public:
    explicit HopperState(const HopperConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        fill_cone();
        seed_velocities();
        schedule_release();
        const Aabb dom = cfg_.domain();
        cols_x_ = static_cast<std::int64_t>(
                      std::ceil((dom.max.x - dom.min.x) / cfg_.lattice_spacing)) +
                  1;
        cols_y_ = static_cast<std::int64_t>(
                      std::ceil((dom.max.y - dom.min.y) / cfg_.lattice_spacing)) +
                  1;
        pile_height_.assign(static_cast<std::size_t>(cols_x_ * cols_y_), 0.0);
    }

    const ParticleSet& particles() const { return particles_; }
    ParticleSet& particles_mut() { return particles_; }
    const HopperConfig& config() const { return cfg_; }
    std::size_t settled_count() const { return settled_total_; }
    double time() const { return time_; }

    /// Kinematic step: gravity integration, cone/wall projection with the
    /// normal velocity removed, orifice passage, column stacking in the tank.
    void step(double dt) {
        if (dt <= 0.0)
            throw DomainError("step_hopper: dt must be positive");
        const Aabb dom = cfg_.domain();
        const Vec3 ax = cfg_.axis();
        const double pr = cfg_.particle_radius;
        const double z_orifice = cfg_.tank.max.z;
        const double k = cfg_.tan_half_angle();
        const double inv_norm = 1.0 / std::sqrt(1.0 + k * k);
        for (std::size_t i = 0; i < particles_.positions.size(); ++i) {
            if (settled_[i] || time_ < release_time_[i])
                continue;
            Vec3& p = particles_.positions[i];
            Vec3& v = particles_.velocities[i];
            v += cfg_.gravity * dt;
            p += v * dt;

            if (p.z > z_orifice) {
                const double dx = p.x - ax.x;
                const double dy = p.y - ax.y;
                const double rad = std::sqrt(dx * dx + dy * dy);
                const double rmax = cfg_.cone_radius(p.z) - pr;
                if (rad > rmax && rad > 0.0) {
                    const double s = rmax / rad;
                    p.x = ax.x + dx * s;
                    p.y = ax.y + dy * s;
                    // outward cone normal: radial component out, axial down
                    const Vec3 n{dx / rad * inv_norm, dy / rad * inv_norm, -k * inv_norm};
                    const double vn = v.x * n.x + v.y * n.y + v.z * n.z;
                    if (vn > 0.0)
                        v += n * (-vn);
                    // drop the azimuthal component as well: a frictionless
                    // funnel would trap orbiting particles forever
                    const Vec3 t{-dy / rad, dx / rad, 0.0};
                    const double vt = v.x * t.x + v.y * t.y + v.z * t.z;
                    v += t * (-vt);
                }
            }

            clamp_axis(p.x, v.x, dom.min.x + pr, dom.max.x - pr);
            clamp_axis(p.y, v.y, dom.min.y + pr, dom.max.y - pr);
            clamp_axis(p.z, v.z, dom.min.z + pr, dom.max.z - pr);

            if (p.z < z_orifice) {
                const std::size_t land = column_index(p.x, p.y);
                const double rest = cfg_.tank.min.z + pile_height_[land] + pr;
                if (p.z <= rest) {
                    // roll downhill to a local minimum of the height field,
                    // then rest on top of that column
                    const std::size_t col = roll_downhill(land);
                    p = column_center(col);
                    p.z = cfg_.tank.min.z + pile_height_[col] + pr;
                    v = {0, 0, 0};
                    settled_[i] = 1;
                    ++settled_total_;
                    pile_height_[col] += 2.0 * pr;
                }
            }
        }
        time_ += dt;
    }

private:
    void fill_cone() {
        const double s = cfg_.lattice_spacing;
        const double pr = cfg_.particle_radius;
        const double z_lo = cfg_.tank.max.z + pr;
        const double z_hi = cfg_.cone_top() - pr;
        const Vec3 ax = cfg_.axis();
        particles_.radius = pr;
        for (double z = z_lo; z <= z_hi; z += s) {
            const double rmax = cfg_.cone_radius(z) - pr;
            const auto span = static_cast<std::int64_t>(std::floor(rmax / s));
            for (std::int64_t iy = -span; iy <= span; ++iy)
                for (std::int64_t ix = -span; ix <= span; ++ix) {
                    const double x = double(ix) * s;
                    const double y = double(iy) * s;
                    if (std::sqrt(x * x + y * y) <= rmax)
                        particles_.positions.push_back({ax.x + x, ax.y + y, z});
                }
        }
        settled_.assign(particles_.positions.size(), 0);
    }

    /// splitmix64: platform-independent uniform draws in [-1, 1]
    void seed_velocities() {
        std::uint64_t state = cfg_.velocity_seed;
        auto next = [&state]() {
            state += 0x9e3779b97f4a7c15ull;
            std::uint64_t z = state;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
            z ^= z >> 31;
            return 2.0 * (double(z >> 11) * 0x1.0p-53) - 1.0;
        };
        particles_.velocities.resize(particles_.positions.size());
        for (Vec3& v : particles_.velocities)
            v = {next(), next(), next()};
    }

    /// Drainage order: lowest first, then closest to the axis, spread evenly
    /// over drain_time.
    void schedule_release() {
        const std::size_t n = particles_.positions.size();
        release_time_.assign(n, 0.0);
        if (cfg_.drain_time <= 0.0 || n == 0)
            return;
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i)
            order[i] = i;
        const Vec3 ax = cfg_.axis();
        auto key = [&](std::size_t i) {
            const Vec3& p = particles_.positions[i];
            const double dx = p.x - ax.x;
            const double dy = p.y - ax.y;
            return std::pair<double, double>(p.z, dx * dx + dy * dy);
        };
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const auto ka = key(a), kb = key(b);
            if (ka != kb)
                return ka < kb;
            return a < b;
        });
        for (std::size_t rank = 0; rank < n; ++rank)
            release_time_[order[rank]] = cfg_.drain_time * double(rank) / double(n);
    }

    static void clamp_axis(double& p, double& v, double lo, double hi) {
        if (p < lo) {
            p = lo;
            if (v < 0)
                v = 0;
        } else if (p > hi) {
            p = hi;
            if (v > 0)
                v = 0;
        }
    }

    std::size_t column_index(double x, double y) const {
        auto cx =
            static_cast<std::int64_t>(std::floor((x - cfg_.tank.min.x) / cfg_.lattice_spacing));
        auto cy =
            static_cast<std::int64_t>(std::floor((y - cfg_.tank.min.y) / cfg_.lattice_spacing));
        cx = std::max<std::int64_t>(0, std::min(cx, cols_x_ - 1));
        cy = std::max<std::int64_t>(0, std::min(cy, cols_y_ - 1));
        return static_cast<std::size_t>(cy * cols_x_ + cx);
    }

    Vec3 column_center(std::size_t col) const {
        const auto cx = static_cast<std::int64_t>(col) % cols_x_;
        const auto cy = static_cast<std::int64_t>(col) / cols_x_;
        const double pr = cfg_.particle_radius;
        Vec3 c{cfg_.tank.min.x + (double(cx) + 0.5) * cfg_.lattice_spacing,
               cfg_.tank.min.y + (double(cy) + 0.5) * cfg_.lattice_spacing, 0.0};
        c.x = std::min(std::max(c.x, cfg_.tank.min.x + pr), cfg_.tank.max.x - pr);
        c.y = std::min(std::max(c.y, cfg_.tank.min.y + pr), cfg_.tank.max.y - pr);
        return c;
    }

    /// Walk to the strictly lowest 8-neighbor until none is lower;
    /// ties break toward the smallest column index.
    std::size_t roll_downhill(std::size_t col) const {
        for (;;) {
            const auto cx = static_cast<std::int64_t>(col) % cols_x_;
            const auto cy = static_cast<std::int64_t>(col) / cols_x_;
            std::size_t best = col;
            double best_h = pile_height_[col];
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const std::int64_t nx = cx + dx;
                    const std::int64_t ny = cy + dy;
                    if (nx < 0 || ny < 0 || nx >= cols_x_ || ny >= cols_y_)
                        continue;
                    const auto nc = static_cast<std::size_t>(ny * cols_x_ + nx);
                    if (pile_height_[nc] < best_h ||
                        (pile_height_[nc] == best_h && best != col && nc < best)) {
                        best = nc;
                        best_h = pile_height_[nc];
                    }
                }
            if (best == col)
                return col;
            col = best;
        }
    }

    HopperConfig cfg_;
    ParticleSet particles_;
    std::vector<std::uint8_t> settled_;
    std::vector<double> pile_height_;
    std::vector<double> release_time_;
    std::int64_t cols_x_ = 0;
    std::int64_t cols_y_ = 0;
    std::size_t settled_total_ = 0;
    double time_ = 0.0;
};

inline HopperState generate_hopper(const HopperConfig& cfg) {
    return HopperState(cfg);
}

inline HopperState step_hopper(HopperState state, double dt) {
    state.step(dt);
    return state;
}

} // namespace octolb
