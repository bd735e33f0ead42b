#pragma once

#include "octolb/errors.hpp"

#include <array>
#include <cmath>

namespace octolb {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double operator[](int k) const { return k == 0 ? x : (k == 1 ? y : z); }
    double& operator[](int k) { return k == 0 ? x : (k == 1 ? y : z); }

    friend Vec3 operator+(Vec3 a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3 operator-(Vec3 a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
    friend bool operator==(const Vec3& a, const Vec3& b) = default;

    Vec3& operator+=(const Vec3& b) {
        x += b.x;
        y += b.y;
        z += b.z;
        return *this;
    }

    double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

/// Axis-aligned box; min[k] < max[k] on every axis.
struct Aabb {
    Vec3 min;
    Vec3 max;

    bool valid() const { return min.x < max.x && min.y < max.y && min.z < max.z; }

    Vec3 extent() const { return max - min; }
    Vec3 center() const { return {(min.x + max.x) / 2, (min.y + max.y) / 2, (min.z + max.z) / 2}; }
    double volume() const {
        const Vec3 e = extent();
        return e.x * e.y * e.z;
    }

    bool contains(const Vec3& p) const {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z &&
               p.z <= max.z;
    }

    friend bool operator==(const Aabb& a, const Aabb& b) = default;
};

inline void require_valid(const Aabb& box, const char* what) {
    if (!box.valid())
        throw GeometryError(std::string(what) + ": box must satisfy min < max on every axis");
}

} // namespace octolb
