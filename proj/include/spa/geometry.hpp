#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace spa {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double cross(Vec2 o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    bool operator==(const Vec2&) const = default;
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

using Polygon = std::vector<Vec2>;

bool point_in_polygon(Vec2 p, std::span<const Vec2> poly);
Vec2 centroid(std::span<const Vec2> poly);
double distance_to_segment(Vec2 p, Vec2 a, Vec2 b);
/// Distance from p to the polygon boundary; 0 when p is inside.
double distance_to_polygon(Vec2 p, std::span<const Vec2> poly);
bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d);
/// True when the open segment a-b touches the interior or boundary of poly.
bool segment_hits_polygon(Vec2 a, Vec2 b, std::span<const Vec2> poly);
Polygon rectangle(double x0, double y0, double x1, double y1);

}  // namespace spa
