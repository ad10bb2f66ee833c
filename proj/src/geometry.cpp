#include "spa/geometry.hpp"

#include <algorithm>

namespace spa {

bool point_in_polygon(Vec2 p, std::span<const Vec2> poly) {
    bool inside = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2 a = poly[i];
        const Vec2 b = poly[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
            if (p.x < x) inside = !inside;
        }
    }
    return inside;
}

Vec2 centroid(std::span<const Vec2> poly) {
    if (poly.empty()) return {};
    double area = 0.0;
    Vec2 c{};
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2 a = poly[i];
        const Vec2 b = poly[(i + 1) % poly.size()];
        const double w = a.cross(b);
        area += w;
        c = c + (a + b) * w;
    }
    if (std::abs(area) < 1e-12) {
        Vec2 mean{};
        for (auto v : poly) mean = mean + v;
        return mean * (1.0 / static_cast<double>(poly.size()));
    }
    return c * (1.0 / (3.0 * area));
}

double distance_to_segment(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 ab = b - a;
    const double len2 = ab.dot(ab);
    if (len2 < 1e-18) return distance(p, a);
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return distance(p, a + ab * t);
}

double distance_to_polygon(Vec2 p, std::span<const Vec2> poly) {
    if (point_in_polygon(p, poly)) return 0.0;
    double best = 1e300;
    for (std::size_t i = 0; i < poly.size(); ++i)
        best = std::min(best, distance_to_segment(p, poly[i], poly[(i + 1) % poly.size()]));
    return best;
}

namespace {
int orientation(Vec2 a, Vec2 b, Vec2 c) {
    const double v = (b - a).cross(c - a);
    if (v > 1e-12) return 1;
    if (v < -1e-12) return -1;
    return 0;
}
bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
    return std::min(a.x, b.x) - 1e-12 <= p.x && p.x <= std::max(a.x, b.x) + 1e-12 &&
           std::min(a.y, b.y) - 1e-12 <= p.y && p.y <= std::max(a.y, b.y) + 1e-12;
}
}  // namespace

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    const int o1 = orientation(a, b, c);
    const int o2 = orientation(a, b, d);
    const int o3 = orientation(c, d, a);
    const int o4 = orientation(c, d, b);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(a, b, c)) return true;
    if (o2 == 0 && on_segment(a, b, d)) return true;
    if (o3 == 0 && on_segment(c, d, a)) return true;
    if (o4 == 0 && on_segment(c, d, b)) return true;
    return false;
}

bool segment_hits_polygon(Vec2 a, Vec2 b, std::span<const Vec2> poly) {
    if (poly.size() < 3) return false;
    if (point_in_polygon(a, poly) || point_in_polygon(b, poly)) return true;
    for (std::size_t i = 0; i < poly.size(); ++i)
        if (segments_intersect(a, b, poly[i], poly[(i + 1) % poly.size()])) return true;
    return false;
}

Polygon rectangle(double x0, double y0, double x1, double y1) {
    return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

}  // namespace spa
