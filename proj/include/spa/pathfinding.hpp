#pragma once
//
// Uniform occupancy grid over the world bounds with 8-connected A* and
// string pulling. Cells within `clearance` of an obstacle are blocked.
//

#include "spa/domain.hpp"

#include <optional>
#include <vector>

namespace spa {

class NavGrid {
public:
    NavGrid() = default;
    NavGrid(const WorldGeometry& world, double cell = 0.25, double clearance = 0.25);

    bool free(Vec2 p) const;
    /// Straight walk along a-b stays in free cells.
    bool line_free(Vec2 a, Vec2 b) const;
    std::optional<Vec2> nearest_free(Vec2 p, double max_radius = 3.0) const;

    /// Waypoints from `from` to `to`, both included. nullopt when `to` is
    /// blocked or unreachable.
    std::optional<std::vector<Vec2>> path(Vec2 from, Vec2 to) const;
    /// Path to a region: its centroid when free, else the nearest free point
    /// inside it.
    std::optional<std::vector<Vec2>> path_to_region(Vec2 from, const Polygon& region) const;

    int width() const { return w_; }
    int height() const { return h_; }
    double cell() const { return cell_; }

private:
    int index(int cx, int cy) const { return cy * w_ + cx; }
    bool cell_free(int cx, int cy) const;
    std::pair<int, int> cell_of(Vec2 p) const;
    Vec2 center(int cx, int cy) const;

    Vec2 origin_{};
    double cell_ = 0.25;
    int w_ = 0;
    int h_ = 0;
    std::vector<std::uint8_t> blocked_;
};

}  // namespace spa
