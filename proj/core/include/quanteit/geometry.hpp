#pragma once

#include <cstddef>
#include <string>

#include "quanteit/errors.hpp"

namespace quanteit {

enum class GridKind { Grid2D, Grid3D };

// Shape of the flat image vector. Flat index is x + width*(y + height*z),
// i.e. row-major 2D slices stacked along z.
struct GeometrySpec {
    GridKind kind = GridKind::Grid2D;
    int width = 0;
    int height = 0;
    int depth = 1; // always 1 for Grid2D

    static GeometrySpec grid2d(int width, int height);
    static GeometrySpec grid3d(int width, int height, int depth);

    std::size_t element_count() const {
        return static_cast<std::size_t>(width) * height * depth;
    }
    int axis_count() const { return kind == GridKind::Grid2D ? 2 : 3; }
    std::size_t index(int x, int y, int z = 0) const {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(width) *
                   (static_cast<std::size_t>(y) + static_cast<std::size_t>(height) * z);
    }

    void validate() const;
    std::string to_string() const;

    bool operator==(const GeometrySpec&) const = default;
};

inline GeometrySpec GeometrySpec::grid2d(int width, int height) {
    GeometrySpec g{GridKind::Grid2D, width, height, 1};
    g.validate();
    return g;
}

inline GeometrySpec GeometrySpec::grid3d(int width, int height, int depth) {
    GeometrySpec g{GridKind::Grid3D, width, height, depth};
    g.validate();
    return g;
}

inline void GeometrySpec::validate() const {
    if (width < 1 || height < 1 || depth < 1)
        throw ValidationError("geometry: dimensions must be positive, got " + to_string());
    if (kind == GridKind::Grid2D && depth != 1)
        throw ValidationError("geometry: 2D grid must have depth 1, got " + to_string());
}

inline std::string GeometrySpec::to_string() const {
    std::string s = std::to_string(width) + "x" + std::to_string(height);
    if (kind == GridKind::Grid3D) s += "x" + std::to_string(depth);
    return s;
}

} // namespace quanteit
