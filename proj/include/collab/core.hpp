#pragma once

#include <string>
#include <string_view>

namespace collab {

struct Point {
    double x{0.0};
    double y{0.0};

    friend bool operator==(const Point&, const Point&) = default;
};

/// Axis-aligned pixel box, origin top-left, y grows downward.
/// Construction enforces x_min < x_max, y_min < y_max and finite, non-negative
/// coordinates; a BBox that exists is always valid.
class BBox {
public:
    BBox(double x_min, double y_min, double x_max, double y_max);

    double x_min() const noexcept { return x_min_; }
    double y_min() const noexcept { return y_min_; }
    double x_max() const noexcept { return x_max_; }
    double y_max() const noexcept { return y_max_; }
    double width() const noexcept { return x_max_ - x_min_; }
    double height() const noexcept { return y_max_ - y_min_; }

    friend bool operator==(const BBox&, const BBox&) = default;

private:
    double x_min_;
    double y_min_;
    double x_max_;
    double y_max_;
};

/// A rectangular region of the original image: the whole image at the root,
/// or a refinement window during spatial subdivision.
class Frame {
public:
    Frame(double width, double height, double origin_x = 0.0, double origin_y = 0.0);

    double width() const noexcept { return width_; }
    double height() const noexcept { return height_; }
    double origin_x() const noexcept { return origin_x_; }
    double origin_y() const noexcept { return origin_y_; }
    Point center() const noexcept { return {origin_x_ + width_ / 2.0, origin_y_ + height_ / 2.0}; }

    // Borders inclusive.
    bool contains(Point p) const noexcept;

    friend bool operator==(const Frame&, const Frame&) = default;

private:
    double width_;
    double height_;
    double origin_x_;
    double origin_y_;
};

enum class Role { Subject, Object, Unknown };

struct Instance {
    std::string instance_id;
    std::string image_id;
    BBox bbox;
    std::string category;
    double confidence{0.0};
    Role role{Role::Unknown};
    std::string description;

    friend bool operator==(const Instance&, const Instance&) = default;
};

enum class Ring { Center, Transition, Edge };

enum class Direction { Top, Bottom, Left, Right, None };

struct RegionLabel {
    Ring ring{Ring::Center};
    Direction direction{Direction::None};

    friend bool operator==(const RegionLabel&, const RegionLabel&) = default;
    friend auto operator<=>(const RegionLabel&, const RegionLabel&) = default;
};

struct Offset {
    double dx{0.0};
    double dy{0.0};
};

Point bbox_center(const BBox& b) noexcept;

/// Offset of p from the frame center in half-extent units: (0,0) at the
/// center, +-1 on the borders. Throws PointOutsideFrame when p is not inside f.
Offset normalized_offset(Point p, const Frame& f);

std::string_view to_string(Role r) noexcept;
std::string_view to_string(Ring r) noexcept;
std::string_view to_string(Direction d) noexcept;

// Inverse of to_string(Role); throws SchemaError for unknown names.
Role role_from_string(std::string_view s);

}  // namespace collab
