#include "collab/core.hpp"

#include <cmath>
#include <sstream>

#include "collab/error.hpp"

namespace collab {

namespace {

std::string describe_box(double x_min, double y_min, double x_max, double y_max) {
    std::ostringstream os;
    os << "(" << x_min << ", " << y_min << ", " << x_max << ", " << y_max << ")";
    return os.str();
}

}  // namespace

BBox::BBox(double x_min, double y_min, double x_max, double y_max)
    : x_min_(x_min), y_min_(y_min), x_max_(x_max), y_max_(y_max) {
    for (double v : {x_min, y_min, x_max, y_max}) {
        if (!std::isfinite(v) || v < 0.0) {
            throw GeometryError("bbox coordinates must be finite and >= 0: " +
                                describe_box(x_min, y_min, x_max, y_max));
        }
    }
    if (!(x_min < x_max) || !(y_min < y_max)) {
        throw GeometryError("inverted or empty bbox " + describe_box(x_min, y_min, x_max, y_max));
    }
}

Frame::Frame(double width, double height, double origin_x, double origin_y)
    : width_(width), height_(height), origin_x_(origin_x), origin_y_(origin_y) {
    if (!std::isfinite(width) || !std::isfinite(height) || !(width > 0.0) || !(height > 0.0)) {
        throw GeometryError("frame extent must be positive");
    }
    if (!std::isfinite(origin_x) || !std::isfinite(origin_y)) {
        throw GeometryError("frame origin must be finite");
    }
}

bool Frame::contains(Point p) const noexcept {
    return p.x >= origin_x_ && p.x <= origin_x_ + width_ && p.y >= origin_y_ && p.y <= origin_y_ + height_;
}

Point bbox_center(const BBox& b) noexcept {
    return {(b.x_min() + b.x_max()) / 2.0, (b.y_min() + b.y_max()) / 2.0};
}

Offset normalized_offset(Point p, const Frame& f) {
    if (!f.contains(p)) {
        std::ostringstream os;
        os << "point (" << p.x << ", " << p.y << ") outside frame " << f.width() << "x" << f.height() << " at ("
           << f.origin_x() << ", " << f.origin_y() << ")";
        throw PointOutsideFrame(os.str());
    }
    const double half_w = f.width() / 2.0;
    const double half_h = f.height() / 2.0;
    return {(p.x - (f.origin_x() + half_w)) / half_w, (p.y - (f.origin_y() + half_h)) / half_h};
}

std::string_view to_string(Role r) noexcept {
    switch (r) {
        case Role::Subject: return "subject";
        case Role::Object: return "object";
        case Role::Unknown: return "unknown";
    }
    return "unknown";
}

std::string_view to_string(Ring r) noexcept {
    switch (r) {
        case Ring::Center: return "center";
        case Ring::Transition: return "transition";
        case Ring::Edge: return "edge";
    }
    return "center";
}

std::string_view to_string(Direction d) noexcept {
    switch (d) {
        case Direction::Top: return "top";
        case Direction::Bottom: return "bottom";
        case Direction::Left: return "left";
        case Direction::Right: return "right";
        case Direction::None: return "none";
    }
    return "none";
}

Role role_from_string(std::string_view s) {
    if (s == "subject") return Role::Subject;
    if (s == "object") return Role::Object;
    if (s == "unknown") return Role::Unknown;
    throw SchemaError("unknown role '" + std::string(s) + "'");
}

}  // namespace collab
