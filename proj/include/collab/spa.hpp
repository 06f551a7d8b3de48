#pragma once

#include <span>
#include <string>
#include <vector>

#include "collab/core.hpp"

namespace collab {

/// Geometry of the ring/direction partition and the recursion guard.
struct SpaConfig {
    // Chebyshev radius bounds of the center and transition rings, in
    // half-extent units. 0 < inner < outer <= 1.
    double inner_fraction{1.0 / 3.0};
    double outer_fraction{2.0 / 3.0};
    int max_depth{8};
    // Per-side growth of a child frame, as a fraction of the colliding centers' extent.
    double inflation{0.1};

    void validate() const;  // throws ConfigError
};

struct RegionAssignment {
    std::string instance_id;
    std::vector<RegionLabel> path;  // path[0] is the label in the root frame
    Frame final_frame;
    bool ordinal_fallback{false};   // still colliding at max_depth
};

struct DuplicateGroup {
    std::string category;
    std::string description;
    std::vector<std::size_t> members;  // indices into the input list, ascending
};

/// Groups of size >= 2 sharing an exact (category, description), ordered by
/// first occurrence. Throws MixedImages if the input spans several images.
std::vector<DuplicateGroup> group_duplicates(std::span<const Instance> instances);

/// Ring by Chebyshev radius of the normalized offset; direction by the
/// dominant axis (ties go horizontal). Throws PointOutsideFrame.
RegionLabel assign_region(Point p, const Frame& f, const SpaConfig& cfg);

/// Labels each bbox center in `f` and recursively subdivides every label held
/// by two or more instances. Output order follows `group`.
std::vector<RegionAssignment> refine(std::span<const Instance> group, const Frame& f, const SpaConfig& cfg,
                                     int depth = 0);

/// The smallest rectangle holding `centers`, grown by `inflation` of its own
/// extent per side; an axis with zero extent gets 10% of the parent's extent.
Frame child_frame(std::span<const Point> centers, const Frame& parent, double inflation);

// "center" or "{direction}-{ring}", e.g. "left-edge".
std::string render_label(RegionLabel label);

/// "at the L0 of the image" for a single label, otherwise
/// "in the Lk part of ... part of the L0 of the image".
std::string render_spatial_phrase(const RegionAssignment& a);

struct AugmentResult {
    std::vector<Instance> instances;
    // One entry per duplicate-group member, in input order.
    std::vector<RegionAssignment> assignments;
    std::size_t duplicate_groups{0};
    std::size_t ordinal_suffixes{0};
};

/// Rewrites duplicate-group members with a spatial phrase (and an ordinal
/// "(#k)" when geometry cannot separate them). Everything else is returned
/// untouched. Throws MixedImages.
AugmentResult augment_image(std::span<const Instance> instances, const Frame& image_frame, const SpaConfig& cfg);

std::vector<Instance> augment_descriptions(std::span<const Instance> instances, const Frame& image_frame,
                                           const SpaConfig& cfg);

}  // namespace collab
