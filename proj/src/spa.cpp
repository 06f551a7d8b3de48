#include "collab/spa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <utility>

#include "collab/error.hpp"

namespace collab {

void SpaConfig::validate() const {
    if (!(inner_fraction > 0.0 && inner_fraction < outer_fraction && outer_fraction <= 1.0)) {
        throw ConfigError("spa.ring_fractions must satisfy 0 < f1 < f2 <= 1");
    }
    if (max_depth < 0) throw ConfigError("spa.max_depth must be >= 0");
    if (!(inflation >= 0.0) || !std::isfinite(inflation)) throw ConfigError("spa.inflation must be >= 0");
}

namespace {

void require_single_image(std::span<const Instance> instances) {
    for (const auto& i : instances) {
        if (i.image_id != instances.front().image_id) {
            throw MixedImages("instances from images '" + instances.front().image_id + "' and '" + i.image_id +
                              "' cannot be augmented together");
        }
    }
}

}  // namespace

std::vector<DuplicateGroup> group_duplicates(std::span<const Instance> instances) {
    require_single_image(instances);
    std::map<std::pair<std::string, std::string>, std::size_t> slot;
    std::vector<DuplicateGroup> groups;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        auto key = std::make_pair(instances[i].category, instances[i].description);
        auto [it, inserted] = slot.emplace(key, groups.size());
        if (inserted) groups.push_back(DuplicateGroup{key.first, key.second, {}});
        groups[it->second].members.push_back(i);
    }
    std::erase_if(groups, [](const DuplicateGroup& g) { return g.members.size() < 2; });
    return groups;
}

namespace {

RegionLabel label_for(double dx, double dy, const SpaConfig& cfg) {
    const double ax = std::abs(dx), ay = std::abs(dy);
    const double r = std::max(ax, ay);

    RegionLabel label;
    label.ring = r <= cfg.inner_fraction ? Ring::Center : r <= cfg.outer_fraction ? Ring::Transition : Ring::Edge;
    if (dx == 0.0 && dy == 0.0) {
        label.direction = Direction::None;
    } else if (ax >= ay) {
        label.direction = dx < 0.0 ? Direction::Left : Direction::Right;
    } else {
        label.direction = dy < 0.0 ? Direction::Top : Direction::Bottom;
    }
    return label;
}

}  // namespace

RegionLabel assign_region(Point p, const Frame& f, const SpaConfig& cfg) {
    const auto [dx, dy] = normalized_offset(p, f);
    return label_for(dx, dy, cfg);
}

Frame child_frame(std::span<const Point> centers, const Frame& parent, double inflation) {
    double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
    double min_y = min_x, max_y = -min_x;
    for (const auto& c : centers) {
        min_x = std::min(min_x, c.x);
        max_x = std::max(max_x, c.x);
        min_y = std::min(min_y, c.y);
        max_y = std::max(max_y, c.y);
    }
    auto axis = [inflation](double lo, double hi, double parent_extent) {
        const double span = hi - lo;
        double origin, extent;
        if (span > 0.0) {
            origin = lo - inflation * span;
            extent = (hi + inflation * span) - origin;
        } else {
            extent = 0.1 * parent_extent;
            origin = lo - extent / 2.0;
        }
        // Rounding must never push a center out of its own frame.
        while (origin + extent < hi) extent = std::nextafter(extent, std::numeric_limits<double>::infinity());
        return std::pair{origin, extent};
    };
    const auto [ox, w] = axis(min_x, max_x, parent.width());
    const auto [oy, h] = axis(min_y, max_y, parent.height());
    return Frame(w, h, ox, oy);
}

namespace {

// A refinement window. The root is the caller's frame; deeper windows are
// the inflated hull of colliding centers. Offsets inside a hull are taken
// from the hull endpoints so that hull-extreme centers sit at exactly +-1
// before inflation, independent of where the hull lies in the image.
struct Window {
    Frame frame;
    bool hull{false};
    Point lo;
    Point hi;
    double inflation{0.0};

    RegionLabel label(Point p, const SpaConfig& cfg) const {
        if (!hull) return assign_region(p, frame, cfg);
        auto axis = [this](double v, double a, double b) {
            if (!(b > a)) return 0.0;
            return ((v - a) - (b - v)) / (b - a) / (1.0 + 2.0 * inflation);
        };
        return label_for(axis(p.x, lo.x, hi.x), axis(p.y, lo.y, hi.y), cfg);
    }
};

Window child_window(std::span<const Point> centers, const Frame& parent, double inflation) {
    Window w{child_frame(centers, parent, inflation), true, centers.front(), centers.front(), inflation};
    for (const auto& c : centers) {
        w.lo = {std::min(w.lo.x, c.x), std::min(w.lo.y, c.y)};
        w.hi = {std::max(w.hi.x, c.x), std::max(w.hi.y, c.y)};
    }
    return w;
}

void refine_into(std::span<const Instance> group, std::span<const std::size_t> members, const Window& win,
                 const SpaConfig& cfg, int depth, const std::vector<RegionLabel>& prefix,
                 std::vector<std::optional<RegionAssignment>>& out) {
    std::map<RegionLabel, std::vector<std::size_t>> cells;
    for (std::size_t m : members) {
        cells[win.label(bbox_center(group[m].bbox), cfg)].push_back(m);
    }
    for (const auto& [label, held] : cells) {
        auto path = prefix;
        path.push_back(label);
        if (held.size() == 1 || depth >= cfg.max_depth) {
            for (std::size_t m : held) {
                out[m] = RegionAssignment{group[m].instance_id, path, win.frame, held.size() > 1};
            }
            continue;
        }
        std::vector<Point> centers;
        centers.reserve(held.size());
        for (std::size_t m : held) centers.push_back(bbox_center(group[m].bbox));
        refine_into(group, held, child_window(centers, win.frame, cfg.inflation), cfg, depth + 1, path, out);
    }
}

}  // namespace

std::vector<RegionAssignment> refine(std::span<const Instance> group, const Frame& f, const SpaConfig& cfg,
                                     int depth) {
    cfg.validate();
    if (depth < 0 || depth > cfg.max_depth) {
        throw std::invalid_argument("refine: depth outside [0, max_depth]");
    }
    std::vector<std::size_t> members(group.size());
    for (std::size_t i = 0; i < members.size(); ++i) members[i] = i;
    std::vector<std::optional<RegionAssignment>> slots(group.size());
    refine_into(group, members, Window{f, false, {}, {}, 0.0}, cfg, depth, {}, slots);

    std::vector<RegionAssignment> out;
    out.reserve(slots.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

std::string render_label(RegionLabel label) {
    if (label.direction == Direction::None) return std::string(to_string(label.ring));
    return std::string(to_string(label.direction)) + "-" + std::string(to_string(label.ring));
}

std::string render_spatial_phrase(const RegionAssignment& a) {
    if (a.path.empty()) throw std::invalid_argument("render_spatial_phrase: empty path");
    if (a.path.size() == 1) return "at the " + render_label(a.path.front()) + " of the image";
    std::string out = "in the";
    for (std::size_t i = a.path.size(); i-- > 1;) {
        out += " " + render_label(a.path[i]) + " part of the";
    }
    out += " " + render_label(a.path.front()) + " of the image";
    return out;
}

namespace {

// Description split so spatial terms land before a trailing period.
struct Rewrite {
    std::string body;
    std::string phrase;
    bool period{false};

    std::string compose(int ordinal = 0) const {
        std::string s = body;
        if (!s.empty()) s += ", ";
        s += phrase;
        if (ordinal > 0) s += " (#" + std::to_string(ordinal) + ")";
        if (period) s += ".";
        return s;
    }
};

Rewrite split_for_rewrite(const std::string& description, std::string phrase) {
    Rewrite r;
    r.phrase = std::move(phrase);
    r.period = !description.empty() && description.back() == '.';
    r.body = r.period ? description.substr(0, description.size() - 1) : description;
    return r;
}

}  // namespace

AugmentResult augment_image(std::span<const Instance> instances, const Frame& image_frame, const SpaConfig& cfg) {
    cfg.validate();
    AugmentResult result;
    result.instances.assign(instances.begin(), instances.end());
    if (instances.empty()) return result;

    const auto groups = group_duplicates(instances);
    result.duplicate_groups = groups.size();

    std::map<std::size_t, Rewrite> rewrites;
    std::map<std::size_t, RegionAssignment> by_index;
    for (const auto& g : groups) {
        std::vector<Instance> members;
        members.reserve(g.members.size());
        for (std::size_t idx : g.members) members.push_back(instances[idx]);
        auto assignments = refine(members, image_frame, cfg, 0);
        for (std::size_t k = 0; k < g.members.size(); ++k) {
            const std::size_t idx = g.members[k];
            rewrites.emplace(idx, split_for_rewrite(instances[idx].description, render_spatial_phrase(assignments[k])));
            by_index.emplace(idx, std::move(assignments[k]));
        }
    }
    for (auto& [idx, a] : by_index) result.assignments.push_back(std::move(a));

    // Texts that must stay as they are.
    std::set<std::pair<std::string, std::string>> taken;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (!rewrites.count(i)) taken.emplace(instances[i].category, instances[i].description);
    }

    std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> by_text;
    for (const auto& [idx, rw] : rewrites) by_text[{instances[idx].category, rw.compose()}].push_back(idx);

    std::vector<std::vector<std::size_t>> colliding;
    for (auto& [key, idxs] : by_text) {
        if (idxs.size() == 1 && !taken.count(key)) {
            taken.insert(key);
            result.instances[idxs.front()].description = key.second;
        } else {
            colliding.push_back(idxs);
        }
    }
    std::sort(colliding.begin(), colliding.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });

    for (auto& idxs : colliding) {
        std::stable_sort(idxs.begin(), idxs.end(), [&](std::size_t a, std::size_t b) {
            const Point pa = bbox_center(instances[a].bbox), pb = bbox_center(instances[b].bbox);
            return std::pair{pa.y, pa.x} < std::pair{pb.y, pb.x};
        });
        int k = 0;
        for (std::size_t idx : idxs) {
            const auto& rw = rewrites.at(idx);
            std::pair<std::string, std::string> key;
            do {
                key = {instances[idx].category, rw.compose(++k)};
            } while (taken.count(key));
            taken.insert(key);
            result.instances[idx].description = key.second;
            ++result.ordinal_suffixes;
        }
    }
    return result;
}

std::vector<Instance> augment_descriptions(std::span<const Instance> instances, const Frame& image_frame,
                                           const SpaConfig& cfg) {
    return augment_image(instances, image_frame, cfg).instances;
}

}  // namespace collab
