// Independent reference implementations and random generators shared by the
// unit tests and the acceptance runner. Nothing here calls into the library
// code it is used to check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "collab/core.hpp"

namespace oracle {

// Region label of grid point (i, j) on an n x n grid of cell centers laid over
// a W x H frame, evaluated in exact integer arithmetic. Coordinates are
// scaled by 2n so that x = W (2i + 1) / 2n becomes the integer W (2i + 1).
// Returns every label whose predicate holds; a partition yields exactly one.
inline std::vector<collab::RegionLabel> grid_labels(long long i, long long j, long long n, long long W, long long H) {
    using collab::Direction;
    using collab::Ring;
    const long long X = W * (2 * i + 1), Y = H * (2 * j + 1);
    const long long CX = W * n, CY = H * n;  // frame center, same scale
    const long long ax = std::llabs(X - CX), ay = std::llabs(Y - CY);
    // |dx| = ax / CX, |dy| = ay / CY. Ring bounds 1/3 and 2/3.
    auto within = [&](long long num, long long den) { return ax * den <= num * CX && ay * den <= num * CY; };
    const bool in_center = within(1, 3);
    const bool in_inner_two = within(2, 3);

    const bool at_center = ax == 0 && ay == 0;
    const long long hx = ax * CY, hy = ay * CX;  // compare |dx| vs |dy| without division

    std::vector<collab::RegionLabel> out;
    for (Ring ring : {Ring::Center, Ring::Transition, Ring::Edge}) {
        const bool ring_ok = ring == Ring::Center       ? in_center
                             : ring == Ring::Transition ? (!in_center && in_inner_two)
                                                        : !in_inner_two;
        if (!ring_ok) continue;
        for (Direction d : {Direction::Top, Direction::Bottom, Direction::Left, Direction::Right, Direction::None}) {
            bool dir_ok = false;
            switch (d) {
                case Direction::None: dir_ok = at_center; break;
                case Direction::Left: dir_ok = !at_center && hx >= hy && X < CX; break;
                case Direction::Right: dir_ok = !at_center && hx >= hy && X > CX; break;
                case Direction::Top: dir_ok = !at_center && hx < hy && Y < CY; break;
                case Direction::Bottom: dir_ok = !at_center && hx < hy && Y > CY; break;
            }
            if (dir_ok) out.push_back({ring, d});
        }
    }
    return out;
}

// Word counts by whitespace splitting, written without the library helper.
inline std::size_t words(const std::string& s) {
    std::size_t n = 0;
    bool in = false;
    for (char c : s) {
        const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
        if (!space && !in) ++n;
        in = !space;
    }
    return n;
}

struct Moments {
    double mean;
    double variance;
};

// Population moments via E[x^2] - E[x]^2 over exact integer sums.
inline Moments moments(const std::vector<long long>& xs) {
    long long s = 0, ss = 0;
    for (long long x : xs) {
        s += x;
        ss += x * x;
    }
    const double n = static_cast<double>(xs.size());
    const double mean = static_cast<double>(s) / n;
    return {mean, static_cast<double>(ss) / n - mean * mean};
}

}  // namespace oracle

namespace gen {

struct RandomImage {
    collab::Frame frame;
    std::vector<collab::Instance> instances;
    std::set<std::size_t> grouped;  // indices that belong to a duplicate group
};

// 2..20 instances, 1..5 duplicate groups, integer-pixel boxes. Some groups
// share identical boxes so that geometry alone cannot separate them, and
// some unique descriptions mimic spatial phrases to provoke text collisions.
inline RandomImage random_image(std::mt19937_64& rng, const std::string& image_id) {
    std::uniform_int_distribution<int> dim(64, 2000);
    const int W = dim(rng), H = dim(rng);
    RandomImage img{collab::Frame(W, H), {}, {}};

    std::uniform_int_distribution<int> n_inst(2, 20);
    const int n = n_inst(rng);
    std::uniform_int_distribution<int> n_groups_d(1, std::min(5, n / 2));
    const int n_groups = n_groups_d(rng);

    // Partition indices: group sizes >= 2, remaining instances unique.
    std::vector<int> sizes(static_cast<std::size_t>(n_groups), 2);
    int spare = n - 2 * n_groups;
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<int> which(0, n_groups - 1);
    while (spare > 0 && coin(rng)) {
        ++sizes[static_cast<std::size_t>(which(rng))];
        --spare;
    }

    static const std::vector<std::string> categories = {"car", "person", "traffic light", "cup"};
    std::uniform_int_distribution<int> cat(0, static_cast<int>(categories.size()) - 1);

    auto box = [&] {
        std::uniform_int_distribution<int> x(0, W - 1), y(0, H - 1);
        int x0 = x(rng), x1 = x(rng), y0 = y(rng), y1 = y(rng);
        if (x0 > x1) std::swap(x0, x1);
        if (y0 > y1) std::swap(y0, y1);
        if (x0 == x1) ++x1;
        if (y0 == y1) ++y1;
        return collab::BBox(x0, y0, x1, y1);
    };

    std::size_t next_id = 0;
    auto add = [&](const std::string& category, const std::string& description, const collab::BBox& b) {
        img.instances.push_back(collab::Instance{image_id + "#" + std::to_string(next_id++), image_id, b, category,
                                                 0.9, collab::Role::Unknown, description});
    };

    std::uniform_int_distribution<int> pct(0, 99);
    for (int g = 0; g < n_groups; ++g) {
        const std::string category = categories[static_cast<std::size_t>(cat(rng))];
        const std::string description = "shared description " + std::to_string(g) + (coin(rng) ? "." : "");
        const collab::BBox first = box();
        for (int k = 0; k < sizes[static_cast<std::size_t>(g)]; ++k) {
            img.grouped.insert(img.instances.size());
            add(category, description, pct(rng) < 25 ? first : box());
        }
    }
    static const std::vector<std::string> decoys = {", at the left-edge of the image",
                                                    ", at the right-edge of the image",
                                                    ", in the left-edge part of the center of the image",
                                                    ", at the left-edge of the image (#1)"};
    for (int u = 0; u < spare; ++u) {
        const std::string category = categories[static_cast<std::size_t>(cat(rng))];
        std::string description;
        if (pct(rng) < 30) {
            description = "shared description " + std::to_string(which(rng)) +
                          decoys[static_cast<std::size_t>(pct(rng)) % decoys.size()];
        } else {
            description = "unique description " + std::to_string(u);
        }
        add(category, description, box());
    }
    // A decoy may accidentally duplicate another unique one; such pairs form a group too.
    std::shuffle(img.instances.begin(), img.instances.end(), rng);
    img.grouped.clear();
    for (std::size_t a = 0; a < img.instances.size(); ++a) {
        for (std::size_t b = 0; b < img.instances.size(); ++b) {
            if (a != b && img.instances[a].category == img.instances[b].category &&
                img.instances[a].description == img.instances[b].description) {
                img.grouped.insert(a);
            }
        }
    }
    return img;
}

}  // namespace gen
