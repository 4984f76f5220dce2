#pragma once

// Head / upper-body / lower-body boxes derived from four body keypoints
// (upper-head, neck, left-hip, right-hip). Image coordinates: x grows right,
// y grows down, pixels indexed 0..W-1 and 0..H-1. Midpoints keep sub-pixel
// precision; consumers round only at pixel extraction.

#include <algorithm>

#include "reidx/error.hpp"

namespace reidx {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

// Axis-aligned box given by its upper-left and bottom-right corners (inclusive).
struct Box {
    Point upper_left;
    Point bottom_right;

    double width() const noexcept { return bottom_right.x - upper_left.x; }
    double height() const noexcept { return bottom_right.y - upper_left.y; }
};

struct KeypointSet {
    Point upper_head;  // (x1, y1)
    Point neck;        // (x2, y2)
    Point left_hip;    // (x3, y3)
    Point right_hip;   // (x4, y4)
    int image_height = 0;
    int image_width = 0;
};

struct BodyBoxes {
    Box upper_body;
    Box lower_body;
};

struct PartBoxes {
    Box head;
    Box upper_body;
    Box lower_body;
    double alpha = 0.0;
};

namespace detail {

inline void check_frame(int image_height, int image_width) {
    if (image_height <= 0 || image_width <= 0) {
        throw InvalidArgument("image dimensions must be positive");
    }
}

inline void check_alpha(double alpha) {
    if (!(alpha >= 0.0)) {
        throw InvalidArgument("alpha must be non-negative");
    }
}

}  // namespace detail

// The overlap parameter is 15 for 512-pixel-tall inputs and scales
// proportionally with image height.
inline double default_alpha(int image_height) {
    detail::check_frame(image_height, 1);
    return 15.0 * static_cast<double>(image_height) / 512.0;
}

// Clamps keypoint coordinates into the frame. Applied at ingest so that
// downstream geometry sees 0 <= x < W, 0 <= y < H.
inline KeypointSet clamp_keypoints(KeypointSet k) {
    detail::check_frame(k.image_height, k.image_width);
    const double max_x = static_cast<double>(k.image_width - 1);
    const double max_y = static_cast<double>(k.image_height - 1);
    for (Point* p : {&k.upper_head, &k.neck, &k.left_hip, &k.right_hip}) {
        p->x = std::clamp(p->x, 0.0, max_x);
        p->y = std::clamp(p->y, 0.0, max_y);
    }
    return k;
}

// Intersects a box with the frame [0, W-1] x [0, H-1]. Throws EmptyBox when
// nothing remains.
inline Box clamp_box(const Box& b, int image_height, int image_width) {
    detail::check_frame(image_height, image_width);
    Box out;
    out.upper_left.x = std::max(b.upper_left.x, 0.0);
    out.upper_left.y = std::max(b.upper_left.y, 0.0);
    out.bottom_right.x = std::min(b.bottom_right.x, static_cast<double>(image_width - 1));
    out.bottom_right.y = std::min(b.bottom_right.y, static_cast<double>(image_height - 1));
    if (out.upper_left.x > out.bottom_right.x || out.upper_left.y > out.bottom_right.y) {
        throw EmptyBox("box lies outside the image frame");
    }
    return out;
}

// Head box before clamping: centred horizontally on the head-neck midpoint,
// square-ish with side y2-y1+2*alpha, extended by alpha above and below.
inline Box head_box_unclamped(const KeypointSet& k, double alpha) {
    detail::check_alpha(alpha);
    const double y1 = k.upper_head.y;
    const double y2 = k.neck.y;
    if (!(y2 > y1)) {
        throw InvalidKeypoints("neck must lie below the upper-head point");
    }
    const double xc = (k.upper_head.x + k.neck.x) / 2.0;
    const double w = y2 - y1 + 2.0 * alpha;
    return Box{{xc - w / 2.0, y1 - alpha}, {xc + w / 2.0, y2 + alpha}};
}

inline Box head_box(const KeypointSet& k, double alpha) {
    return clamp_box(head_box_unclamped(k, alpha), k.image_height, k.image_width);
}

// Upper and lower body boxes before clamping. Both span the full image width;
// they overlap by 4*alpha rows around the hip line y_c = (y3+y4)/2. The
// lower-body bottom is pinned to the image bottom because foot keypoints are
// unreliable.
inline BodyBoxes body_boxes_unclamped(const KeypointSet& k, double alpha) {
    detail::check_alpha(alpha);
    detail::check_frame(k.image_height, k.image_width);
    const double y2 = k.neck.y;
    const double yc = (k.left_hip.y + k.right_hip.y) / 2.0;
    if (!(yc > y2)) {
        throw InvalidKeypoints("hip line must lie below the neck");
    }
    if (!(yc < static_cast<double>(k.image_height))) {
        throw InvalidKeypoints("hip line must lie above the image bottom");
    }
    const double max_x = static_cast<double>(k.image_width - 1);
    const double max_y = static_cast<double>(k.image_height - 1);
    BodyBoxes out;
    out.upper_body = Box{{0.0, y2 - 2.0 * alpha}, {max_x, yc + 2.0 * alpha}};
    out.lower_body = Box{{0.0, yc - 2.0 * alpha}, {max_x, max_y}};
    return out;
}

inline BodyBoxes body_boxes(const KeypointSet& k, double alpha) {
    BodyBoxes raw = body_boxes_unclamped(k, alpha);
    raw.upper_body = clamp_box(raw.upper_body, k.image_height, k.image_width);
    raw.lower_body = clamp_box(raw.lower_body, k.image_height, k.image_width);
    return raw;
}

// All three part regions, clamped to the frame.
inline PartBoxes part_boxes(const KeypointSet& k, double alpha) {
    PartBoxes out;
    out.head = head_box(k, alpha);
    const BodyBoxes body = body_boxes(k, alpha);
    out.upper_body = body.upper_body;
    out.lower_body = body.lower_body;
    out.alpha = alpha;
    return out;
}

}  // namespace reidx
