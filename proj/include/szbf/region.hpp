// Copyright (c) szbf contributors.
// SPDX-License-Identifier: MIT
#pragma once

#include <optional>
#include <vector>

#include "szbf/expr.hpp"

namespace szbf {

using Point = std::vector<double>;

/// A bounded verification domain: an axis-aligned box, optionally
/// intersected with a superlevel set {x : g(x) >= 0}. The box doubles as
/// the sampling window for grid and rejection sampling.
class Region {
public:
    static Region box(Point lo, Point hi);
    static Region superlevel(Expr g, Point lo, Point hi);

    int dim() const noexcept { return static_cast<int>(lo_.size()); }
    bool contains(const Point& x) const;

    const Point& lo() const noexcept { return lo_; }
    const Point& hi() const noexcept { return hi_; }
    Point center() const;

    const std::optional<Expr>& membership() const noexcept { return g_; }

private:
    Region(Point lo, Point hi, std::optional<Expr> g);
    Point lo_, hi_;
    std::optional<Expr> g_;
};

}  // namespace szbf
