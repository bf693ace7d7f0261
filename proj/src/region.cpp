// Copyright (c) szbf contributors.
// SPDX-License-Identifier: MIT

#include "szbf/region.hpp"

#include <stdexcept>
#include <string>

namespace szbf {

Region::Region(Point lo, Point hi, std::optional<Expr> g)
    : lo_(std::move(lo)), hi_(std::move(hi)), g_(std::move(g)) {
    if (lo_.empty() || lo_.size() != hi_.size())
        throw std::invalid_argument("region: box corners must be non-empty and of equal dimension");
    for (std::size_t i = 0; i < lo_.size(); ++i)
        if (!(lo_[i] <= hi_[i]))
            throw std::invalid_argument("region: box_min[" + std::to_string(i + 1) +
                                        "] exceeds box_max[" + std::to_string(i + 1) + "]");
    if (g_ && g_->max_variable() > dim())
        throw std::invalid_argument("region: membership expression uses x" +
                                    std::to_string(g_->max_variable()) + " but the box has dimension " +
                                    std::to_string(dim()));
}

Region Region::box(Point lo, Point hi) { return Region(std::move(lo), std::move(hi), std::nullopt); }

Region Region::superlevel(Expr g, Point lo, Point hi) {
    return Region(std::move(lo), std::move(hi), std::move(g));
}

bool Region::contains(const Point& x) const {
    if (static_cast<int>(x.size()) != dim()) return false;
    for (std::size_t i = 0; i < lo_.size(); ++i)
        if (x[i] < lo_[i] || x[i] > hi_[i]) return false;
    if (g_) return g_->eval(x) >= 0.0;
    return true;
}

Point Region::center() const {
    Point c(lo_.size());
    for (std::size_t i = 0; i < lo_.size(); ++i) c[i] = 0.5 * (lo_[i] + hi_[i]);
    return c;
}

}  // namespace szbf
