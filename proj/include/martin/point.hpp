#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace martin {

/// A point of R^d in state-space units.
class Point {
public:
    Point() = default;
    explicit Point(std::size_t dim) : coords_(dim, 0.0) {}
    Point(std::initializer_list<double> c) : coords_(c) {}
    explicit Point(std::vector<double> c) : coords_(std::move(c)) {}

    std::size_t dim() const noexcept { return coords_.size(); }
    double& operator[](std::size_t i) { return coords_[i]; }
    double operator[](std::size_t i) const { return coords_[i]; }
    std::span<const double> coords() const noexcept { return coords_; }
    const std::vector<double>& vec() const noexcept { return coords_; }

    auto begin() const noexcept { return coords_.begin(); }
    auto end() const noexcept { return coords_.end(); }

    bool finite() const noexcept {
        for (double v : coords_)
            if (!std::isfinite(v)) return false;
        return true;
    }

private:
    std::vector<double> coords_;
};

inline void require_same_dim(std::size_t a, std::size_t b, const char* where) {
    if (a != b)
        throw std::domain_error(std::string(where) + ": dimension mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    require_same_dim(a.size(), b.size(), "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double distance(const Point& x, const Point& y) {
    require_same_dim(x.dim(), y.dim(), "distance");
    double s = 0.0;
    for (std::size_t i = 0; i < x.dim(); ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace martin
