#pragma once

// Quadrature grids on the unit circle and the unit sphere.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "martin/quadrature.hpp"

namespace martin {

class SphereGrid {
public:
    /// N equispaced angles theta_i = 2 pi i / N, weights 2 pi / N.
    static SphereGrid circle(int n) {
        if (n < 4) throw std::domain_error("SphereGrid::circle: need at least 4 nodes");
        SphereGrid g;
        g.d_ = 2;
        g.n_lon_ = n;
        g.n_lat_ = 1;
        const double w = 2.0 * std::numbers::pi / n;
        for (int i = 0; i < n; ++i) {
            const double t = 2.0 * std::numbers::pi * i / n;
            g.nodes_.push_back({std::cos(t), std::sin(t)});
            g.weights_.push_back(w);
            g.lat_.push_back(0);
            g.lon_.push_back(i);
        }
        return g;
    }

    /// Product grid: Gauss-Legendre in mu = cos(polar angle) times the
    /// trapezoid rule in longitude, phi_j = 2 pi j / n_lon.
    static SphereGrid sphere(int n_lat, int n_lon) {
        if (n_lat < 2 || n_lon < 4) throw std::domain_error("SphereGrid::sphere: grid too small");
        SphereGrid g;
        g.d_ = 3;
        g.n_lat_ = n_lat;
        g.n_lon_ = n_lon;
        const auto gl = quad::gauss_legendre(n_lat);
        for (int i = 0; i < n_lat; ++i) {
            const double mu = gl.nodes[i];
            const double s = std::sqrt(1.0 - mu * mu);
            for (int j = 0; j < n_lon; ++j) {
                const double phi = 2.0 * std::numbers::pi * j / n_lon;
                g.nodes_.push_back({s * std::cos(phi), s * std::sin(phi), mu});
                g.weights_.push_back(gl.weights[i] * 2.0 * std::numbers::pi / n_lon);
                g.lat_.push_back(i);
                g.lon_.push_back(j);
            }
        }
        return g;
    }

    int dim() const noexcept { return d_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    int n_lat() const noexcept { return n_lat_; }
    int n_lon() const noexcept { return n_lon_; }
    const std::vector<double>& node(std::size_t i) const { return nodes_[i]; }
    double weight(std::size_t i) const { return weights_[i]; }
    int lat_index(std::size_t i) const { return lat_[i]; }
    int lon_index(std::size_t i) const { return lon_[i]; }
    const std::vector<std::vector<double>>& nodes() const noexcept { return nodes_; }
    const std::vector<double>& weights() const noexcept { return weights_; }

    /// Angle of node i on the circle (d = 2 only).
    double theta(std::size_t i) const { return 2.0 * std::numbers::pi * lon_[i] / n_lon_; }

    double total_weight() const {
        double s = 0.0;
        for (double w : weights_) s += w;
        return s;
    }

    /// Index of the node obtained by flipping the sign of coordinate k.
    /// Both grid families are closed under these reflections.
    std::size_t mirror_index(std::size_t i, int k) const {
        if (k < 0 || k >= d_) throw std::domain_error("mirror_index: bad axis");
        if (d_ == 2) {
            const int j = lon_[i];
            // theta -> -theta (k = 1) or pi - theta (k = 0)
            const int m = (k == 1) ? (n_lon_ - j) % n_lon_ : ((n_lon_ / 2 - j) % n_lon_ + n_lon_) % n_lon_;
            if (k == 0 && n_lon_ % 2 != 0) throw std::domain_error("mirror_index: odd N has no x-reflection");
            return static_cast<std::size_t>(m);
        }
        int a = lat_[i];
        int b = lon_[i];
        if (k == 2) {
            a = n_lat_ - 1 - a;
        } else {
            if (n_lon_ % 2 != 0) throw std::domain_error("mirror_index: odd n_lon has no reflection");
            b = (k == 1) ? (n_lon_ - b) % n_lon_ : ((n_lon_ / 2 - b) % n_lon_ + n_lon_) % n_lon_;
        }
        return static_cast<std::size_t>(a * n_lon_ + b);
    }

private:
    int d_ = 2;
    int n_lat_ = 1;
    int n_lon_ = 0;
    std::vector<std::vector<double>> nodes_;
    std::vector<double> weights_;
    std::vector<int> lat_, lon_;
};

}  // namespace martin
