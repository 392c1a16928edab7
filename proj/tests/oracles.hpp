// Reference implementations the tests compare against. Everything here is
// written the straightforward way (direct formulas, quadrature, exhaustive
// enumeration) and stays independent of the library's numerics.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "mixnet/gaussian_mixture.hpp"
#include "mixnet/rng.hpp"

namespace oracle {

// Direct density formula: (2pi)^{-d/2} |S|^{-1/2} exp(-0.5 q), no log-sum-exp.
inline double gaussian_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                           const Eigen::MatrixXd& cov) {
    const auto d = static_cast<double>(x.size());
    const Eigen::VectorXd diff = x - mu;
    const double q = diff.dot(cov.inverse() * diff);
    return std::pow(2.0 * M_PI, -d / 2.0) * std::pow(cov.determinant(), -0.5) *
           std::exp(-0.5 * q);
}

inline double mixture_pdf(const mixnet::GaussianMixture& gm, const Eigen::VectorXd& x) {
    double total = 0.0;
    for (const auto& c : gm.components()) total += c.weight * gaussian_pdf(x, c.mean, c.covariance);
    return total;
}

// Composite Simpson on [a, b]; n must be even.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    if (n % 2) throw std::invalid_argument("simpson: n must be even");
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

inline double simpson2d(const std::function<double(double, double)>& f, double a, double b,
                        double c, double d, int n) {
    return simpson([&](double x) { return simpson([&](double y) { return f(x, y); }, c, d, n); },
                   a, b, n);
}

inline double trapezoid(const std::function<double(double)>& f, double a, double b, int points) {
    const double h = (b - a) / (points - 1);
    double s = 0.5 * (f(a) + f(b));
    for (int i = 1; i < points - 1; ++i) s += f(a + i * h);
    return s * h;
}

inline double trapezoid2d(const std::function<double(double, double)>& f, double a, double b,
                          double c, double d, int points) {
    return trapezoid(
        [&](double x) { return trapezoid([&](double y) { return f(x, y); }, c, d, points); }, a, b,
        points);
}

// Random symmetric positive-definite matrix with eigenvalues in [lo, hi].
inline Eigen::MatrixXd random_spd(int d, mixnet::Rng& rng, double lo, double hi) {
    Eigen::MatrixXd a(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) a(i, j) = rng.normal();
    }
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    const Eigen::MatrixXd q = qr.householderQ();
    Eigen::VectorXd evals(d);
    for (int i = 0; i < d; ++i) evals(i) = rng.uniform(lo, hi);
    return q * evals.asDiagonal() * q.transpose();
}

// Maximum-weight forest by exhaustive search over all acyclic subsets of the
// positive edges. Returns sorted (a, b) pairs with a < b. Weights must make
// the optimum unique for a meaningful comparison.
inline std::vector<std::pair<int, int>> brute_force_forest(const Eigen::MatrixXd& w) {
    const int n = static_cast<int>(w.rows());
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (w(i, j) > 0) edges.emplace_back(i, j);
        }
    }
    const int m = static_cast<int>(edges.size());
    if (m > 20) throw std::invalid_argument("brute_force_forest: too many edges");
    double best = -1.0;
    std::uint32_t best_mask = 0;
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
        std::vector<int> root(n);
        std::iota(root.begin(), root.end(), 0);
        std::function<int(int)> find = [&](int x) {
            while (root[x] != x) x = root[x] = root[root[x]];
            return x;
        };
        double total = 0.0;
        bool acyclic = true;
        for (int e = 0; e < m && acyclic; ++e) {
            if (!(mask & (1u << e))) continue;
            const int ra = find(edges[e].first);
            const int rb = find(edges[e].second);
            if (ra == rb) {
                acyclic = false;
            } else {
                root[ra] = rb;
                total += w(edges[e].first, edges[e].second);
            }
        }
        if (acyclic && total > best) {
            best = total;
            best_mask = mask;
        }
    }
    std::vector<std::pair<int, int>> out;
    for (int e = 0; e < m; ++e) {
        if (best_mask & (1u << e)) out.push_back(edges[e]);
    }
    return out;
}

}  // namespace oracle
