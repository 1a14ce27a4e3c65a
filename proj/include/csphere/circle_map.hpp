#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

namespace csphere {

/// Orientation-preserving diffeomorphism of S¹ given by a trigonometric
/// perturbation of the identity lift:
///   lift(θ) = θ + Σ_k (ε_k sin kθ + η_k cos kθ),  lift(θ+2π) = lift(θ)+2π.
/// With α = dθ the scaling factor is g = ln lift'. Positivity of the
/// derivative is validated on a dense sample at construction.
class CircleMap {
  public:
    CircleMap(std::vector<double> sin_coeffs, std::vector<double> cos_coeffs)
        : sin_coeffs_(std::move(sin_coeffs)), cos_coeffs_(std::move(cos_coeffs)) {
        constexpr int kProbe = 10000;
        for (int i = 0; i < kProbe; ++i) {
            const double theta = 2.0 * std::numbers::pi * i / kProbe;
            if (!(derivative(theta) > 0.0)) {
                throw std::invalid_argument(
                    "CircleMap: lift derivative is not positive everywhere");
            }
        }
    }

    double lift(double theta) const {
        double value = theta;
        for (std::size_t k = 0; k < sin_coeffs_.size(); ++k) {
            value += sin_coeffs_[k] * std::sin((k + 1) * theta);
        }
        for (std::size_t k = 0; k < cos_coeffs_.size(); ++k) {
            value += cos_coeffs_[k] * std::cos((k + 1) * theta);
        }
        return value;
    }

    double derivative(double theta) const {
        double value = 1.0;
        for (std::size_t k = 0; k < sin_coeffs_.size(); ++k) {
            value += sin_coeffs_[k] * (k + 1) * std::cos((k + 1) * theta);
        }
        for (std::size_t k = 0; k < cos_coeffs_.size(); ++k) {
            value -= cos_coeffs_[k] * (k + 1) * std::sin((k + 1) * theta);
        }
        return value;
    }

    double scaling(double theta) const { return std::log(derivative(theta)); }

    static CircleMap rotation() { return CircleMap({}, {}); }

  private:
    std::vector<double> sin_coeffs_;
    std::vector<double> cos_coeffs_;
};

/// Zeros of the scaling factor of a circle diffeomorphism. Rotations have
/// g ≡ 0; that degenerate case is flagged (every point is then translated,
/// since the Reeb flow of dθ reaches every point).
struct CircleZeroReport {
    int count = 0;
    std::vector<double> zeros;
    bool rotation = false;
};

/// Counts and bisects the zeros of g(θ) = ln lift'(θ) on a circular grid.
/// Every non-rotation map has at least two: ∫ lift' dθ = 2π forces lift' − 1
/// to change sign.
inline CircleZeroReport circle_zero_count(const CircleMap& map, int resolution,
                                          double tol = 1e-12) {
    if (resolution < 16) throw std::invalid_argument("circle_zero_count: resolution must be >= 16");

    const double two_pi = 2.0 * std::numbers::pi;
    std::vector<double> theta(resolution), g(resolution);
    double max_abs = 0.0;
    for (int i = 0; i < resolution; ++i) {
        theta[i] = two_pi * i / resolution;
        g[i] = map.scaling(theta[i]);
        max_abs = std::max(max_abs, std::abs(g[i]));
    }

    CircleZeroReport report;
    if (max_abs <= 1e-13) {
        report.rotation = true;
        return report;
    }

    for (int i = 0; i < resolution; ++i) {
        // a grid point can land exactly on a zero; record it directly, the
        // adjacent arcs then carry no sign change
        if (g[i] == 0.0) {
            report.zeros.push_back(theta[i]);
            continue;
        }
        const int j = (i + 1) % resolution;
        if (!(g[j] == 0.0) && g[i] * g[j] < 0.0) {
            double lo = theta[i];
            double hi = theta[i] + two_pi / resolution;
            double f_lo = g[i];
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (mid == lo || mid == hi) break;
                const double f_mid = map.scaling(mid);
                if (std::abs(f_mid) <= tol) {
                    lo = hi = mid;
                    break;
                }
                if ((f_mid > 0.0) == (f_lo > 0.0)) {
                    lo = mid;
                    f_lo = f_mid;
                } else {
                    hi = mid;
                }
            }
            double zero = 0.5 * (lo + hi);
            if (zero >= two_pi) zero -= two_pi;
            report.zeros.push_back(zero);
        }
    }
    report.count = static_cast<int>(report.zeros.size());
    return report;
}

/// Random trigonometric-polynomial circle diffeomorphism. Coefficients are
/// rescaled so Σ k(|ε_k| + |η_k|) < 1, which bounds the lift derivative away
/// from zero, so construction never rejects.
inline CircleMap random_circle_map(std::mt19937_64& rng, int max_harmonics = 3) {
    std::uniform_int_distribution<int> pick(1, max_harmonics);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.1, 0.85);
    const int harmonics = pick(rng);
    std::vector<double> sin_coeffs(harmonics), cos_coeffs(harmonics);
    double weight = 0.0;
    for (int k = 0; k < harmonics; ++k) {
        sin_coeffs[k] = gauss(rng);
        cos_coeffs[k] = gauss(rng);
        weight += (k + 1) * (std::abs(sin_coeffs[k]) + std::abs(cos_coeffs[k]));
    }
    const double scale = unit(rng) / std::max(weight, 1e-12);
    for (int k = 0; k < harmonics; ++k) {
        sin_coeffs[k] *= scale;
        cos_coeffs[k] *= scale;
    }
    return CircleMap(std::move(sin_coeffs), std::move(cos_coeffs));
}

}  // namespace csphere
