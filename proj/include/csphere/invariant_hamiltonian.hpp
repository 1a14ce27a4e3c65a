#pragma once

#include <map>
#include <stdexcept>
#include <vector>

#include "csphere/contact_map.hpp"
#include "csphere/translated_points.hpp"

namespace csphere {

/// Quadratic Hamiltonian H(z) = Σ aᵢ |zᵢ|² on the sphere. H is constant on
/// Reeb orbits by construction, and its contact flow is the explicit
/// diagonal unitary zᵢ ↦ e^{i aᵢ t} zᵢ, so every flow map preserves α
/// exactly (g ≡ 0).
class InvariantHamiltonian {
  public:
    explicit InvariantHamiltonian(std::vector<double> weights) : weights_(std::move(weights)) {
        if (weights_.empty()) {
            throw std::invalid_argument("InvariantHamiltonian: empty weight vector");
        }
    }

    int dim() const { return static_cast<int>(weights_.size()); }
    const std::vector<double>& weights() const { return weights_; }

    double value(const SpherePoint& z) const {
        if (z.dim() != dim()) throw std::invalid_argument("InvariantHamiltonian: dim mismatch");
        double h = 0.0;
        for (int i = 0; i < dim(); ++i) h += weights_[i] * std::norm(z[i]);
        return h;
    }

    /// Coordinate groups sharing one weight value; the critical set of H on
    /// the sphere is the union of the unit spheres of their spans.
    std::vector<std::vector<int>> critical_strata() const {
        std::map<double, std::vector<int>> groups;
        for (int i = 0; i < dim(); ++i) groups[weights_[i]].push_back(i);
        std::vector<std::vector<int>> strata;
        strata.reserve(groups.size());
        for (auto& [w, idx] : groups) strata.push_back(idx);
        return strata;
    }

  private:
    std::vector<double> weights_;
};

/// Time-t contact flow of an invariant Hamiltonian: the diagonal unitary
/// zᵢ ↦ e^{i aᵢ t} zᵢ.
inline ContactMap invariant_flow(const InvariantHamiltonian& h, double t) {
    const int n = h.dim();
    CMatrix u = CMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        u(i, i) = std::polar(1.0, h.weights()[i] * t);
    }
    return ContactMap::unitary(std::move(u));
}

struct CriticalPointReport {
    bool all_translated;
    double max_defect;
    int strata;
    int samples_per_stratum;
};

/// Checks that sampled critical points of H are translated points of the
/// flow at every listed time: points supported on a single weight stratum
/// rotate by a common phase, staying on their own Reeb orbit with g = 0.
inline CriticalPointReport critical_points_are_translated(const InvariantHamiltonian& h,
                                                          const std::vector<double>& t_list,
                                                          double tol, int samples_per_stratum = 16,
                                                          std::uint64_t seed = 1) {
    const auto strata = h.critical_strata();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    double worst = 0.0;
    for (const auto& stratum : strata) {
        for (int s = 0; s < samples_per_stratum; ++s) {
            CVector u = CVector::Zero(h.dim());
            for (int idx : stratum) u(idx) = Complex(gauss(rng), gauss(rng));
            if (u.norm() <= 1e-12) {
                --s;
                continue;
            }
            const SpherePoint z(std::move(u));
            for (double t : t_list) {
                worst = std::max(worst, defect(invariant_flow(h, t), z).total);
            }
        }
    }
    return CriticalPointReport{worst <= tol, worst, static_cast<int>(strata.size()),
                               samples_per_stratum};
}

}  // namespace csphere
