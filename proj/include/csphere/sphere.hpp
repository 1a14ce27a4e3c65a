#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

namespace csphere {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

/// Hermitian inner product ⟨u, v⟩ = Σ uᵢ conj(vᵢ).
inline Complex hermitian_inner(const CVector& u, const CVector& v) {
    return v.dot(u);  // Eigen's dot conjugates its left argument
}

/// Point of the unit sphere S^{2n-1} ⊂ ℂⁿ. Coordinates are renormalized on
/// construction so long iteration chains cannot drift off the sphere.
class SpherePoint {
  public:
    explicit SpherePoint(CVector coords)
        : coords_(std::move(coords)) {
        if (coords_.size() < 1) {
            throw std::invalid_argument("SpherePoint: empty coordinate vector");
        }
        const double norm = coords_.norm();
        if (!(norm > 1e-12)) {
            throw std::invalid_argument("SpherePoint: vector too close to zero to normalize");
        }
        coords_ /= norm;
    }

    int dim() const { return static_cast<int>(coords_.size()); }
    const CVector& coords() const { return coords_; }
    Complex operator[](int i) const { return coords_(i); }

  private:
    CVector coords_;
};

inline std::ostream& operator<<(std::ostream& os, const SpherePoint& z) {
    os << "(";
    for (int i = 0; i < z.dim(); ++i) {
        if (i) os << ", ";
        os << z[i].real() << (z[i].imag() < 0 ? "-" : "+") << std::abs(z[i].imag()) << "i";
    }
    return os << ")";
}

/// Tangent vector to the sphere: Re⟨vec, base⟩ = 0 within 1e-10.
class TangentVector {
  public:
    TangentVector(SpherePoint base, CVector vec)
        : base_(std::move(base)), vec_(std::move(vec)) {
        if (vec_.size() != base_.coords().size()) {
            throw std::invalid_argument("TangentVector: dimension mismatch with base point");
        }
        const double radial = std::abs(hermitian_inner(vec_, base_.coords()).real());
        if (radial > 1e-10 * (1.0 + vec_.norm())) {
            throw std::invalid_argument("TangentVector: vector is not tangent to the sphere");
        }
    }

    const SpherePoint& base() const { return base_; }
    const CVector& vec() const { return vec_; }

  private:
    SpherePoint base_;
    CVector vec_;
};

/// Standard contact form α = Σ (xᵢ dyᵢ − yᵢ dxᵢ) evaluated on a tangent
/// vector. In complex notation α_z(v) = Im⟨v, z⟩; the equivalence with the
/// real-coordinate formula is exercised by the test suite.
inline double contact_form_raw(const SpherePoint& z, const CVector& v) {
    return hermitian_inner(v, z.coords()).imag();
}

inline double contact_form(const SpherePoint& z, const TangentVector& v) {
    if ((v.base().coords() - z.coords()).norm() > 1e-12) {
        throw std::invalid_argument("contact_form: tangent vector based at a different point");
    }
    return contact_form_raw(z, v.vec());
}

/// Reeb field of α on the sphere: R_z = iz, normalized so α(R) = 1. Its
/// orbits z(t) = e^{it} z(0) are the fibers of the Hopf fibration.
inline TangentVector reeb_vector(const SpherePoint& z) {
    return TangentVector(z, Complex(0.0, 1.0) * z.coords());
}

/// Fubini-Study distance between the Hopf fibers through z and w:
/// arccos|⟨z, w⟩| ∈ [0, π/2]. Zero iff w = e^{it} z for some t.
inline double fiber_distance(const SpherePoint& z, const SpherePoint& w) {
    if (z.dim() != w.dim()) {
        throw std::invalid_argument("fiber_distance: dimension mismatch");
    }
    const double c = std::abs(hermitian_inner(z.coords(), w.coords()));
    return std::acos(std::min(c, 1.0));
}

/// Chordal distance ‖z − w‖₂ in ℝ^{2n}, in [0, 2].
inline double ambient_distance(const SpherePoint& z, const SpherePoint& w) {
    if (z.dim() != w.dim()) {
        throw std::invalid_argument("ambient_distance: dimension mismatch");
    }
    return (z.coords() - w.coords()).norm();
}

// --- real/complex interleaving ------------------------------------------
//
// ℂⁿ ≅ ℝ^{2n} with layout (Re z₀, Im z₀, Re z₁, Im z₁, ...). All real
// Jacobians in the library use this layout.

inline RVector realify(const CVector& u) {
    RVector r(2 * u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        r(2 * i) = u(i).real();
        r(2 * i + 1) = u(i).imag();
    }
    return r;
}

inline CVector unrealify(const RVector& r) {
    CVector u(r.size() / 2);
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        u(i) = Complex(r(2 * i), r(2 * i + 1));
    }
    return u;
}

/// Real 2n×2n matrix of the ℂ-linear map v ↦ A v.
inline RMatrix realify_linear(const CMatrix& a) {
    RMatrix r(2 * a.rows(), 2 * a.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            r(2 * i, 2 * j) = a(i, j).real();
            r(2 * i, 2 * j + 1) = -a(i, j).imag();
            r(2 * i + 1, 2 * j) = a(i, j).imag();
            r(2 * i + 1, 2 * j + 1) = a(i, j).real();
        }
    }
    return r;
}

/// Orthonormal basis of T_z S^{2n-1} (2n−1 vectors, real inner product).
/// Deterministic: columns 1..2n-1 of the Householder Q factor of the radial
/// direction.
inline std::vector<TangentVector> tangent_basis(const SpherePoint& z) {
    const int m = 2 * z.dim();
    RMatrix radial(m, 1);
    radial.col(0) = realify(z.coords());
    Eigen::HouseholderQR<RMatrix> qr(radial);
    RMatrix q = qr.householderQ();
    std::vector<TangentVector> basis;
    basis.reserve(m - 1);
    for (int j = 1; j < m; ++j) {
        basis.emplace_back(z, unrealify(q.col(j)));
    }
    return basis;
}

/// Great-circle interpolation between two sphere points (real geodesic in
/// ℝ^{2n}); t = 0 gives z, t = 1 gives w.
inline SpherePoint slerp(const SpherePoint& z, const SpherePoint& w, double t) {
    const RVector a = realify(z.coords());
    const RVector b = realify(w.coords());
    const double c = std::clamp(a.dot(b), -1.0, 1.0);
    const double omega = std::acos(c);
    if (omega < 1e-8) {
        return SpherePoint(unrealify(((1.0 - t) * a + t * b).eval()));
    }
    const double s = std::sin(omega);
    return SpherePoint(unrealify(
        ((std::sin((1.0 - t) * omega) / s) * a + (std::sin(t * omega) / s) * b).eval()));
}

/// Walk distance t (radians) from z along the unit tangent direction d.
inline SpherePoint geodesic_step(const SpherePoint& z, const CVector& d, double t) {
    return SpherePoint(std::cos(t) * z.coords() + std::sin(t) * d);
}

/// Deterministic, approximately uniform sample of S^{2n-1} by Gaussian
/// normalization. Identical output for identical (n, count, seed).
inline std::vector<SpherePoint> sample_sphere(int n, int count, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample_sphere: n must be >= 1");
    if (count < 0) throw std::invalid_argument("sample_sphere: negative count");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<SpherePoint> points;
    points.reserve(count);
    while (static_cast<int>(points.size()) < count) {
        CVector u(n);
        for (int i = 0; i < n; ++i) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            u(i) = Complex(re, im);
        }
        if (u.norm() <= 1e-12) continue;  // astronomically rare; resample
        points.emplace_back(std::move(u));
    }
    return points;
}

/// Deterministic sample of the chordal ball B(center, radius) ∩ S^{2n-1}.
/// Radius 0 degenerates to `count` copies of the center.
inline std::vector<SpherePoint> sample_cap(const SpherePoint& center, double radius, int count,
                                           std::uint64_t seed);

/// Random unit tangent vector at z (real-uniform on the tangent sphere).
inline CVector random_tangent_direction(const SpherePoint& z, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    const RVector radial = realify(z.coords());
    for (;;) {
        RVector v(2 * z.dim());
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = gauss(rng);
        v -= v.dot(radial) * radial;
        const double norm = v.norm();
        if (norm > 1e-8) return unrealify((v / norm).eval());
    }
}

inline std::vector<SpherePoint> sample_cap(const SpherePoint& center, double radius, int count,
                                           std::uint64_t seed) {
    if (radius < 0.0 || radius > 2.0) {
        throw std::invalid_argument("sample_cap: chordal radius must be in [0, 2]");
    }
    if (count < 0) throw std::invalid_argument("sample_cap: negative count");
    std::vector<SpherePoint> points;
    points.reserve(count);
    if (radius == 0.0) {
        points.assign(count, center);
        return points;
    }
    const double theta_max = 2.0 * std::asin(std::min(1.0, radius / 2.0));
    const double exponent = 1.0 / (2.0 * center.dim() - 1.0);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < count; ++i) {
        const CVector dir = random_tangent_direction(center, rng);
        const double t = theta_max * std::pow(unit(rng), exponent);
        points.push_back(geodesic_step(center, dir, t));
    }
    return points;
}

}  // namespace csphere
