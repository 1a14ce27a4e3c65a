#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "csphere/contact_map.hpp"
#include "csphere/sphere.hpp"

namespace csphere {

/// Element of U(n,1): a complex (n+1)×(n+1) matrix preserving the indefinite
/// form q(u) = −u₀ū₀ + u₁ū₁ + ... + u_nū_n, i.e. M* η M = η with
/// η = diag(−1, 1, ..., 1). Projectivized, these act on the unit ball of ℂⁿ
/// by biholomorphisms and on its boundary sphere by contactomorphisms.
class SignatureMatrix {
  public:
    explicit SignatureMatrix(CMatrix entries) : m_(std::move(entries)) {
        if (m_.rows() != m_.cols() || m_.rows() < 2) {
            throw std::invalid_argument("SignatureMatrix: need a square matrix of size >= 2");
        }
        const CMatrix eta = signature_form(dim());
        const double defect = (m_.adjoint() * eta * m_ - eta).cwiseAbs().maxCoeff();
        // products of many hyperbolic factors accumulate rounding in
        // proportion to ||M||^2; scale the check accordingly
        if (defect > 1e-12 * std::max(1.0, m_.squaredNorm())) {
            throw std::invalid_argument("SignatureMatrix: M* eta M != eta");
        }
    }

    /// Complex dimension n of the sphere the matrix acts on.
    int dim() const { return static_cast<int>(m_.rows()) - 1; }
    const CMatrix& entries() const { return m_; }

    /// Group inverse η M* η; exact, no numerical matrix inversion.
    SignatureMatrix inverse() const {
        const CMatrix eta = signature_form(dim());
        return SignatureMatrix(eta * m_.adjoint() * eta);
    }

    static CMatrix signature_form(int n) {
        CMatrix eta = CMatrix::Identity(n + 1, n + 1);
        eta(0, 0) = Complex(-1.0, 0.0);
        return eta;
    }

    static SignatureMatrix identity(int n) {
        return SignatureMatrix(CMatrix::Identity(n + 1, n + 1));
    }

    friend SignatureMatrix operator*(const SignatureMatrix& a, const SignatureMatrix& b) {
        if (a.dim() != b.dim()) throw std::invalid_argument("SignatureMatrix: dimension mismatch");
        return SignatureMatrix(a.m_ * b.m_);
    }

  private:
    CMatrix m_;
};

/// The hyperbolic one-parameter family
///
///   M_a = (1/2a) [ 1+a²  1−a² ]  ⊕  1
///               [ 1−a²  1+a² ]
///
/// with the 2×2 block on the homogeneous coordinates (u₀, u_axis) and the
/// identity elsewhere. Axis placement is done by conjugating with the
/// coordinate-swap permutation so there is a single formula code path.
inline SignatureMatrix canonical_matrix(double a, int n, int axis = 1) {
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("canonical_matrix: a must be in (0,1)");
    if (n < 1) throw std::invalid_argument("canonical_matrix: n must be >= 1");
    if (axis < 1 || axis > n) throw std::invalid_argument("canonical_matrix: axis out of range");
    CMatrix m = CMatrix::Identity(n + 1, n + 1);
    const double diag = (1.0 + a * a) / (2.0 * a);
    const double off = (1.0 - a * a) / (2.0 * a);
    m(0, 0) = diag;
    m(0, 1) = off;
    m(1, 0) = off;
    m(1, 1) = diag;
    if (axis != 1) {
        CMatrix swap = CMatrix::Identity(n + 1, n + 1);
        swap(1, 1) = swap(axis, axis) = 0.0;
        swap(1, axis) = swap(axis, 1) = 1.0;
        m = swap * m * swap;
    }
    return SignatureMatrix(std::move(m));
}

/// Projective action on the sphere: lift z to the null vector (1, z), apply
/// M, dehomogenize by the zeroth coordinate. U(n,1) preserves the null cone,
/// so the result is again on the sphere.
inline SpherePoint apply_projective(const SignatureMatrix& m, const SpherePoint& z) {
    if (m.dim() != z.dim()) throw std::invalid_argument("apply_projective: dimension mismatch");
    const int n = z.dim();
    CVector u(n + 1);
    u(0) = Complex(1.0, 0.0);
    u.tail(n) = z.coords();
    const CVector v = m.entries() * u;
    if (std::abs(v(0)) < 1e-12 * (1.0 + v.tail(n).norm())) {
        throw std::domain_error(
            "apply_projective: vanishing zeroth coordinate; input off the sphere or matrix not "
            "in U(n,1)");
    }
    return SpherePoint((v.tail(n) / v(0)).eval());
}

/// Sphere contactomorphism induced by an element of U(n,1). The map is the
/// rational z ↦ (c + A z) / (d + b·z) obtained by projectivizing; it is
/// holomorphic near the closed ball, so the tangent Jacobian is the complex
/// quotient-rule derivative.
class MoebiusMap final : public MapImpl {
  public:
    explicit MoebiusMap(SignatureMatrix m, std::optional<double> parameter = std::nullopt,
                        std::optional<int> axis = std::nullopt)
        : m_(std::move(m)), parameter_(parameter), axis_(axis) {
        const int n = m_.dim();
        const CMatrix& e = m_.entries();
        d_ = e(0, 0);
        b_ = e.row(0).tail(n).transpose();
        c_ = e.col(0).tail(n);
        a_block_ = e.bottomRightCorner(n, n);
    }

    int dim() const override { return m_.dim(); }
    MapKind kind() const override { return MapKind::moebius; }
    std::string describe() const override {
        if (parameter_) {
            return "moebius(a=" + std::to_string(*parameter_) +
                   ", axis=" + std::to_string(axis_.value_or(1)) + ")";
        }
        return "moebius";
    }

    CVector ambient(const CVector& u) const override {
        const Complex denom = d_ + (b_.array() * u.array()).sum();  // bᵀu, no conjugation
        const CVector numer = c_ + a_block_ * u;
        if (std::abs(denom) < 1e-12 * (1.0 + numer.norm())) {
            throw std::domain_error("moebius: vanishing denominator off the unit ball closure");
        }
        return numer / denom;
    }

    /// d(L/ℓ) v = (A v − w (b·v)) / ℓ with w = L/ℓ; ℂ-linear, realified.
    RMatrix jacobian(const SpherePoint& z) const override {
        const CVector& u = z.coords();
        const Complex denom = d_ + (b_.array() * u.array()).sum();
        const CVector w = (c_ + a_block_ * u) / denom;
        const CMatrix deriv = (a_block_ - w * b_.transpose()) / denom;
        return realify_linear(deriv);
    }

    MapImplPtr invert() const override {
        return std::make_shared<MoebiusMap>(m_.inverse());
    }

    // e^{g(z)} = α_{φ(z)}(dφ_z R_z) collapses to 1/|ℓ(z)|² for a map induced
    // by U(n,1); evaluating the closed form avoids the Jacobian in the hot
    // orbit loops. The test suite checks it against the Jacobian route.
    double scaling(const SpherePoint& z) const override {
        const Complex denom = d_ + (b_.array() * z.coords().array()).sum();
        const double mod = std::abs(denom);
        if (!(mod > 0.0)) {
            throw std::domain_error("moebius scaling: vanishing denominator");
        }
        return -2.0 * std::log(mod);
    }

    const SignatureMatrix& matrix() const { return m_; }
    std::optional<double> parameter() const { return parameter_; }
    std::optional<int> axis() const { return axis_; }

  private:
    SignatureMatrix m_;
    std::optional<double> parameter_;
    std::optional<int> axis_;
    Complex d_;
    CVector b_, c_;
    CMatrix a_block_;
};

inline ContactMap moebius_map(SignatureMatrix m) {
    return ContactMap(std::make_shared<MoebiusMap>(std::move(m)));
}

/// The canonical family: north-south dynamics on the sphere with repelling
/// fixed point at axis-coordinate −1 and attracting fixed point at +1.
inline ContactMap canonical_moebius(double a, int n, int axis = 1) {
    return ContactMap(std::make_shared<MoebiusMap>(canonical_matrix(a, n, axis), a, axis));
}

/// Unit-sphere point with a single nonzero complex coordinate.
inline SpherePoint axis_point(int n, int axis, double sign) {
    CVector u = CVector::Zero(n);
    u(axis - 1) = Complex(sign, 0.0);
    return SpherePoint(std::move(u));
}

/// Derivative data at a fixed point of a canonical map: the multiplier on
/// the characteristic (Reeb) line iℝ and on the contact hyperplane ℂ^{n-1}.
/// The derivative structure forces reeb_multiplier = contact_multiplier².
struct FixedPointSpectrum {
    SpherePoint point;
    double reeb_multiplier;
    double contact_multiplier;
};

namespace detail {

inline FixedPointSpectrum spectrum_at(const ContactMap& phi, const SpherePoint& fixed, int axis) {
    const RMatrix jac = phi.jacobian(fixed);
    const double move = ambient_distance(phi(fixed), fixed);
    if (move > 1e-9) {
        throw std::runtime_error("fixed_point_spectrum: point is not fixed");
    }

    const RVector reeb = realify((Complex(0, 1) * fixed.coords()).eval());
    const double lam_r = reeb.dot(jac * reeb);
    if ((jac * reeb - lam_r * reeb).norm() > 1e-8 * std::max(1.0, std::abs(lam_r))) {
        throw std::runtime_error("fixed_point_spectrum: Reeb line is not invariant");
    }

    const int n = phi.dim();
    const int other = (axis == 1) ? 2 : 1;
    CVector dir = CVector::Zero(n);
    dir(other - 1) = Complex(1.0, 0.0);
    const RVector v = realify(dir);
    const double lam_c = v.dot(jac * v);
    if ((jac * v - lam_c * v).norm() > 1e-8 * std::max(1.0, std::abs(lam_c))) {
        throw std::runtime_error("fixed_point_spectrum: contact hyperplane is not invariant");
    }

    if (std::abs(lam_r - lam_c * lam_c) > 1e-8 * (1.0 + lam_c * lam_c)) {
        throw std::runtime_error(
            "fixed_point_spectrum: reeb multiplier is not the square of the contact multiplier");
    }
    return FixedPointSpectrum{fixed, lam_r, lam_c};
}

}  // namespace detail

/// Spectra at the two fixed points of a canonical map: first the repelling
/// point (axis coordinate −1, multipliers 1/a², 1/a), then the attracting
/// point (+1, multipliers a², a). Requires n >= 2 so the contact hyperplane
/// is nonempty.
inline std::pair<FixedPointSpectrum, FixedPointSpectrum> fixed_point_spectrum(
    const ContactMap& phi) {
    auto moebius = std::dynamic_pointer_cast<const MoebiusMap>(phi.impl());
    if (!moebius || !moebius->parameter()) {
        throw std::invalid_argument("fixed_point_spectrum: map is not from the canonical family");
    }
    if (phi.dim() < 2) {
        throw std::invalid_argument("fixed_point_spectrum: need n >= 2");
    }
    const int axis = moebius->axis().value_or(1);
    return {detail::spectrum_at(phi, axis_point(phi.dim(), axis, -1.0), axis),
            detail::spectrum_at(phi, axis_point(phi.dim(), axis, +1.0), axis)};
}

/// A conjugator σ moving the canonical fixed-point pair (P, Q) on the first
/// coordinate axis to a pair (p, q) on distinct Hopf fibers, realized as a
/// second canonical map acting along coordinate axis 2. The fiber margin is
/// checked with an explicit bound so downstream separation arguments have
/// room to work with.
struct Conjugator {
    ContactMap sigma;
    SpherePoint p;
    SpherePoint q;
    double fiber_margin;
};

inline Conjugator build_conjugator(double b, int n, double min_margin = 0.5) {
    if (n < 2) throw std::invalid_argument("build_conjugator: need n >= 2");
    ContactMap sigma = canonical_moebius(b, n, 2);
    const SpherePoint p = sigma(axis_point(n, 1, -1.0));
    const SpherePoint q = sigma(axis_point(n, 1, +1.0));
    const double margin = fiber_distance(p, q);
    if (!(margin > min_margin)) {
        throw std::invalid_argument(
            "build_conjugator: images of the fixed points are closer than the required fiber "
            "margin; pick a smaller b");
    }
    return Conjugator{std::move(sigma), p, q, margin};
}

/// Family φ_{a(t)} with a(t) running linearly from 1−1e-6 down to a_end;
/// witnesses the isotopy of the canonical map to the identity (φ → id as
/// a → 1).
inline std::vector<ContactMap> isotopy_path(double a_end, int steps, int n = 2, int axis = 1) {
    if (!(a_end > 0.0 && a_end < 1.0)) {
        throw std::invalid_argument("isotopy_path: a_end must be in (0,1)");
    }
    if (steps < 2) throw std::invalid_argument("isotopy_path: need at least 2 steps");
    const double a_start = 1.0 - 1e-6;
    std::vector<ContactMap> path;
    path.reserve(steps);
    for (int i = 0; i < steps; ++i) {
        const double t = static_cast<double>(i) / (steps - 1);
        const double a = (i + 1 == steps) ? a_end : a_start + t * (a_end - a_start);
        path.push_back(canonical_moebius(a, n, axis));
    }
    return path;
}

}  // namespace csphere
