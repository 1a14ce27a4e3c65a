#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "csphere/sphere.hpp"

namespace csphere {

enum class MapKind { unitary, moebius, composition, inverse, iterate, conjugate, custom };

inline const char* to_string(MapKind k) {
    switch (k) {
        case MapKind::unitary: return "unitary";
        case MapKind::moebius: return "moebius";
        case MapKind::composition: return "composition";
        case MapKind::inverse: return "inverse";
        case MapKind::iterate: return "iterate";
        case MapKind::conjugate: return "conjugate";
        case MapKind::custom: return "custom";
    }
    return "?";
}

class MapImpl;
using MapImplPtr = std::shared_ptr<const MapImpl>;

/// Behind every ContactMap: a smooth sphere map with an exact real 2n×2n
/// ambient Jacobian (interleaved re/im layout). The Jacobian contract is
/// only on tangent vectors: it maps T_z S into T_{φ(z)} S.
class MapImpl {
  public:
    virtual ~MapImpl() = default;

    virtual int dim() const = 0;
    virtual MapKind kind() const = 0;
    virtual std::string describe() const = 0;

    /// Raw map on ambient coordinates, no renormalization. Defined on a
    /// neighbourhood of the sphere (needed by finite-difference probes).
    virtual CVector ambient(const CVector& u) const = 0;

    virtual RMatrix jacobian(const SpherePoint& z) const = 0;

    virtual MapImplPtr invert() const = 0;

    /// Scaling factor g(z) = ln α_{φ(z)}(dφ_z · R_z); α(R) = 1 makes the
    /// Reeb direction a one-shot normalization of the pullback. Iterates
    /// override this with the cocycle sum, which is the numerically stable
    /// route for long chains.
    virtual double scaling(const SpherePoint& z) const;
};

/// Value-semantic handle to an immutable sphere map. Copies share the
/// implementation; all evaluations are pure, so the type is safe to use
/// from parallel workers without synchronization.
class ContactMap {
  public:
    explicit ContactMap(MapImplPtr impl) : impl_(std::move(impl)) {
        if (!impl_) throw std::invalid_argument("ContactMap: null implementation");
    }

    int dim() const { return impl_->dim(); }
    MapKind kind() const { return impl_->kind(); }
    std::string describe() const { return impl_->describe(); }

    SpherePoint operator()(const SpherePoint& z) const {
        if (z.dim() != dim()) throw std::invalid_argument("ContactMap: dimension mismatch");
        return SpherePoint(impl_->ambient(z.coords()));  // ctor renormalizes
    }

    CVector ambient(const CVector& u) const { return impl_->ambient(u); }
    RMatrix jacobian(const SpherePoint& z) const { return impl_->jacobian(z); }
    double scaling(const SpherePoint& z) const { return impl_->scaling(z); }

    ContactMap inverse() const { return ContactMap(impl_->invert()); }

    const MapImplPtr& impl() const { return impl_; }

    static ContactMap identity(int n);
    static ContactMap unitary(CMatrix u);
    static ContactMap custom(int n, std::string description,
                             std::function<CVector(const CVector&)> forward,
                             std::function<RMatrix(const SpherePoint&)> jacobian,
                             MapImplPtr inverse = nullptr);

  private:
    MapImplPtr impl_;
};

// --- scaling factor -------------------------------------------------------

/// Direct Jacobian-route scaling factor, always ln α_{φ(z)}(dφ_z R_z).
/// Errors out when the argument of the log is non-positive: φ is then not
/// an orientation-preserving contactomorphism at z.
inline double scaling_factor_direct(const ContactMap& phi, const SpherePoint& z) {
    const RVector reeb = realify((Complex(0, 1) * z.coords()).eval());
    const RVector image_dir = phi.jacobian(z) * reeb;
    const SpherePoint w = phi(z);
    const double pulled = contact_form_raw(w, unrealify(image_dir));
    if (!(pulled > 0.0)) {
        throw std::domain_error(
            "scaling_factor: alpha(dphi R) <= 0; map is not an orientation-preserving "
            "contactomorphism at this point");
    }
    return std::log(pulled);
}

inline double MapImpl::scaling(const SpherePoint& z) const {
    const RVector reeb = realify((Complex(0, 1) * z.coords()).eval());
    const RVector image_dir = jacobian(z) * reeb;
    const SpherePoint w(ambient(z.coords()));
    const double pulled = contact_form_raw(w, unrealify(image_dir));
    if (!(pulled > 0.0)) {
        throw std::domain_error(
            "scaling_factor: alpha(dphi R) <= 0; map is not an orientation-preserving "
            "contactomorphism at this point");
    }
    return std::log(pulled);
}

/// The scaling-factor operation. For iterates this dispatches to the
/// cocycle sum g_k = g + g∘φ + ... + g∘φ_{k-1}.
inline double scaling_factor(const ContactMap& phi, const SpherePoint& z) {
    return phi.scaling(z);
}

/// Cocycle sum Σ_{j<k} g(φ_j(z)) accumulated along the forward orbit.
inline double cocycle_scaling(const ContactMap& phi, int k, const SpherePoint& z) {
    if (k < 1) throw std::invalid_argument("cocycle_scaling: k must be >= 1");
    double sum = 0.0;
    SpherePoint orbit = z;
    for (int j = 0; j < k; ++j) {
        sum += phi.scaling(orbit);
        if (j + 1 < k) orbit = phi(orbit);
    }
    return sum;
}

// --- contact-condition verification ---------------------------------------

/// Residual of the defining identity φ*α = e^g α over a tangent basis:
/// max_v |α_{φ(z)}(dφ v) − s α_z(v)| / (1 + |α_z(v)|) with s = |α(dφ R)|.
/// Orientation-reversing maps fail loudly on the Reeb vector; maps that tilt
/// the contact hyperplane fail on the basis vectors.
inline double verify_contact(const ContactMap& phi, const SpherePoint& z,
                             const std::vector<TangentVector>& basis) {
    const int m = 2 * z.dim() - 1;
    if (static_cast<int>(basis.size()) < m) {
        throw std::invalid_argument("verify_contact: basis does not span the tangent space");
    }
    RMatrix b(2 * z.dim(), basis.size());
    for (std::size_t j = 0; j < basis.size(); ++j) {
        if ((basis[j].base().coords() - z.coords()).norm() > 1e-12) {
            throw std::invalid_argument("verify_contact: basis vector based at a different point");
        }
        b.col(static_cast<Eigen::Index>(j)) = realify(basis[j].vec());
    }
    Eigen::JacobiSVD<RMatrix> svd(b);
    if (svd.rank() < m || svd.singularValues()(m - 1) < 1e-8 * svd.singularValues()(0)) {
        throw std::invalid_argument("verify_contact: degenerate tangent basis");
    }

    const RMatrix jac = phi.jacobian(z);
    const SpherePoint w = phi(z);
    const RVector reeb = realify((Complex(0, 1) * z.coords()).eval());
    const double s = std::abs(contact_form_raw(w, unrealify((jac * reeb).eval())));

    double residual = 0.0;
    for (const auto& v : basis) {
        const double lhs = contact_form_raw(w, unrealify((jac * realify(v.vec())).eval()));
        const double rhs = s * contact_form_raw(z, v.vec());
        residual = std::max(residual,
                            std::abs(lhs - rhs) / (1.0 + std::abs(contact_form_raw(z, v.vec()))));
    }
    return residual;
}

inline double verify_contact(const ContactMap& phi, const SpherePoint& z) {
    return verify_contact(phi, z, tangent_basis(z));
}

/// |det dφ_z| between tangent spaces with orthonormal frames, via the frame
/// matrix determinant. Equals e^{n g(z)} for a contactomorphism (the volume
/// identity φ*(α ∧ dα^{n-1}) = e^{ng} α ∧ dα^{n-1}).
inline double volume_distortion(const ContactMap& phi, const SpherePoint& z) {
    const SpherePoint w = phi(z);
    const auto basis_in = tangent_basis(z);
    const auto basis_out = tangent_basis(w);
    const int m = 2 * z.dim() - 1;
    RMatrix bin(2 * z.dim(), m), bout(2 * z.dim(), m);
    for (int j = 0; j < m; ++j) {
        bin.col(j) = realify(basis_in[j].vec());
        bout.col(j) = realify(basis_out[j].vec());
    }
    const RMatrix frame = bout.transpose() * phi.jacobian(z) * bin;
    return std::abs(frame.determinant());
}

// --- implementations -------------------------------------------------------

namespace detail {

class UnitaryImpl final : public MapImpl {
  public:
    explicit UnitaryImpl(CMatrix u) : u_(std::move(u)) {
        if (u_.rows() != u_.cols() || u_.rows() < 1) {
            throw std::invalid_argument("unitary map: matrix must be square");
        }
        const CMatrix defect = u_.adjoint() * u_ - CMatrix::Identity(u_.rows(), u_.cols());
        if (defect.cwiseAbs().maxCoeff() > 1e-12) {
            throw std::invalid_argument("unitary map: U*U != I");
        }
    }

    int dim() const override { return static_cast<int>(u_.rows()); }
    MapKind kind() const override { return MapKind::unitary; }
    std::string describe() const override { return "unitary"; }
    CVector ambient(const CVector& u) const override { return u_ * u; }
    RMatrix jacobian(const SpherePoint&) const override { return realify_linear(u_); }
    MapImplPtr invert() const override {
        return std::make_shared<UnitaryImpl>(u_.adjoint().eval());
    }

    const CMatrix& matrix() const { return u_; }

  private:
    CMatrix u_;
};

class ComposeImpl final : public MapImpl {
  public:
    ComposeImpl(MapImplPtr outer, MapImplPtr inner, MapKind kind = MapKind::composition)
        : outer_(std::move(outer)), inner_(std::move(inner)), kind_(kind) {
        if (outer_->dim() != inner_->dim()) {
            throw std::invalid_argument("compose: dimension mismatch");
        }
    }

    int dim() const override { return outer_->dim(); }
    MapKind kind() const override { return kind_; }
    std::string describe() const override {
        return outer_->describe() + " o " + inner_->describe();
    }
    CVector ambient(const CVector& u) const override { return outer_->ambient(inner_->ambient(u)); }
    RMatrix jacobian(const SpherePoint& z) const override {
        const SpherePoint mid(inner_->ambient(z.coords()));
        return outer_->jacobian(mid) * inner_->jacobian(z);
    }
    MapImplPtr invert() const override {
        return std::make_shared<ComposeImpl>(inner_->invert(), outer_->invert(), kind_);
    }
    // g_{φ∘ψ} = g_φ∘ψ + g_ψ; keeps long conjugation chains on the cheap
    // closed-form path of their factors.
    double scaling(const SpherePoint& z) const override {
        const double inner_part = inner_->scaling(z);
        return outer_->scaling(SpherePoint(inner_->ambient(z.coords()))) + inner_part;
    }

  private:
    MapImplPtr outer_, inner_;
    MapKind kind_;
};

class IterateImpl final : public MapImpl {
  public:
    IterateImpl(MapImplPtr base, int k) : base_(std::move(base)), k_(k) {
        if (k_ < 0) throw std::invalid_argument("iterate: k must be >= 0");
    }

    int dim() const override { return base_->dim(); }
    MapKind kind() const override { return MapKind::iterate; }
    std::string describe() const override {
        return base_->describe() + "^" + std::to_string(k_);
    }
    CVector ambient(const CVector& u) const override {
        CVector v = u;
        for (int j = 0; j < k_; ++j) {
            v = base_->ambient(v);
            v /= v.norm();  // keep long orbits on the sphere
        }
        return v;
    }
    RMatrix jacobian(const SpherePoint& z) const override {
        RMatrix jac = RMatrix::Identity(2 * dim(), 2 * dim());
        SpherePoint orbit = z;
        for (int j = 0; j < k_; ++j) {
            jac = base_->jacobian(orbit) * jac;
            if (j + 1 < k_) orbit = SpherePoint(base_->ambient(orbit.coords()));
        }
        return jac;
    }
    MapImplPtr invert() const override {
        return std::make_shared<IterateImpl>(base_->invert(), k_);
    }
    // Scaling factors of iterates use the cocycle identity
    // g_k = g + g∘φ + ... + g∘φ_{k-1}: sums of k bounded terms instead of a
    // Jacobian chain whose conditioning degrades exponentially in k.
    double scaling(const SpherePoint& z) const override {
        if (k_ == 0) return 0.0;
        double sum = 0.0;
        SpherePoint orbit = z;
        for (int j = 0; j < k_; ++j) {
            sum += base_->scaling(orbit);
            if (j + 1 < k_) orbit = SpherePoint(base_->ambient(orbit.coords()));
        }
        return sum;
    }

    const MapImplPtr& base() const { return base_; }
    int count() const { return k_; }

  private:
    MapImplPtr base_;
    int k_;
};

class CustomImpl final : public MapImpl {
  public:
    CustomImpl(int n, std::string description, std::function<CVector(const CVector&)> forward,
               std::function<RMatrix(const SpherePoint&)> jacobian, MapImplPtr inverse)
        : n_(n),
          description_(std::move(description)),
          forward_(std::move(forward)),
          jacobian_(std::move(jacobian)),
          inverse_(std::move(inverse)) {
        if (n_ < 1) throw std::invalid_argument("custom map: n must be >= 1");
        if (!forward_ || !jacobian_) {
            throw std::invalid_argument("custom map: forward and jacobian are required");
        }
    }

    int dim() const override { return n_; }
    MapKind kind() const override { return MapKind::custom; }
    std::string describe() const override { return description_; }
    CVector ambient(const CVector& u) const override { return forward_(u); }
    RMatrix jacobian(const SpherePoint& z) const override { return jacobian_(z); }
    MapImplPtr invert() const override {
        if (!inverse_) throw std::runtime_error("custom map: no inverse provided");
        return inverse_;
    }

  private:
    int n_;
    std::string description_;
    std::function<CVector(const CVector&)> forward_;
    std::function<RMatrix(const SpherePoint&)> jacobian_;
    MapImplPtr inverse_;
};

}  // namespace detail

inline ContactMap ContactMap::identity(int n) {
    return unitary(CMatrix::Identity(n, n));
}

inline ContactMap ContactMap::unitary(CMatrix u) {
    return ContactMap(std::make_shared<detail::UnitaryImpl>(std::move(u)));
}

inline ContactMap ContactMap::custom(int n, std::string description,
                                     std::function<CVector(const CVector&)> forward,
                                     std::function<RMatrix(const SpherePoint&)> jacobian,
                                     MapImplPtr inverse) {
    return ContactMap(std::make_shared<detail::CustomImpl>(
        n, std::move(description), std::move(forward), std::move(jacobian), std::move(inverse)));
}

/// φ ∘ ψ; scaling factors compose as g_{φ∘ψ} = g_φ∘ψ + g_ψ.
inline ContactMap compose(const ContactMap& phi, const ContactMap& psi) {
    return ContactMap(std::make_shared<detail::ComposeImpl>(phi.impl(), psi.impl()));
}

/// k-fold composition, k = 0 is the identity.
inline ContactMap iterate(const ContactMap& phi, int k) {
    return ContactMap(std::make_shared<detail::IterateImpl>(phi.impl(), k));
}

/// σ ∘ φ ∘ σ⁻¹. Its scaling factor satisfies h∘φ∘σ⁻¹ + g∘σ⁻¹ − h∘σ⁻¹
/// where h, g are the scaling factors of σ, φ.
inline ContactMap conjugate(const ContactMap& phi, const ContactMap& sigma) {
    if (phi.dim() != sigma.dim()) throw std::invalid_argument("conjugate: dimension mismatch");
    auto inner = std::make_shared<detail::ComposeImpl>(phi.impl(), sigma.impl()->invert());
    return ContactMap(
        std::make_shared<detail::ComposeImpl>(sigma.impl(), inner, MapKind::conjugate));
}

}  // namespace csphere
