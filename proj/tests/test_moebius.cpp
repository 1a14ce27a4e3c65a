#include <catch2/catch_amalgamated.hpp>

#include <csphere/moebius.hpp>

#include "test_support.hpp"

using namespace csphere;
using Catch::Matchers::WithinAbs;

namespace {
SpherePoint make_point(std::initializer_list<Complex> cs) {
    CVector u(static_cast<Eigen::Index>(cs.size()));
    Eigen::Index i = 0;
    for (Complex c : cs) u(i++) = c;
    return SpherePoint(std::move(u));
}

/// The rational formula for the canonical map along axis 1, evaluated
/// directly; cross-check oracle for the matrix action.
CVector rational_formula(double a, const CVector& z) {
    const Complex denom = (1.0 - a * a) * z(0) + (1.0 + a * a);
    CVector w(z.size());
    w(0) = ((1.0 + a * a) * z(0) + (1.0 - a * a)) / denom;
    for (Eigen::Index i = 1; i < z.size(); ++i) w(i) = 2.0 * a * z(i) / denom;
    return w;
}
}  // namespace

TEST_CASE("canonical matrix at a = 1/2 has exact rational entries") {
    const SignatureMatrix m = canonical_matrix(0.5, 2, 1);
    const CMatrix& e = m.entries();
    // 1/(2a) = 1, so the entries are (1+a^2) = 5/4, (1-a^2) = 3/4
    REQUIRE(e(0, 0) == Complex(1.25, 0.0));
    REQUIRE(e(0, 1) == Complex(0.75, 0.0));
    REQUIRE(e(1, 0) == Complex(0.75, 0.0));
    REQUIRE(e(1, 1) == Complex(1.25, 0.0));
    REQUIRE(e(2, 2) == Complex(1.0, 0.0));
    REQUIRE(e(0, 2) == Complex(0.0, 0.0));
    REQUIRE(e(2, 0) == Complex(0.0, 0.0));

    // eta-check in integer arithmetic over denominator 16: -(5/4)^2 + (3/4)^2 = -1
    const long long sixteenths = -5 * 5 + 3 * 3;
    REQUIRE(sixteenths == -16);
}

TEST_CASE("canonical matrices converge to the identity as a -> 1") {
    const SignatureMatrix m = canonical_matrix(1.0 - 1e-7, 2, 1);
    const double gap = (m.entries() - CMatrix::Identity(3, 3)).cwiseAbs().maxCoeff();
    REQUIRE(gap <= 1e-6);
}

TEST_CASE("canonical matrix parameter validation") {
    REQUIRE_THROWS_AS(canonical_matrix(0.0, 2, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(canonical_matrix(1.0, 2, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(canonical_matrix(-0.3, 2, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(canonical_matrix(0.5, 2, 3), std::invalid_argument);
    REQUIRE_THROWS_AS(canonical_matrix(0.5, 2, 0), std::invalid_argument);
}

TEST_CASE("signature matrices must preserve the indefinite form") {
    CMatrix bad = CMatrix::Identity(3, 3);
    bad(1, 1) = 2.0;
    REQUIRE_THROWS_AS(SignatureMatrix(bad), std::invalid_argument);
}

TEST_CASE("projective action on distinguished points") {
    const SignatureMatrix m = canonical_matrix(0.5, 2, 1);

    // the rational formula gives ((1-a^2)/(1+a^2), 2a/(1+a^2)) = (3/5, 4/5)
    const SpherePoint image = apply_projective(m, make_point({0.0, 1.0}));
    REQUIRE_THAT(image[0].real(), WithinAbs(0.6, 1e-15));
    REQUIRE_THAT(image[1].real(), WithinAbs(0.8, 1e-15));

    const SpherePoint p = axis_point(2, 1, -1.0);
    const SpherePoint q = axis_point(2, 1, +1.0);
    REQUIRE(ambient_distance(apply_projective(m, p), p) <= 1e-15);
    REQUIRE(ambient_distance(apply_projective(m, q), q) <= 1e-15);

    const SignatureMatrix id = SignatureMatrix::identity(2);
    for (const auto& z : sample_sphere(2, 20, 5)) {
        REQUIRE(ambient_distance(apply_projective(id, z), z) <= 1e-15);
    }
}

TEST_CASE("matrix action matches the rational formula at random points") {
    for (double a : {0.3, 0.5, 0.7, 0.9}) {
        const SignatureMatrix m = canonical_matrix(a, 2, 1);
        for (const auto& z : sample_sphere(2, 250, 7)) {
            const CVector direct = rational_formula(a, z.coords());
            const SpherePoint via_matrix = apply_projective(m, z);
            REQUIRE((via_matrix.coords() - direct / direct.norm()).norm() <= 1e-12);
        }
    }
}

TEST_CASE("moebius jacobian eigenstructure at the fixed points") {
    const ContactMap phi = canonical_moebius(0.5, 2, 1);
    const SpherePoint p = axis_point(2, 1, -1.0);
    const SpherePoint q = axis_point(2, 1, +1.0);

    // directions: the Reeb line i*p and the contact plane (0, *)
    const RVector reeb_p = realify((Complex(0, 1) * p.coords()).eval());
    CVector e2 = CVector::Zero(2);
    e2(1) = Complex(1.0, 0.0);
    const RVector plane = realify(e2);

    const RMatrix jac_p = phi.jacobian(p);
    REQUIRE_THAT((jac_p * reeb_p).dot(reeb_p), WithinAbs(4.0, 1e-12));
    REQUIRE_THAT((jac_p * plane).dot(plane), WithinAbs(2.0, 1e-12));

    const RMatrix jac_q = phi.jacobian(q);
    const RVector reeb_q = realify((Complex(0, 1) * q.coords()).eval());
    REQUIRE_THAT((jac_q * reeb_q).dot(reeb_q), WithinAbs(0.25, 1e-12));
    REQUIRE_THAT((jac_q * plane).dot(plane), WithinAbs(0.5, 1e-12));
}

TEST_CASE("moebius jacobians agree with finite differences") {
    std::mt19937_64 rng(17);
    for (double a : {0.3, 0.5, 0.9}) {
        const ContactMap phi = canonical_moebius(a, 2, 1);
        for (const auto& z : sample_sphere(2, 30, 19)) {
            REQUIRE(oracle::jacobian_disagreement(phi, z) <= 1e-6);
        }
    }
    const ContactMap generic = moebius_map(oracle::random_signature_matrix(2, rng));
    for (const auto& z : sample_sphere(2, 30, 23)) {
        REQUIRE(oracle::jacobian_disagreement(generic, z) <= 1e-6);
    }
}

TEST_CASE("fixed point spectrum of the canonical family") {
    SECTION("a = 1/2, against an eigendecomposition of the numeric jacobian") {
        const ContactMap phi = canonical_moebius(0.5, 2, 1);
        const auto [rep, att] = fixed_point_spectrum(phi);

        REQUIRE_THAT(rep.reeb_multiplier, WithinAbs(4.0, 1e-8));
        REQUIRE_THAT(rep.contact_multiplier, WithinAbs(2.0, 1e-8));
        REQUIRE_THAT(att.reeb_multiplier, WithinAbs(0.25, 1e-8));
        REQUIRE_THAT(att.contact_multiplier, WithinAbs(0.5, 1e-8));
        REQUIRE_THAT(rep.reeb_multiplier,
                     WithinAbs(rep.contact_multiplier * rep.contact_multiplier, 1e-8));
        REQUIRE_THAT(att.reeb_multiplier,
                     WithinAbs(att.contact_multiplier * att.contact_multiplier, 1e-8));

        // oracle: eigenvalues of the jacobian restricted to the tangent space
        const SpherePoint p = rep.point;
        const auto basis = tangent_basis(p);
        RMatrix frame(4, 3);
        for (int j = 0; j < 3; ++j) frame.col(j) = realify(basis[j].vec());
        const RMatrix restricted = frame.transpose() * phi.jacobian(p) * frame;
        Eigen::EigenSolver<RMatrix> eigen(restricted);
        std::vector<double> eigenvalues;
        for (int i = 0; i < 3; ++i) {
            REQUIRE(std::abs(eigen.eigenvalues()(i).imag()) <= 1e-9);
            eigenvalues.push_back(eigen.eigenvalues()(i).real());
        }
        std::sort(eigenvalues.begin(), eigenvalues.end());
        REQUIRE_THAT(eigenvalues[0], WithinAbs(2.0, 1e-9));
        REQUIRE_THAT(eigenvalues[1], WithinAbs(2.0, 1e-9));
        REQUIRE_THAT(eigenvalues[2], WithinAbs(4.0, 1e-9));
    }

    SECTION("expanding and contracting scaling signs") {
        for (double a : {0.3, 0.5, 0.9}) {
            const ContactMap phi = canonical_moebius(a, 2, 1);
            const double g_p = scaling_factor(phi, axis_point(2, 1, -1.0));
            const double g_q = scaling_factor(phi, axis_point(2, 1, +1.0));
            REQUIRE(g_p > 0.0);
            REQUIRE(g_q < 0.0);
            REQUIRE_THAT(g_p, WithinAbs(2.0 * std::log(1.0 / a), 1e-12));
            REQUIRE_THAT(g_q, WithinAbs(2.0 * std::log(a), 1e-12));
        }
    }

    SECTION("a = 0.9") {
        const auto [rep, att] = fixed_point_spectrum(canonical_moebius(0.9, 2, 1));
        REQUIRE_THAT(rep.reeb_multiplier, WithinAbs(1.0 / 0.81, 1e-8));
        REQUIRE_THAT(rep.contact_multiplier, WithinAbs(1.0 / 0.9, 1e-8));
    }

    SECTION("rejects maps outside the canonical family") {
        std::mt19937_64 rng(29);
        const ContactMap generic = moebius_map(oracle::random_signature_matrix(2, rng));
        REQUIRE_THROWS_AS(fixed_point_spectrum(generic), std::invalid_argument);
    }
}

TEST_CASE("conjugator construction") {
    SECTION("b = 1/2 sends the axis pair to exact rational points") {
        const Conjugator conj = build_conjugator(0.5, 2);
        REQUIRE_THAT(conj.p[0].real(), WithinAbs(-0.8, 1e-15));
        REQUIRE_THAT(conj.p[1].real(), WithinAbs(0.6, 1e-15));
        REQUIRE_THAT(conj.q[0].real(), WithinAbs(0.8, 1e-15));
        REQUIRE_THAT(conj.q[1].real(), WithinAbs(0.6, 1e-15));
        REQUIRE_THAT(std::abs(conj.p[0].imag()) + std::abs(conj.p[1].imag()),
                     WithinAbs(0.0, 1e-15));
        REQUIRE_THAT(conj.fiber_margin, WithinAbs(std::acos(7.0 / 25.0), 1e-12));
        REQUIRE(conj.fiber_margin > 0.5);
    }

    SECTION("b close to 1 collapses the pair onto one fiber and is rejected") {
        REQUIRE_THROWS_AS(build_conjugator(1.0 - 1e-9, 2), std::invalid_argument);
    }

    SECTION("needs n >= 2") {
        REQUIRE_THROWS_AS(build_conjugator(0.5, 1), std::invalid_argument);
    }
}

TEST_CASE("isotopy path to the identity") {
    const auto path = isotopy_path(0.5, 100, 2);
    REQUIRE(path.size() == 100);

    const auto pts = sample_sphere(2, 1000, 31);

    SECTION("starts next to the identity") {
        double sup = 0.0;
        for (const auto& z : pts) {
            sup = std::max(sup, ambient_distance(path.front()(z), z));
        }
        REQUIRE(sup <= 1e-4);
    }

    SECTION("consecutive maps stay uniformly close") {
        double worst = 0.0;
        for (std::size_t k = 0; k + 1 < path.size(); ++k) {
            double sup = 0.0;
            for (std::size_t i = 0; i < pts.size(); i += 10) {
                sup = std::max(sup, ambient_distance(path[k](pts[i]), path[k + 1](pts[i])));
            }
            worst = std::max(worst, sup);
        }
        REQUIRE(worst <= 0.1);
    }

    SECTION("ends at the requested parameter") {
        const ContactMap last = path.back();
        const ContactMap expected = canonical_moebius(0.5, 2, 1);
        for (std::size_t i = 0; i < pts.size(); i += 50) {
            REQUIRE(ambient_distance(last(pts[i]), expected(pts[i])) <= 1e-15);
        }
    }

    SECTION("parameter validation") {
        REQUIRE_THROWS_AS(isotopy_path(0.5, 1, 2), std::invalid_argument);
        REQUIRE_THROWS_AS(isotopy_path(1.5, 10, 2), std::invalid_argument);
    }
}

TEST_CASE("projective action is a group action, invariant under phases") {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 10; ++trial) {
        const SignatureMatrix m1 = oracle::random_signature_matrix(2, rng);
        const SignatureMatrix m2 = oracle::random_signature_matrix(2, rng);
        const SignatureMatrix product = m1 * m2;
        std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
        const SignatureMatrix phased(std::polar(1.0, angle(rng)) * m1.entries());
        for (const auto& z : sample_sphere(2, 20, 41 + trial)) {
            const SpherePoint lhs = apply_projective(product, z);
            const SpherePoint rhs = apply_projective(m1, apply_projective(m2, z));
            REQUIRE(ambient_distance(lhs, rhs) <= 1e-10);
            REQUIRE(ambient_distance(apply_projective(phased, z), apply_projective(m1, z)) <=
                    1e-12);
        }
    }
}

TEST_CASE("group inverse is exact") {
    std::mt19937_64 rng(43);
    const SignatureMatrix m = oracle::random_signature_matrix(2, rng);
    const SignatureMatrix round_trip = m * m.inverse();
    REQUIRE((round_trip.entries() - CMatrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("the canonical family moves every point except the axis pair") {
    const ContactMap phi = canonical_moebius(0.5, 2, 1);
    const SpherePoint p = axis_point(2, 1, -1.0);
    const SpherePoint q = axis_point(2, 1, +1.0);
    for (const auto& z : sample_sphere(2, 10000, 47)) {
        if (ambient_distance(phi(z), z) < 1e-3) {
            const bool near_fixed = ambient_distance(z, p) < 0.1 || ambient_distance(z, q) < 0.1;
            REQUIRE(near_fixed);
        }
    }
}

TEST_CASE("attraction toward the contracting fixed point") {
    const ContactMap phi = canonical_moebius(0.5, 2, 1);
    const SpherePoint p = axis_point(2, 1, -1.0);
    const SpherePoint q = axis_point(2, 1, +1.0);

    SECTION("balls around q map into themselves") {
        int cap_seed = 53;
        for (double r : {0.5, 0.1, 0.01}) {
            for (const auto& z : sample_cap(q, r, 200, cap_seed++)) {
                REQUIRE(ambient_distance(phi(z), q) <= r);
            }
        }
    }

    SECTION("generic orbits reach a 1e-6 ball around q within 200 iterations") {
        for (const auto& z : sample_sphere(2, 1000, 59)) {
            if (ambient_distance(z, p) < 1e-6) continue;
            SpherePoint orbit = z;
            bool reached = false;
            for (int k = 0; k < 200 && !reached; ++k) {
                orbit = phi(orbit);
                reached = ambient_distance(orbit, q) <= 1e-6;
            }
            REQUIRE(reached);
        }
    }
}

TEST_CASE("every canonical map passes the contact check at scale") {
    for (double a : {0.3, 0.9}) {
        const ContactMap phi = canonical_moebius(a, 2, 1);
        for (const auto& z : sample_sphere(2, 1000, 61)) {
            REQUIRE(verify_contact(phi, z) <= 1e-9);
        }
    }
}
