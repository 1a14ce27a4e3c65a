#include <catch2/catch_amalgamated.hpp>

#include <csphere/circle_map.hpp>
#include <csphere/invariant_hamiltonian.hpp>

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

double trapezoid_derivative_integral(const CircleMap& map, int resolution) {
    const double two_pi = 2.0 * std::numbers::pi;
    double integral = 0.0;
    for (int i = 0; i < resolution; ++i) {
        integral += map.derivative(two_pi * i / resolution);
    }
    return integral * two_pi / resolution;
}
}  // namespace

TEST_CASE("rotations have identically vanishing scaling factor") {
    const CircleMap rot = CircleMap::rotation();
    const CircleZeroReport report = circle_zero_count(rot, 256);
    REQUIRE(report.rotation);
    REQUIRE(report.count == 0);
}

TEST_CASE("theta + 0.3 sin(theta) has exactly two scaling zeros") {
    // g = ln(1 + 0.3 cos(theta)) vanishes exactly where cos(theta) = 0
    const CircleMap map({0.3}, {});
    const CircleZeroReport report = circle_zero_count(map, 256);
    REQUIRE_FALSE(report.rotation);
    REQUIRE(report.count == 2);
    std::vector<double> zeros = report.zeros;
    std::sort(zeros.begin(), zeros.end());
    REQUIRE_THAT(zeros[0], WithinAbs(M_PI / 2.0, 1e-9));
    REQUIRE_THAT(zeros[1], WithinAbs(3.0 * M_PI / 2.0, 1e-9));
    for (double z : zeros) {
        REQUIRE(std::abs(map.scaling(z)) <= 1e-12);
    }
}

TEST_CASE("every random circle diffeomorphism has at least two scaling zeros") {
    std::mt19937_64 rng(2027);
    for (int trial = 0; trial < 100; ++trial) {
        const CircleMap map = random_circle_map(rng);
        const CircleZeroReport report = circle_zero_count(map, 512);
        REQUIRE_FALSE(report.rotation);
        REQUIRE(report.count >= 2);
        // total-length identity: the trapezoid rule is exact for trig polys
        REQUIRE_THAT(trapezoid_derivative_integral(map, 512),
                     WithinAbs(2.0 * std::numbers::pi, 1e-6));
    }
}

TEST_CASE("circle zeros are translated points of the circle contactomorphism") {
    // every point of the circle lies on the single Reeb orbit, so a zero of
    // g is automatically a translated point
    std::mt19937_64 rng(31);
    const CircleMap map = random_circle_map(rng);
    const CircleZeroReport report = circle_zero_count(map, 512);
    for (double z : report.zeros) {
        REQUIRE(std::abs(map.scaling(z)) <= 1e-12);
    }
}

TEST_CASE("circle map validation") {
    REQUIRE_THROWS_AS(CircleMap({2.0}, {}), std::invalid_argument);  // derivative dips negative
    const CircleMap fine({0.3}, {});
    REQUIRE_THROWS_AS(circle_zero_count(fine, 8), std::invalid_argument);
}

TEST_CASE("invariant hamiltonian flows") {
    const InvariantHamiltonian h({1.0, 2.0});

    SECTION("time zero is the identity") {
        const ContactMap flow = invariant_flow(h, 0.0);
        for (const auto& z : sample_sphere(2, 20, 3)) {
            REQUIRE(ambient_distance(flow(z), z) <= 1e-15);
        }
    }

    SECTION("equal weights generate the Reeb flow") {
        const InvariantHamiltonian round({1.0, 1.0});
        const double t = 0.77;
        const ContactMap flow = invariant_flow(round, t);
        for (const auto& z : sample_sphere(2, 20, 5)) {
            const CVector expected = std::polar(1.0, t) * z.coords();
            REQUIRE((flow(z).coords() - expected).norm() <= 1e-14);
        }
    }

    SECTION("weights (1,2) at t = pi flip the first coordinate") {
        const ContactMap flow = invariant_flow(h, std::numbers::pi);
        for (const auto& z : sample_sphere(2, 20, 7)) {
            REQUIRE_THAT(std::abs(flow(z)[0] + z[0]), WithinAbs(0.0, 1e-13));
            REQUIRE_THAT(std::abs(flow(z)[1] - z[1]), WithinAbs(0.0, 1e-13));
        }
    }

    SECTION("flows preserve the contact form exactly") {
        for (double t : {0.1, 1.0, std::numbers::pi}) {
            const ContactMap flow = invariant_flow(h, t);
            for (const auto& z : sample_sphere(2, 100, 11)) {
                REQUIRE(verify_contact(flow, z) <= 1e-12);
                REQUIRE(std::abs(scaling_factor_direct(flow, z)) <= 1e-13);
            }
        }
    }

    SECTION("H is constant on Reeb orbits") {
        std::mt19937_64 rng(13);
        std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
        for (const auto& z : sample_sphere(2, 50, 17)) {
            const SpherePoint rotated(std::polar(1.0, angle(rng)) * z.coords());
            REQUIRE_THAT(h.value(rotated), WithinAbs(h.value(z), 1e-14));
        }
    }
}

TEST_CASE("critical points of invariant hamiltonians are translated points") {
    const InvariantHamiltonian h({1.0, 2.0});
    const std::vector<double> times{0.1, 1.0, std::numbers::pi};

    SECTION("single-coordinate points are translated for all times") {
        const SpherePoint e1 = make_point({1.0, 0.0});
        for (double t : times) {
            REQUIRE_THAT(defect(invariant_flow(h, t), e1).total, WithinAbs(0.0, 1e-14));
        }
        const CriticalPointReport report = critical_points_are_translated(h, times, 1e-10);
        REQUIRE(report.all_translated);
        REQUIRE(report.max_defect <= 1e-10);
        REQUIRE(report.strata == 2);
    }

    SECTION("a non-critical probe is far from translated") {
        const double s = 1.0 / std::sqrt(2.0);
        const DefectValue probe = defect(invariant_flow(h, 1.0), make_point({s, s}));
        REQUIRE(probe.total >= 1e-2);
    }

    SECTION("away from the critical circles the defect has a positive floor") {
        const ContactMap flow = invariant_flow(h, 1.0);
        for (const auto& z : sample_sphere(2, 500, 23)) {
            if (std::abs(z[0]) < 0.3 || std::abs(z[1]) < 0.3) continue;
            REQUIRE(defect(flow, z).total > 1e-4);
        }
    }

    SECTION("equal weights make every point critical and translated") {
        const InvariantHamiltonian degenerate({3.0, 3.0});
        const CriticalPointReport report =
            critical_points_are_translated(degenerate, times, 1e-10);
        REQUIRE(report.all_translated);
        REQUIRE(report.strata == 1);
    }
}
