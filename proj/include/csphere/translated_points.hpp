#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "csphere/contact_map.hpp"
#include "csphere/kdtree.hpp"
#include "csphere/parallel.hpp"
#include "csphere/sphere.hpp"

namespace csphere {

/// Residuals of the two defining conditions of a translated point: g(z) = 0
/// and φ(z) on the Reeb orbit through z. total = g² + d_FS² vanishes exactly
/// at translated points.
struct DefectValue {
    double g_component;
    double fiber_component;
    double total;
};

inline DefectValue defect(const ContactMap& phi, const SpherePoint& z) {
    double g;
    std::optional<SpherePoint> image;
    if (auto iter = std::dynamic_pointer_cast<const detail::IterateImpl>(phi.impl())) {
        // one orbit walk serves both the cocycle sum and the image point
        g = 0.0;
        SpherePoint orbit = z;
        const auto& base = iter->base();
        for (int j = 0; j < iter->count(); ++j) {
            g += base->scaling(orbit);
            orbit = SpherePoint(base->ambient(orbit.coords()));
        }
        image = orbit;
    } else {
        g = phi.scaling(z);
        image = phi(z);
    }
    const double fiber = fiber_distance(z, *image);
    return DefectValue{g, fiber, g * g + fiber * fiber};
}

// --- zero-set extraction ----------------------------------------------------

/// Point-cloud approximation of Σ_n = {g_n = 0} with per-point residuals.
struct ZeroSetSample {
    std::vector<SpherePoint> points;
    std::vector<double> residuals;
    int iterate_index = 0;
    /// g_n vanished identically on the sample (e.g. unitary maps); nothing to
    /// extract and no sign change can exist.
    bool degenerate = false;
    /// no roots found; possible under-sampling
    bool undersampled = false;
    /// every residual met the requested tolerance. Large iterates hit the
    /// double-precision floor: near Σ_n the gradient of g_n grows like
    /// (1/a)^{n/2}, so the best representable |g_n| grows with n. Roots are
    /// then bisected to bracket collapse and reported with their achieved
    /// residual.
    bool tol_met = true;
    double max_residual = 0.0;
};

struct ZeroSetOptions {
    double residual_tol = 1e-10;
    int neighbors = 8;
    /// phase-2 trigger: fall back to ray casting when nearest-neighbour arcs
    /// found fewer roots than this
    int min_arc_roots = 24;
    int rays = 192;
    double degenerate_tol = 1e-12;
    /// arc endpoints need |g_n| above this to count as a sign change (filters
    /// rounding noise around an identically-zero scaling factor)
    double sign_eps = 1e-13;
    unsigned threads = 0;
};

namespace detail {

struct BisectResult {
    SpherePoint point;
    double residual;
    bool tol_met;
};

/// Bisection of g along a one-parameter family with a sign change; stops at
/// |g| <= tol or when the parameter bracket collapses to adjacent doubles.
template <typename Eval>
BisectResult bisect_sign_change(const Eval& value_at, double lo, double hi, double f_lo,
                                double tol) {
    const bool positive_at_lo = f_lo > 0.0;
    SpherePoint best = value_at(lo).first;
    double best_abs = std::abs(f_lo);
    for (int it = 0; it < 220; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        auto [point, f_mid] = value_at(mid);
        if (std::abs(f_mid) < best_abs) {
            best_abs = std::abs(f_mid);
            best = point;
        }
        if (best_abs <= tol) break;
        if ((f_mid > 0.0) == positive_at_lo) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return BisectResult{best, best_abs, best_abs <= tol};
}

/// Locates the repelling fixed point of a north-south map by running the
/// inverse map to convergence from a seed point. Returns nothing when the
/// map has no usable inverse or the iteration does not settle.
inline std::optional<SpherePoint> repelling_center(const ContactMap& phi,
                                                   const SpherePoint& start) {
    std::optional<ContactMap> inverse;
    try {
        inverse = phi.inverse();
    } catch (const std::exception&) {
        return std::nullopt;
    }
    SpherePoint current = start;
    for (int step = 0; step < 400; ++step) {
        SpherePoint next = (*inverse)(current);
        const double moved = ambient_distance(next, current);
        current = next;
        if (moved < 1e-15) return current;
    }
    return std::nullopt;
}

/// Tangent direction with the Reeb component removed: a direction inside the
/// contact hyperplane at z. Σ_n is exponentially thinner along the Reeb line
/// than along the contact plane, so rays need both kinds to sample its full
/// extent.
inline CVector contact_plane_direction(const SpherePoint& z, std::mt19937_64& rng) {
    const RVector reeb = realify((Complex(0, 1) * z.coords()).eval());
    for (;;) {
        RVector d = realify(random_tangent_direction(z, rng));
        d -= d.dot(reeb) * reeb;
        const double norm = d.norm();
        if (norm > 1e-8) return unrealify((d / norm).eval());
    }
}

}  // namespace detail

/// Samples Σ_n = {z : g_n(z) = 0} for the n-th iterate of φ. First pass is
/// sign-change bisection along great-circle arcs between nearest-neighbour
/// grid pairs; when the zero set has contracted below the grid resolution
/// (it shrinks exponentially toward the repelling point for north-south
/// maps), a second pass casts geodesic rays from the repelling fixed point,
/// located by inverse iteration from the grid's g_n-argmax.
inline ZeroSetSample extract_zero_set(const ContactMap& phi, int n_iter, int grid,
                                      std::uint64_t seed, const ZeroSetOptions& opts = {}) {
    if (n_iter < 1) throw std::invalid_argument("extract_zero_set: iterate index must be >= 1");
    if (grid < 2) throw std::invalid_argument("extract_zero_set: need at least 2 grid points");

    ZeroSetSample sample;
    sample.iterate_index = n_iter;

    const auto points = sample_sphere(phi.dim(), grid, seed);
    std::vector<double> values(points.size());
    parallel_for(
        points.size(), [&](std::size_t i) { values[i] = cocycle_scaling(phi, n_iter, points[i]); },
        opts.threads);

    std::size_t argmax = 0;
    double max_abs = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        max_abs = std::max(max_abs, std::abs(values[i]));
        if (values[i] > values[argmax]) argmax = i;
    }
    if (max_abs <= opts.degenerate_tol) {
        sample.degenerate = true;
        sample.undersampled = true;
        return sample;
    }

    auto g_n = [&](const SpherePoint& z) { return cocycle_scaling(phi, n_iter, z); };

    // phase 1: nearest-neighbour arcs
    std::vector<RVector> coords;
    coords.reserve(points.size());
    for (const auto& z : points) coords.push_back(realify(z.coords()));
    KdTree tree(std::move(coords));

    std::vector<std::pair<int, int>> arcs;
    {
        std::unordered_set<std::uint64_t> seen;
        for (int i = 0; i < static_cast<int>(points.size()); ++i) {
            for (int j : tree.knn(tree.points()[i], opts.neighbors, i)) {
                const int a = std::min(i, j), b = std::max(i, j);
                if (!seen.insert((static_cast<std::uint64_t>(a) << 32) | b).second) continue;
                if (values[a] * values[b] < 0.0 && std::abs(values[a]) > opts.sign_eps &&
                    std::abs(values[b]) > opts.sign_eps) {
                    arcs.emplace_back(a, b);
                }
            }
        }
    }

    std::vector<detail::BisectResult> roots(arcs.size(),
                                            detail::BisectResult{points[0], 0.0, false});
    parallel_for(
        arcs.size(),
        [&](std::size_t k) {
            const auto [a, b] = arcs[k];
            auto eval = [&](double t) {
                SpherePoint z = slerp(points[a], points[b], t);
                return std::make_pair(z, g_n(z));
            };
            roots[k] = detail::bisect_sign_change(eval, 0.0, 1.0, values[a], opts.residual_tol);
        },
        opts.threads);

    for (const auto& r : roots) {
        sample.points.push_back(r.point);
        sample.residuals.push_back(r.residual);
        sample.tol_met = sample.tol_met && r.tol_met;
    }

    // phase 2: rays from the repelling center
    if (static_cast<int>(sample.points.size()) < opts.min_arc_roots) {
        auto center = detail::repelling_center(phi, points[argmax]);
        if (center && g_n(*center) > 0.0) {
            std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
            std::vector<CVector> directions;
            directions.reserve(opts.rays);
            for (int r = 0; r < opts.rays; ++r) {
                directions.push_back(r % 2 == 0 ? random_tangent_direction(*center, rng)
                                                : detail::contact_plane_direction(*center, rng));
            }
            const double g_center = g_n(*center);
            std::vector<std::optional<detail::BisectResult>> ray_roots(directions.size());
            parallel_for(
                directions.size(),
                [&](std::size_t r) {
                    auto eval = [&](double t) {
                        SpherePoint z = geodesic_step(*center, directions[r], t);
                        return std::make_pair(z, g_n(z));
                    };
                    double t_hi = 0.0;
                    for (double probe : {1.5, 2.0, 2.5, 3.0}) {
                        if (eval(probe).second < 0.0) {
                            t_hi = probe;
                            break;
                        }
                    }
                    if (t_hi == 0.0) return;  // ray never leaves the positive region
                    ray_roots[r] = detail::bisect_sign_change(eval, 0.0, t_hi, g_center,
                                                              opts.residual_tol);
                },
                opts.threads);
            for (const auto& r : ray_roots) {
                if (!r) continue;
                sample.points.push_back(r->point);
                sample.residuals.push_back(r->residual);
                sample.tol_met = sample.tol_met && r->tol_met;
            }
        }
    }

    for (double r : sample.residuals) sample.max_residual = std::max(sample.max_residual, r);
    sample.undersampled = sample.points.empty();
    return sample;
}

// --- localization decay -----------------------------------------------------

/// One row of the localization table: how far the sampled Σ_n strays from
/// the repelling point and how far its forward image strays from the
/// attracting point.
struct DecayRow {
    int n;
    double sup_dist_to_p;
    double sup_image_dist_to_q;
    int sample_size;
    double max_residual;
    bool flagged;  // empty zero-set sample; distances not fabricated
};

struct DecayReport {
    std::vector<DecayRow> rows;
};

/// Validates that psi has north-south behaviour for (p, q): expanding at p,
/// contracting at q, and a sampled attraction check on a small ball at q.
inline void require_north_south(const ContactMap& psi, const SpherePoint& p,
                                const SpherePoint& q, std::uint64_t seed) {
    if (!(scaling_factor(psi, p) > 0.0)) {
        throw std::invalid_argument("decay_table: scaling factor at p is not positive");
    }
    if (!(scaling_factor(psi, q) < 0.0)) {
        throw std::invalid_argument("decay_table: scaling factor at q is not negative");
    }
    const double ball = 0.1;
    for (const auto& z : sample_cap(q, ball, 32, seed ^ 0x5bf03635ULL)) {
        if (ambient_distance(psi(z), q) > ball) {
            throw std::invalid_argument("decay_table: ball around q is not mapped into itself");
        }
    }
    if (ambient_distance(psi(p), p) > 1e-9 || ambient_distance(psi(q), q) > 1e-9) {
        throw std::invalid_argument("decay_table: p, q are not fixed points");
    }
}

/// Sampled sup distances for one extracted Σ_n; empty samples give a flagged
/// row with NaN distances rather than fabricated values.
inline DecayRow decay_row(const ContactMap& psi, const SpherePoint& p, const SpherePoint& q,
                          const ZeroSetSample& sample, unsigned threads = 0) {
    DecayRow row{sample.iterate_index, 0.0, 0.0, static_cast<int>(sample.points.size()),
                 sample.max_residual, sample.points.empty()};
    if (row.flagged) {
        row.sup_dist_to_p = std::numeric_limits<double>::quiet_NaN();
        row.sup_image_dist_to_q = std::numeric_limits<double>::quiet_NaN();
        return row;
    }
    std::vector<double> dist_p(sample.points.size());
    std::vector<double> dist_q(sample.points.size());
    parallel_for(
        sample.points.size(),
        [&](std::size_t i) {
            dist_p[i] = ambient_distance(sample.points[i], p);
            SpherePoint w = sample.points[i];
            for (int j = 0; j < sample.iterate_index; ++j) w = psi(w);
            dist_q[i] = ambient_distance(w, q);
        },
        threads);
    row.sup_dist_to_p = *std::max_element(dist_p.begin(), dist_p.end());
    row.sup_image_dist_to_q = *std::max_element(dist_q.begin(), dist_q.end());
    return row;
}

/// Measures the localization behind the no-translated-points argument: the
/// sampled sup of dist(Σ_n, p) and dist(ψ_n(Σ_n), q) along a schedule of
/// iterate counts. Rows with an empty sample are flagged rather than filled.
inline DecayReport decay_table(const ContactMap& psi, const SpherePoint& p, const SpherePoint& q,
                               const std::vector<int>& n_list, int grid, std::uint64_t seed,
                               const ZeroSetOptions& opts = {}) {
    require_north_south(psi, p, q, seed);
    DecayReport report;
    for (int n : n_list) {
        ZeroSetSample sample = extract_zero_set(psi, n, grid, seed, opts);
        report.rows.push_back(decay_row(psi, p, q, sample, opts.threads));
    }
    return report;
}

// --- multistart defect search -------------------------------------------

/// Result of the global translated-point search.
struct DefectReport {
    double min_total;
    SpherePoint argmin;
    double g_component;
    double fiber_component;
    int starts;
    double refinement_tolerance;
    int grid_size;
    /// set by the pipeline when the separation certificate also holds
    bool certified = false;
    /// every simplex refinement reached the diameter tolerance
    bool converged = true;
};

struct SearchOptions {
    double initial_step = 0.05;
    int max_iterations = 4000;
    unsigned threads = 0;
};

namespace detail {

struct LocalMinimum {
    double value;
    SpherePoint point;
    bool converged;
};

/// Nelder-Mead on the sphere through a fixed tangent chart at the start
/// point: chart coordinates x ∈ ℝ^{2n-1} map to normalize(z₀ + Σ xᵢ bᵢ),
/// re-projecting every trial point onto the sphere. Runs until the simplex
/// diameter falls below `tol`; the best point ever evaluated is returned, so
/// refinement never reports worse than its starting value.
template <typename F>
LocalMinimum nelder_mead_sphere(const F& objective, const SpherePoint& start, double step,
                                double tol, int max_iter) {
    const int m = 2 * start.dim() - 1;
    const auto basis = tangent_basis(start);
    const CVector origin = start.coords();

    auto to_point = [&](const RVector& x) {
        CVector u = origin;
        for (int i = 0; i < m; ++i) u += x(i) * basis[i].vec();
        return SpherePoint(std::move(u));
    };

    std::vector<RVector> xs(m + 1, RVector::Zero(m));
    std::vector<double> fs(m + 1);
    LocalMinimum best{std::numeric_limits<double>::infinity(), start, false};
    auto eval = [&](const RVector& x) {
        SpherePoint z = to_point(x);
        const double f = objective(z);
        if (f < best.value) {
            best.value = f;
            best.point = z;
        }
        return f;
    };

    for (int i = 0; i <= m; ++i) {
        if (i > 0) xs[i](i - 1) = step;
        fs[i] = eval(xs[i]);
    }

    auto order = [&]() {
        std::vector<int> idx(m + 1);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](int a, int b) {
            return fs[a] != fs[b] ? fs[a] < fs[b] : a < b;
        });
        std::vector<RVector> nxs(m + 1);
        std::vector<double> nfs(m + 1);
        for (int i = 0; i <= m; ++i) {
            nxs[i] = xs[idx[i]];
            nfs[i] = fs[idx[i]];
        }
        xs.swap(nxs);
        fs.swap(nfs);
    };

    for (int it = 0; it < max_iter; ++it) {
        order();
        double diameter = 0.0;
        for (int i = 1; i <= m; ++i) diameter = std::max(diameter, (xs[i] - xs[0]).norm());
        if (diameter <= tol) {
            best.converged = true;
            return best;
        }

        RVector centroid = RVector::Zero(m);
        for (int i = 0; i < m; ++i) centroid += xs[i];
        centroid /= m;

        const RVector reflected = centroid + (centroid - xs[m]);
        const double f_r = eval(reflected);
        if (f_r < fs[0]) {
            const RVector expanded = centroid + 2.0 * (centroid - xs[m]);
            const double f_e = eval(expanded);
            if (f_e < f_r) {
                xs[m] = expanded;
                fs[m] = f_e;
            } else {
                xs[m] = reflected;
                fs[m] = f_r;
            }
        } else if (f_r < fs[m - 1]) {
            xs[m] = reflected;
            fs[m] = f_r;
        } else {
            const RVector contracted =
                f_r < fs[m] ? centroid + 0.5 * (reflected - centroid)
                            : centroid + 0.5 * (xs[m] - centroid);
            const double f_c = eval(contracted);
            if (f_c < std::min(f_r, fs[m])) {
                xs[m] = contracted;
                fs[m] = f_c;
            } else {
                for (int i = 1; i <= m; ++i) {
                    xs[i] = xs[0] + 0.5 * (xs[i] - xs[0]);
                    fs[i] = eval(xs[i]);
                }
            }
        }
    }
    return best;
}

}  // namespace detail

/// Multistart search for translated points: evaluates the defect on a grid,
/// refines from the `starts` lowest values with derivative-free simplex
/// descent in local tangent charts, and returns the overall minimum.
inline DefectReport search_translated(const ContactMap& phi, int starts, int grid,
                                      std::uint64_t seed, double tol,
                                      const SearchOptions& opts = {}) {
    if (starts < 1) throw std::invalid_argument("search_translated: starts must be >= 1");
    if (grid < starts) throw std::invalid_argument("search_translated: grid smaller than starts");

    const auto points = sample_sphere(phi.dim(), grid, seed);
    std::vector<double> values(points.size());
    parallel_for(
        points.size(), [&](std::size_t i) { values[i] = defect(phi, points[i]).total; },
        opts.threads);

    std::vector<int> idx(points.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + starts, idx.end(), [&](int a, int b) {
        return values[a] != values[b] ? values[a] < values[b] : a < b;
    });

    std::vector<detail::LocalMinimum> minima(
        starts, detail::LocalMinimum{std::numeric_limits<double>::infinity(), points[0], false});
    auto objective = [&](const SpherePoint& z) { return defect(phi, z).total; };
    parallel_for(
        static_cast<std::size_t>(starts),
        [&](std::size_t s) {
            minima[s] = detail::nelder_mead_sphere(objective, points[idx[s]], opts.initial_step,
                                                   tol, opts.max_iterations);
        },
        opts.threads);

    int best = 0;
    bool all_converged = true;
    for (int s = 0; s < starts; ++s) {
        all_converged = all_converged && minima[s].converged;
        if (minima[s].value < minima[best].value) best = s;
    }

    const DefectValue d = defect(phi, minima[best].point);
    return DefectReport{d.total,
                        minima[best].point,
                        d.g_component,
                        d.fiber_component,
                        starts,
                        tol,
                        grid,
                        false,
                        all_converged};
}

// --- separation certificate ---------------------------------------------

/// Sampled evidence that no Reeb orbit joins Σ_n to ψ_n(Σ_n):
///   (1) g_n has no sign change outside B(p, r_p), so the sampled Σ_n is
///       contained in the ball; the margin is min |g_n| there,
///   (2) ψ_n maps sampled points of B(p, r_p) into B(q, r_q),
///   (3) every Hopf fiber through B(p, r_p) stays fiber-distance-separated
///       from B(q, r_q), with the bound d_FS(p,q) − Lip·(r_p + r_q) from an
///       empirically estimated local Lipschitz constant of d_FS.
struct SeparationReport {
    bool certified;
    bool zero_set_localized;
    bool image_localized;
    bool fibers_separated;
    double scaling_margin;     // min |g_n| outside B(p, r_p)
    double image_margin;       // r_q − max dist(ψ_n(ball sample), q)
    double fiber_margin;       // d_FS(p,q) − Lip (r_p + r_q)
    double sampled_fiber_inf;  // inf over sampled pairs of d_FS
    double lipschitz;          // empirical Lipschitz bound (validated vs analytic cap)
    std::string failed;        // first failing condition, empty when certified
};

inline SeparationReport separation_certificate(const ContactMap& psi, int n,
                                               const SpherePoint& p, const SpherePoint& q,
                                               double r_p, double r_q, int grid,
                                               std::uint64_t seed,
                                               const ZeroSetOptions& opts = {}) {
    if (r_p < 0.0 || r_q < 0.0) {
        throw std::invalid_argument("separation_certificate: radii must be nonnegative");
    }
    SeparationReport report{};
    report.certified = false;

    // (1) sign pattern of g_n outside B(p, r_p)
    const auto points = sample_sphere(psi.dim(), grid, seed);
    std::vector<double> values(points.size());
    parallel_for(
        points.size(), [&](std::size_t i) { values[i] = cocycle_scaling(psi, n, points[i]); },
        opts.threads);
    bool has_positive = false, has_negative = false;
    double min_abs = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (ambient_distance(points[i], p) <= r_p) continue;
        has_positive = has_positive || values[i] > 0.0;
        has_negative = has_negative || values[i] < 0.0;
        min_abs = std::min(min_abs, std::abs(values[i]));
    }
    report.scaling_margin = min_abs;
    report.zero_set_localized = !(has_positive && has_negative) && min_abs > 0.0;

    // (2) forward image of the sampled ball
    const int ball_count = std::max(64, grid / 20);
    const auto ball = sample_cap(p, r_p, ball_count, seed ^ 0xb5297a4dULL);
    std::vector<double> image_dist(ball.size());
    parallel_for(
        ball.size(),
        [&](std::size_t i) {
            SpherePoint w = ball[i];
            for (int j = 0; j < n; ++j) w = psi(w);
            image_dist[i] = ambient_distance(w, q);
        },
        opts.threads);
    const double worst_image = *std::max_element(image_dist.begin(), image_dist.end());
    report.image_margin = r_q - worst_image;
    report.image_localized = worst_image <= r_q;

    // (3) fiber-distance margin between the two balls
    const double base = fiber_distance(p, q);
    const double cos_pq = std::abs(hermitian_inner(p.coords(), q.coords()));
    const double lip_cap = (M_PI / 2.0) / std::sqrt(std::max(1e-12, 1.0 - cos_pq * cos_pq));
    const auto ball_q = sample_cap(q, r_q, ball_count, seed ^ 0x68e31da4ULL);
    double lip = 0.0;
    double sampled_inf = base;
    for (std::size_t i = 0; i < ball.size(); ++i) {
        const auto& w = ball[i];
        const auto& wq = ball_q[i % ball_q.size()];
        const double d = fiber_distance(w, wq);
        sampled_inf = std::min(sampled_inf, d);
        const double denom = ambient_distance(w, p) + ambient_distance(wq, q);
        if (denom > 1e-9) lip = std::max(lip, std::abs(d - base) / denom);
    }
    if (lip > lip_cap) {
        report.lipschitz = lip;
        report.fibers_separated = false;
        report.failed = "lipschitz estimate exceeds analytic cap";
        report.fiber_margin = 0.0;
        report.sampled_fiber_inf = sampled_inf;
        return report;
    }
    report.lipschitz = lip;
    report.fiber_margin = base - lip * (r_p + r_q);
    report.sampled_fiber_inf = sampled_inf;
    report.fibers_separated = report.fiber_margin > 0.0 && sampled_inf >= report.fiber_margin;

    if (!report.zero_set_localized) {
        report.failed = "zero set not localized in B(p, r_p)";
    } else if (!report.image_localized) {
        report.failed = "image of B(p, r_p) not contained in B(q, r_q)";
    } else if (!report.fibers_separated) {
        report.failed = "fiber-distance margin not established";
    } else {
        report.certified = true;
    }
    return report;
}

}  // namespace csphere
