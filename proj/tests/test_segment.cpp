#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "ictm/segment.hpp"
#include "ictm/solver.hpp"
#include "ictm/synthetic.hpp"
#include "ictm/verify.hpp"
#include "oracles.hpp"

using namespace ictm;
using Catch::Approx;

namespace {

Image random_image(std::size_t w, std::size_t h, std::size_t channels, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<double> v(w * h * channels);
    for (double& x : v) x = dist(rng);
    return Image(w, h, channels, std::move(v));
}

IndicatorField random_labels(std::size_t n, std::size_t p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint32_t> dist(0, static_cast<std::uint32_t>(n - 1));
    std::vector<std::uint32_t> labels(p);
    for (auto& l : labels) l = dist(rng);
    return IndicatorField(n, labels);
}

PhaseField random_relaxed(std::size_t n, std::size_t p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return detail::random_relaxed(n, p, rng);
}

// Golden-section minimization of a convex scalar function on [lo, hi].
template <class F>
double golden_section(F f, double lo, double hi) {
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    for (int k = 0; k < 200; ++k) {
        const double c = b - r * (b - a), d = a + r * (b - a);
        if (f(c) < f(d)) b = d; else a = c;
    }
    return 0.5 * (a + b);
}

// Termwise evaluation with a dense kernel matrix.
double dense_perimeter(const Grid& grid, double tau, const PhaseField& u) {
    const auto k = ictm_test::dense_kernel_matrix(grid, tau);
    const std::size_t p = u.points();
    double s = 0.0;
    for (std::size_t i = 0; i < u.phases(); ++i) {
        for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t b = 0; b < p; ++b) s += u(i, a) * k[a * p + b] * (1.0 - u(i, b));
        }
    }
    return std::sqrt(std::numbers::pi / tau) * grid.cell_volume() * s;
}

}  // namespace

TEST_CASE("image stores planar clamped channels") {
    const Image img(4, 5, 3, std::vector<double>(60, 1.5));
    CHECK(img.pixels() == 20);
    CHECK(img(2, 19) == 1.0);
    CHECK(img.grid().sizes() == std::vector<std::size_t>{5, 4});
    CHECK(img.grid().cell_volume() == 1.0);
    CHECK_THROWS_AS(Image(4, 4, 2), ConfigError);
    CHECK_THROWS_AS(Image(4, 4, 1, std::vector<double>(15)), ConfigError);
}

TEST_CASE("CV parameter update") {
    SECTION("pure regions give their intensities") {
        const auto mask = synthetic::two_shape_mask(16, 16);
        const Image img = synthetic::two_tone(mask, 16, 16, 0.0, 1.0);
        std::vector<std::uint32_t> labels(mask.begin(), mask.end());
        const auto theta = cv_theta_update(IndicatorField(2, labels), img, {0.5, 0.5});
        CHECK(theta[0] == 0.0);
        CHECK(theta[1] == 1.0);
    }
    SECTION("single occupied phase") {
        const Image img = random_image(8, 8, 1, 2);
        double mean = 0.0;
        for (double v : img.values()) mean += v;
        mean /= 64.0;
        const auto theta = cv_theta_update(IndicatorField(2, 64, 0), img, {0.1, 0.9});
        CHECK(theta[0] == Approx(mean).epsilon(1e-14));
        CHECK(theta[1] == 0.9);
    }
    SECTION("means minimize each phase's fidelity") {
        const Image img = random_image(4, 4, 3, 3);
        const auto u = random_labels(3, 16, 4);
        const auto theta = cv_theta_update(u, img, ParameterState(9, 0.0));
        for (std::size_t i = 0; i < 3; ++i) {
            if (u.count(i) == 0) continue;
            for (std::size_t c = 0; c < 3; ++c) {
                auto fidelity = [&](double t) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < 16; ++j) s += u(i, j) * (t - img(c, j)) * (t - img(c, j));
                    return s;
                };
                CHECK(theta[i * 3 + c] == Approx(golden_section(fidelity, -1.0, 2.0)).margin(1e-7));
                CHECK(fidelity(theta[i * 3 + c] + 1e-3) > fidelity(theta[i * 3 + c]));
                CHECK(fidelity(theta[i * 3 + c] - 1e-3) > fidelity(theta[i * 3 + c]));
            }
        }
    }
    SECTION("initial parameters") {
        const Image img(8, 8, 1, 0.4);
        const auto theta = cv_initial_theta(img, 4);
        CHECK(theta == ParameterState{0.4, 0.65, 0.9, 1.15});
    }
}

TEST_CASE("CV threshold field") {
    const std::size_t w = 16;
    SECTION("lambda = 0 is nearest-mean classification") {
        const Image img = random_image(w, w, 1, 5);
        const ChanVeseProblem problem(img, 3, 0.0, 1.0);
        const ParameterState theta{0.1, 0.5, 0.9};
        const auto next = u_update_threshold(problem, random_labels(3, w * w, 6), theta);
        for (std::size_t j = 0; j < w * w; ++j) {
            std::uint32_t best = 0;
            for (std::uint32_t i = 1; i < 3; ++i) {
                if (std::abs(theta[i] - img(0, j)) < std::abs(theta[best] - img(0, j))) best = i;
            }
            CHECK(next.label(j) == best);
        }
    }
    SECTION("equal means: isolated pixels join their surroundings") {
        const Image img(w, w, 1, 0.5);
        const ChanVeseProblem problem(img, 2, 0.03, 1.0);
        IndicatorField u(2, w * w, 0);
        for (std::size_t r = 0; r < w; ++r) {
            for (std::size_t c = w / 2; c < w; ++c) u.set_label(r * w + c, 1);
        }
        IndicatorField islands = u;
        islands.set_label(3 * w + 3, 1);
        islands.set_label(12 * w + 12, 0);
        const auto next = u_update_threshold(problem, islands, {0.5, 0.5});
        CHECK(next.label(3 * w + 3) == 0);
        CHECK(next.label(12 * w + 12) == 1);
        // Straight interfaces of a periodic half split are fixed.
        CHECK(u_update_threshold(problem, u, {0.5, 0.5}) == u);
    }
    SECTION("field is the derivative of the energy") {
        const Image img = random_image(6, 5, 3, 7);
        const double lambda = 0.2;
        const auto kernel = build_kernel(img.grid(), 0.8);
        const PhaseField u = random_relaxed(3, 30, 8);
        const ParameterState theta{0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.1, 0.9, 0.5};
        const auto field = cv_threshold_field(u, theta, img, lambda, kernel);
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 30; j += 4) {
                PhaseField up = u, down = u;
                up(i, j) += 1e-5;
                down(i, j) -= 1e-5;
                const double fd =
                    (cv_energy(up, theta, img, lambda, kernel) - cv_energy(down, theta, img, lambda, kernel)) / 2e-5;
                CHECK(field(i, j) == Approx(fd).epsilon(1e-6).margin(1e-8));
            }
        }
    }
}

TEST_CASE("CV energy") {
    SECTION("exact piecewise-constant fit with lambda = 0") {
        const auto mask = synthetic::two_shape_mask(12, 10);
        const Image img = synthetic::two_tone(mask, 12, 10, 0.25, 0.75);
        const auto kernel = build_kernel(img.grid(), 1.0);
        std::vector<std::uint32_t> labels(mask.begin(), mask.end());
        CHECK(cv_energy(IndicatorField(2, labels), {0.25, 0.75}, img, 0.0, kernel) == 0.0);
    }
    SECTION("shift invariance") {
        const Image img(8, 8, 1, std::vector<double>(64, 0.3));
        const Image shifted(8, 8, 1, std::vector<double>(64, 0.5));
        const auto kernel = build_kernel(img.grid(), 1.0);
        const auto u = random_labels(2, 64, 9);
        CHECK(cv_energy(u, {0.1, 0.6}, img, 0.05, kernel) ==
              Approx(cv_energy(u, {0.3, 0.8}, shifted, 0.05, kernel)).epsilon(1e-13));
    }
    SECTION("dense termwise oracle on 4 x 4") {
        const Image img = random_image(4, 4, 1, 10);
        const double tau = 0.7, lambda = 0.3;
        const auto kernel = build_kernel(img.grid(), tau);
        const auto u = random_labels(2, 16, 11).dense();
        const ParameterState theta{0.3, 0.65};
        double fidelity = 0.0;
        for (std::size_t i = 0; i < 2; ++i) {
            for (std::size_t j = 0; j < 16; ++j) fidelity += u(i, j) * (theta[i] - img(0, j)) * (theta[i] - img(0, j));
        }
        const double expected = fidelity + lambda * dense_perimeter(img.grid(), tau, u);
        CHECK(cv_energy(u, theta, img, lambda, kernel) == Approx(expected).epsilon(1e-12));
    }
    SECTION("channel additivity") {
        const Image rgb = random_image(8, 6, 3, 12);
        const auto kernel = build_kernel(rgb.grid(), 1.0);
        const auto u = random_labels(2, 48, 13);
        const ParameterState theta{0.1, 0.2, 0.3, 0.7, 0.8, 0.9};
        double sum = 0.0;
        for (std::size_t c = 0; c < 3; ++c) {
            std::vector<double> v(rgb.channel(c).begin(), rgb.channel(c).end());
            sum += cv_energy(u, {theta[c], theta[3 + c]}, Image(8, 6, 1, v), 0.0, kernel);
        }
        CHECK(cv_energy(u, theta, rgb, 0.0, kernel) == Approx(sum).epsilon(1e-13));
        const double perimeter = perimeter_estimate(u.dense(), kernel);
        CHECK(cv_energy(u, theta, rgb, 0.1, kernel) == Approx(sum + 0.1 * perimeter).epsilon(1e-13));
    }
}

TEST_CASE("CV parameter gradient matches finite differences") {
    const Image img = random_image(7, 6, 3, 14);
    const ChanVeseProblem problem(img, 2, 0.1, 1.0, ThetaMode::projected_gradient);
    const PhaseField u = random_relaxed(2, 42, 15);
    const ParameterState theta{0.2, 0.4, 0.6, 0.3, 0.5, 0.7};
    const auto g = problem.gradient_theta(u, theta);
    for (std::size_t k = 0; k < theta.size(); ++k) {
        auto up = theta, down = theta;
        up[k] += 1e-5;
        down[k] -= 1e-5;
        const double fd = (problem.energy(u, up) - problem.energy(u, down)) / 2e-5;
        CHECK(std::abs(g[k] - fd) <= 1e-5 * std::max(1.0, std::abs(g[k])));
    }
    CHECK(problem.lipschitz_theta().value() == 84.0);
}

TEST_CASE("CV alternation is monotone with the two-step chain") {
    const std::size_t w = 48;
    const auto mask = synthetic::two_shape_mask(w, w);
    const Image img = synthetic::add_gaussian_noise(synthetic::two_tone(mask, w, w), 0.1, 3);
    const ChanVeseProblem problem(img, 3, 0.03, 1.0);
    SolverConfig config;
    config.max_inner = 1;
    const auto u0 = init_mask({InitRegion::rect(4, 4, 20, 20), InitRegion::rect(26, 26, 18, 18)}, 3, w, w);
    const auto result = run_alternating(problem, u0, problem.initial_theta(), config);
    CHECK(result.converged);
    CHECK(result.trace.monotone(1e-10));
    for (std::size_t k = 1; k < result.trace.records.size(); ++k) {
        const auto& r = result.trace.records[k];
        CHECK(r.phi <= r.phi_half + 1e-10);
        CHECK(r.phi_half <= result.trace.records[k - 1].phi + 1e-10);
    }
}

TEST_CASE("CV relaxation exactness on a 4 x 4 image") {
    const Image img = random_image(4, 4, 1, 16);
    const ChanVeseProblem problem(img, 2, 0.5, 0.5);
    const auto report = relaxation_exactness_check(problem, {0.3, 0.7}, 30, 17);
    CHECK(report.status == CertificateStatus::pass);
}

TEST_CASE("LIF presets") {
    const auto p1 = lif_preset("p1");
    CHECK(p1.tau == 5.0);
    CHECK(p1.lambda == 1.0);
    CHECK(p1.mu == 150.0);
    CHECK(p1.sigma == 3.0);
    CHECK(lif_preset("p2").mu == 245.0);
    CHECK(lif_preset("p3").tau == 10.0);
    CHECK(lif_preset("p4").tau == 2.0);
    CHECK(lif_preset("p5").mu == 50.0);
    CHECK(p1.epsilon == 1e-6);
    CHECK_THROWS_AS(lif_preset("p6"), ConfigError);
}

TEST_CASE("LIF parameter update") {
    const Image constant(8, 8, 1, 0.6);
    const auto ks = build_kernel(constant.grid(), 3.0);
    PhaseField u(2, 64, 0.0);
    for (std::size_t j = 0; j < 64; ++j) u(0, j) = 1.0;
    const auto theta = lif_theta_update(u, constant, ks, 1e-6);
    for (std::size_t j = 0; j < 64; ++j) {
        CHECK(theta[j] == Approx((0.6 + 1e-6) / (1.0 + 1e-6)).epsilon(1e-12));
        CHECK(theta[64 + j] == 1.0);
    }

    // Dense ratio oracle.
    const Image img = random_image(8, 8, 1, 18);
    const double sigma = 1.5;
    const auto k = ictm_test::dense_kernel_matrix(img.grid(), sigma);
    const auto labels = random_labels(2, 64, 19);
    const auto got = lif_theta_update(labels, img, build_kernel(img.grid(), sigma), 1e-6);
    for (std::size_t i = 0; i < 2; ++i) {
        const auto ui = labels.row(i);
        std::vector<double> masked(64);
        for (std::size_t j = 0; j < 64; ++j) masked[j] = ui[j] * img(0, j);
        const auto num = ictm_test::matvec(k, masked);
        const auto den = ictm_test::matvec(k, ui);
        for (std::size_t j = 0; j < 64; ++j) {
            CHECK(got[i * 64 + j] == Approx((num[j] + 1e-6) / (den[j] + 1e-6)).margin(1e-10));
        }
    }
    CHECK_THROWS_AS(lif_theta_update(labels, img, build_kernel(img.grid(), sigma), 0.0), ConfigError);
}

TEST_CASE("LIF threshold field and energy") {
    const Image img = random_image(8, 8, 1, 20);
    const double tau = 2.0, sigma = 1.5, lambda = 0.7, mu = 3.0;
    const auto kt = build_kernel(img.grid(), tau);
    const auto ks = build_kernel(img.grid(), sigma);
    const auto u = random_relaxed(2, 64, 21);
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    ParameterState theta(128);
    for (double& t : theta) t = dist(rng);

    const auto dt = ictm_test::dense_kernel_matrix(img.grid(), tau);
    const auto ds = ictm_test::dense_kernel_matrix(img.grid(), sigma);
    const double c = std::sqrt(std::numbers::pi / tau);

    SECTION("dense oracle for psi") {
        const auto psi = lif_threshold_field(u, theta, img, lambda, mu, kt, ks);
        for (std::size_t i = 0; i < 2; ++i) {
            std::vector<double> sq(64), t(theta.begin() + i * 64, theta.begin() + (i + 1) * 64), w(64);
            for (std::size_t j = 0; j < 64; ++j) {
                sq[j] = t[j] * t[j] + img(0, j) * img(0, j);
                w[j] = 1.0 - 2.0 * u(i, j);
            }
            const auto a = ictm_test::matvec(ds, sq);
            const auto b = ictm_test::matvec(ds, t);
            const auto curv = ictm_test::matvec(dt, w);
            for (std::size_t j = 0; j < 64; ++j) {
                CHECK(psi(i, j) == Approx(mu * (a[j] - 2.0 * img(0, j) * b[j]) + lambda * c * curv[j]).margin(1e-10));
            }
        }
    }
    SECTION("dense oracle for the energy and its u-derivative") {
        double fidelity = 0.0;
        for (std::size_t i = 0; i < 2; ++i) {
            std::vector<double> sq(64), t(theta.begin() + i * 64, theta.begin() + (i + 1) * 64);
            for (std::size_t j = 0; j < 64; ++j) sq[j] = t[j] * t[j] + img(0, j) * img(0, j);
            const auto a = ictm_test::matvec(ds, sq);
            const auto b = ictm_test::matvec(ds, t);
            for (std::size_t j = 0; j < 64; ++j) fidelity += u(i, j) * a[j] - 2.0 * u(i, j) * img(0, j) * b[j];
        }
        const double expected = mu * fidelity + lambda * dense_perimeter(img.grid(), tau, u);
        CHECK(lif_energy(u, theta, img, lambda, mu, kt, ks) == Approx(expected).epsilon(1e-10));

        const auto psi = lif_threshold_field(u, theta, img, lambda, mu, kt, ks);
        for (std::size_t j = 0; j < 64; j += 9) {
            PhaseField up = u, down = u;
            up(1, j) += 1e-5;
            down(1, j) -= 1e-5;
            const double fd = (lif_energy(up, theta, img, lambda, mu, kt, ks) -
                               lif_energy(down, theta, img, lambda, mu, kt, ks)) / 2e-5;
            CHECK(psi(1, j) == Approx(fd).epsilon(1e-6).margin(1e-8));
        }
    }
    SECTION("mu = 0 leaves the perimeter term") {
        CHECK(lif_energy(u, theta, img, lambda, 0.0, kt, ks) == Approx(lambda * perimeter_estimate(u, kt)));
    }
    SECTION("constant image fitted exactly has zero fidelity") {
        const Image flat(8, 8, 1, 0.4);
        const ParameterState same(128, 0.4);
        CHECK(lif_energy(u, same, flat, 0.0, mu, kt, ks) == Approx(0.0).margin(1e-12));
    }
    SECTION("lambda = 0 with constant fits classifies per pixel") {
        std::vector<double> binary(64);
        for (std::size_t j = 0; j < 64; ++j) binary[j] = (j * 7 % 5 < 2) ? 1.0 : 0.0;
        const Image bimg(8, 8, 1, binary);
        ParameterState fits(128, 0.0);
        for (std::size_t j = 0; j < 64; ++j) fits[64 + j] = 1.0;
        const LifProblem problem(bimg, {tau, 0.0, mu, sigma, 1e-6});
        const auto next = u_update_threshold(problem, IndicatorField(2, 64, 0), fits);
        for (std::size_t j = 0; j < 64; ++j) CHECK(next.label(j) == static_cast<std::uint32_t>(binary[j]));
    }
    SECTION("equal fits on a constant image leave only the curvature term") {
        const Image flat(8, 8, 1, 0.4);
        const ParameterState fits(128, 0.7);
        const auto psi = lif_threshold_field(u, fits, flat, lambda, mu, kt, ks);
        const auto curv = lif_threshold_field(u, fits, flat, lambda, 0.0, kt, ks);
        for (std::size_t j = 0; j < 64; ++j) {
            CHECK(psi(0, j) - psi(1, j) == Approx(curv(0, j) - curv(1, j)).margin(1e-10));
        }
    }
}

TEST_CASE("LIF parameter gradient matches finite differences") {
    const Image img = random_image(6, 6, 3, 23);
    const LifProblem problem(img, {2.0, 1.0, 5.0, 1.0, 1e-6});
    const auto u = random_relaxed(2, 36, 24);
    std::mt19937_64 rng(25);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    ParameterState theta(2 * 3 * 36);
    for (double& t : theta) t = dist(rng);
    const auto g = problem.gradient_theta(u, theta);
    for (std::size_t k = 0; k < theta.size(); k += 11) {
        auto up = theta, down = theta;
        up[k] += 1e-5;
        down[k] -= 1e-5;
        const double fd = (problem.energy(u, up) - problem.energy(u, down)) / 2e-5;
        CHECK(std::abs(g[k] - fd) <= 1e-5 * std::max(1.0, std::abs(g[k])));
    }
    // The unregularized update zeroes the gradient where the phase is present.
    const auto labels = random_labels(2, 36, 26);
    const LifProblem sharp(img, {2.0, 1.0, 5.0, 1.0, 1e-300});
    const auto fitted = sharp.solve_theta(labels, {});
    for (double v : sharp.gradient_theta(labels.dense(), fitted)) CHECK(std::abs(v) < 1e-9);
}

TEST_CASE("LIF with a tiny window tracks the image") {
    const auto mask = synthetic::two_shape_mask(24, 24);
    const Image img = synthetic::two_tone(mask, 24, 24, 0.3, 0.7);
    std::vector<std::uint32_t> labels(mask.begin(), mask.end());
    const IndicatorField u(2, labels);
    const auto theta = lif_theta_update(u, img, build_kernel(img.grid(), 0.01), 1e-6);
    for (std::size_t j = 0; j < 576; ++j) {
        CHECK(theta[u.label(j) * 576 + j] == Approx(img(0, j)).epsilon(1e-5));
    }
}

TEST_CASE("LIF alternation is monotone on an inhomogeneous image") {
    const std::size_t w = 64;
    const auto mask = synthetic::two_shape_mask(w, w);
    const LifProblem problem(synthetic::inhomogeneous(mask, w, w), lif_preset("p5"));
    SolverConfig config;
    config.order = UpdateOrder::theta_first;
    config.max_inner = 1;
    config.max_iter = 300;
    const auto u0 = init_mask({InitRegion::rect(16, 16, 32, 32)}, 2, w, w);
    const auto result = run_alternating(problem, u0, problem.solve_theta(u0, {}), config);
    CHECK(result.converged);
    CHECK(result.trace.monotone(1e-10));
}

TEST_CASE("initial masks") {
    const auto full = init_mask({InitRegion::rect(0, 0, 20, 10)}, 2, 20, 10);
    CHECK(full.count(0) == 200);
    CHECK(full.count(1) == 0);

    const auto quarter = init_mask({InitRegion::rect(0, 0, 10, 5)}, 2, 20, 10);
    CHECK(quarter.count(0) == 50);

    const auto three = init_mask({InitRegion::rect(0, 0, 5, 5), InitRegion::rect(10, 5, 5, 5)}, 3, 20, 10);
    CHECK(three.count(0) == 25);
    CHECK(three.count(1) == 25);
    CHECK(three.count(2) == 150);

    const auto overlap = init_mask({InitRegion::rect(0, 0, 10, 10), InitRegion::rect(5, 0, 10, 10)}, 3, 20, 10);
    CHECK(overlap.count(0) == 50);
    CHECK(overlap.count(1) == 100);

    const auto disk = init_mask({InitRegion::disk(10, 5, 3)}, 2, 20, 10);
    CHECK(disk.count(0) == 29);

    CHECK_THROWS_AS(init_mask({InitRegion::rect(0, 0, 0, 5)}, 2, 20, 10), ConfigError);
    CHECK_THROWS_AS(init_mask({InitRegion::rect(15, 0, 10, 5)}, 2, 20, 10), ConfigError);
    CHECK_THROWS_AS(init_mask({InitRegion::disk(1, 1, 3)}, 2, 20, 10), ConfigError);
    CHECK_THROWS_AS(init_mask({InitRegion::rect(0, 0, 2, 2), InitRegion::rect(3, 3, 2, 2)}, 2, 20, 10), ConfigError);
    CHECK_THROWS_AS(init_mask({}, 2, 20, 10), ConfigError);
}
