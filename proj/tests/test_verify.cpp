#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "ictm/dense_problem.hpp"
#include "ictm/enumerate.hpp"
#include "ictm/solver.hpp"
#include "ictm/verify.hpp"

using namespace ictm;

TEST_CASE("enumerate_C visits every assignment once in lexicographic order") {
    CHECK(enumerate_C(2, 2).size() == 4);
    CHECK(enumerate_C(3, 2).size() == 9);

    const auto all = enumerate_C(2, 10);
    CHECK(all.size() == 1024);
    std::set<std::vector<std::uint32_t>> distinct;
    for (const auto& u : all) distinct.insert(u.labels());
    CHECK(distinct.size() == 1024);
    CHECK(std::is_sorted(all.begin(), all.end(),
                         [](const IndicatorField& a, const IndicatorField& b) { return a.labels() < b.labels(); }));

    CHECK_THROWS_AS(enumerate_C(3, 40), CapabilityError);
    CHECK(assignment_count(3, 13).value() == 1594323);
    CHECK_FALSE(assignment_count(3, 14).has_value());
}

TEST_CASE("Hamming balls have the binomial size") {
    const IndicatorField center(3, std::vector<std::uint32_t>{0, 1, 2, 0, 1});
    for (std::size_t r = 0; r <= 5; ++r) {
        std::set<std::vector<std::uint32_t>> seen;
        std::size_t visits = 0;
        for_each_in_ball(center, r, [&](const IndicatorField& v) {
            ++visits;
            seen.insert(v.labels());
            std::size_t moved = 0;
            for (std::size_t j = 0; j < v.points(); ++j) moved += v.label(j) != center.label(j);
            CHECK(moved <= r);
        });
        CHECK(visits == seen.size());
        CHECK(visits == ball_size(3, 5, r).value());
    }
    CHECK(ball_size(3, 5, 5).value() == 243);
}

TEST_CASE("brute-force minimum with a separable linear energy") {
    DenseProblem::Options options;
    options.concave = ConcaveTerm::zero;
    const auto problem = DenseProblem::random(3, 5, 19, options);
    const ParameterState theta{0.2, 0.5, 0.9};
    const auto [u, e] = brute_force_min_u(problem, theta);
    for (std::size_t j = 0; j < 5; ++j) {
        std::uint32_t best = 0;
        for (std::uint32_t i = 1; i < 3; ++i) {
            if (problem.f(i, j, theta) < problem.f(best, j, theta)) best = i;
        }
        CHECK(u.label(j) == best);
    }
    CHECK(e == Catch::Approx(energy(problem, u, theta)));
}

TEST_CASE("brute-force minimum lower-bounds random assignments") {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<std::uint32_t> label(0, 1);
    const auto problem = DenseProblem::random(2, 4, 23);
    const ParameterState theta{0.4, 0.6};
    const double best = brute_force_min_u(problem, theta).second;
    for (int k = 0; k < 10; ++k) {
        std::vector<std::uint32_t> labels(4);
        for (auto& l : labels) l = label(rng);
        CHECK(best <= energy(problem, IndicatorField(2, labels), theta));
    }
}

TEST_CASE("iterated thresholding from every start reaches the global minimum when the fixed point is unique") {
    int compared = 0;
    for (std::uint64_t seed = 0; seed < 40 && compared < 10; ++seed) {
        DenseProblem::Options options;
        options.gamma = 0.02;
        const auto problem = DenseProblem::random(2, 5, 2000 + seed, options);
        const ParameterState theta{0.3, 0.7};
        std::set<std::vector<std::uint32_t>> fixed_points;
        for (const auto& start : enumerate_C(2, 5)) {
            IndicatorField u = start;
            for (;;) {
                IndicatorField next = u_update_threshold(problem, u, theta);
                if (next == u) break;
                u = std::move(next);
            }
            fixed_points.insert(u.labels());
        }
        if (fixed_points.size() != 1) continue;
        ++compared;
        CHECK(*fixed_points.begin() == brute_force_min_u(problem, theta).first.labels());
    }
    CHECK(compared > 0);
}

TEST_CASE("relaxation exactness on strictly concave instances") {
    SECTION("negative squared norm with no fidelity") {
        DenseProblem::Options options;
        options.concave = ConcaveTerm::negative_square;
        options.gamma = 1.0;
        const std::vector<double> zeros(2 * 3, 0.0);
        const DenseProblem problem(2, 3, zeros, zeros, zeros, options);
        const auto report = relaxation_exactness_check(problem, {0.0, 0.0}, 50, 1);
        CHECK(report.status == CertificateStatus::pass);
    }
    SECTION("kernel term, random fidelity") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto problem = DenseProblem::random(3, 4, seed);
            CHECK(relaxation_exactness_check(problem, {0.1, 0.5, 0.9}, 20, seed).passed());
        }
    }
    SECTION("no concave term: hypothesis unmet") {
        DenseProblem::Options options;
        options.concave = ConcaveTerm::zero;
        const auto problem = DenseProblem::random(2, 3, 8, options);
        CHECK(relaxation_exactness_check(problem, {0.0, 0.0}, 5, 1).status == CertificateStatus::hypothesis_unmet);
    }
}

TEST_CASE("strict concavity probe") {
    const auto kernel = DenseProblem::random(2, 5, 31);
    // The ring kernel's symbol is positive, so the kernel term is strictly concave.
    const auto& k = kernel.kernel_matrix();
    for (std::size_t m = 0; m < 5; ++m) {
        double symbol = 0.0;
        for (std::size_t b = 0; b < 5; ++b) symbol += k[b] * std::cos(2.0 * std::numbers::pi * m * b / 5.0);
        CHECK(symbol > 0.0);
    }
    CHECK(strict_concavity_probe(kernel, {0.2, 0.8}, 100, 3).passed());

    DenseProblem::Options options;
    options.concave = ConcaveTerm::linear;
    const auto linear = DenseProblem::random(2, 5, 31, options);
    const auto report = strict_concavity_probe(linear, {0.2, 0.8}, 10, 3);
    CHECK(report.status == CertificateStatus::fail);
    REQUIRE(report.witness.has_value());
    CHECK(report.witness->fields.size() == 2);
    // The witness re-evaluates to a non-positive gap.
    CHECK(concavity_gap(linear, {0.2, 0.8}, report.witness->fields[0], report.witness->fields[1], *report.witness->t) <=
          1e-10);

    // Midpoint between u and a permutation of its columns.
    std::mt19937_64 rng(6);
    const PhaseField u = detail::random_relaxed(2, 5, rng);
    PhaseField v(2, 5);
    for (std::size_t j = 0; j < 5; ++j) {
        for (std::size_t i = 0; i < 2; ++i) v(i, j) = u(i, (j + 2) % 5);
    }
    CHECK(concavity_gap(kernel, {0.2, 0.8}, u, v, 0.5) > 0.0);
}

TEST_CASE("local minimum certificates") {
    const auto problem = DenseProblem::random(2, 6, 55);
    const ParameterState theta{0.35, 0.65};
    const auto [global, value] = brute_force_min_u(problem, theta);

    CHECK(local_min_certificate(problem, global, theta, 6).passed());

    // Full ball: passes exactly for global minimizers.
    std::size_t global_passes = 0;
    for (const auto& u : enumerate_C(2, 6)) {
        const bool passes = local_min_certificate(problem, u, theta, 6).passed();
        CHECK(passes == (energy(problem, u, theta) <= value + 1e-12));
        global_passes += passes;
    }
    CHECK(global_passes >= 1);

    // A strict thresholding fixed point after radius-1 descent passes at r = 1.
    IndicatorField u(2, 6, 0);
    for (;;) {
        IndicatorField next = u_update_threshold(problem, u, theta);
        if (next == u) break;
        u = std::move(next);
    }
    u = local_search_radius1(problem, u, theta);
    CHECK(local_min_certificate(problem, u, theta, 1).passed());

    // One point moved off its best phase fails at r = 1 and the witness is better.
    IndicatorField worse = global;
    worse.set_label(2, 1 - worse.label(2));
    const auto report = local_min_certificate(problem, worse, theta, 1);
    CHECK(report.status == CertificateStatus::fail);
    REQUIRE(report.witness.has_value());
    CHECK(report.witness->values[1] < report.witness->values[0]);
}

TEST_CASE("certificates are reproducible from the seed") {
    const auto problem = DenseProblem::random(3, 5, 99);
    const auto a = relaxation_exactness_check(problem, {0.1, 0.2, 0.3}, 10, 42);
    const auto b = relaxation_exactness_check(problem, {0.1, 0.2, 0.3}, 10, 42);
    CHECK(a.status == b.status);
    DenseProblem::Options options;
    options.concave = ConcaveTerm::linear;
    const auto linear = DenseProblem::random(2, 4, 1, options);
    const auto c = strict_concavity_probe(linear, {0.0, 0.0}, 5, 9);
    const auto d = strict_concavity_probe(linear, {0.0, 0.0}, 5, 9);
    REQUIRE(c.witness.has_value());
    CHECK(c.witness->fields[0] == d.witness->fields[0]);
    CHECK(*c.witness->t == *d.witness->t);
}
