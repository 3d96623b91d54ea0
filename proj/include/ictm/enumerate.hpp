#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ictm/errors.hpp"
#include "ictm/indicator.hpp"

namespace ictm {

/// Largest number of assignments any exhaustive routine will visit.
inline constexpr std::uint64_t default_enumeration_cap = 2'000'000;

/// n^p, or nullopt once it exceeds `cap`.
inline std::optional<std::uint64_t> assignment_count(std::size_t n, std::size_t p,
                                                     std::uint64_t cap = default_enumeration_cap) {
    std::uint64_t count = 1;
    for (std::size_t j = 0; j < p; ++j) {
        count *= n;
        if (count > cap) return std::nullopt;
    }
    return count;
}

inline void require_enumerable(std::size_t n, std::size_t p, std::uint64_t cap = default_enumeration_cap) {
    if (!assignment_count(n, p, cap)) {
        throw CapabilityError(std::to_string(n) + "^" + std::to_string(p) + " assignments exceed the enumeration cap of " +
                              std::to_string(cap) + "; use the radius-r (local) checks instead");
    }
}

/// Visits every element of C once, in lexicographic label order (point 0 most significant).
template <class Visitor>
void for_each_assignment(std::size_t n, std::size_t p, Visitor&& visit, std::uint64_t cap = default_enumeration_cap) {
    require_enumerable(n, p, cap);
    IndicatorField u(n, p, 0);
    std::vector<std::uint32_t> labels(p, 0);
    for (;;) {
        visit(static_cast<const IndicatorField&>(u));
        std::size_t j = p;
        while (j > 0) {
            --j;
            if (labels[j] + 1 < n) {
                ++labels[j];
                u.set_label(j, labels[j]);
                break;
            }
            labels[j] = 0;
            u.set_label(j, 0);
            if (j == 0) return;
        }
        if (p == 0) return;
    }
}

inline std::vector<IndicatorField> enumerate_C(std::size_t n, std::size_t p,
                                               std::uint64_t cap = default_enumeration_cap) {
    std::vector<IndicatorField> all;
    all.reserve(static_cast<std::size_t>(assignment_count(n, p, cap).value_or(0)));
    for_each_assignment(n, p, [&](const IndicatorField& u) { all.push_back(u); }, cap);
    return all;
}

/// Size of the Hamming ball: assignments differing from a center in at most r points.
inline std::optional<std::uint64_t> ball_size(std::size_t n, std::size_t p, std::size_t r,
                                              std::uint64_t cap = default_enumeration_cap) {
    std::uint64_t total = 0;
    std::uint64_t choose = 1;  // C(p, k)
    std::uint64_t moves = 1;   // (n-1)^k
    for (std::size_t k = 0; k <= r && k <= p; ++k) {
        if (k > 0) {
            choose = choose * (p - k + 1) / k;
            moves *= n - 1;
        }
        const long double term = static_cast<long double>(choose) * static_cast<long double>(moves);
        if (term + total > static_cast<long double>(cap)) return std::nullopt;
        total += choose * moves;
    }
    return total;
}

namespace detail {

template <class Visitor>
void visit_ball(IndicatorField& u, std::size_t first, std::size_t remaining, Visitor& visit) {
    for (std::size_t j = first; j < u.points(); ++j) {
        const std::uint32_t original = u.label(j);
        for (std::uint32_t m = 0; m < u.phases(); ++m) {
            if (m == original) continue;
            u.set_label(j, m);
            visit(static_cast<const IndicatorField&>(u));
            if (remaining > 1) visit_ball(u, j + 1, remaining - 1, visit);
        }
        u.set_label(j, original);
    }
}

}  // namespace detail

/// Visits the center and every assignment within Hamming radius r of it.
template <class Visitor>
void for_each_in_ball(const IndicatorField& center, std::size_t r, Visitor&& visit,
                      std::uint64_t cap = default_enumeration_cap) {
    if (!ball_size(center.phases(), center.points(), r, cap)) {
        throw CapabilityError("radius-" + std::to_string(r) + " ball exceeds the enumeration cap");
    }
    IndicatorField u = center;
    visit(static_cast<const IndicatorField&>(u));
    if (r > 0) detail::visit_ball(u, 0, r, visit);
}

}  // namespace ictm
