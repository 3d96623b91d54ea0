#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ictm/errors.hpp"

namespace ictm {

/// Dense n x p array of phase values, row i holding phase i over all points.
///
/// Used for gradients and for relaxed assignments (columns on the probability
/// simplex). A binary PhaseField is the dense image of an IndicatorField.
class PhaseField {
public:
    PhaseField() = default;
    PhaseField(std::size_t phases, std::size_t points, double fill = 0.0)
        : n_(phases), p_(points), values_(phases * points, fill) {}

    [[nodiscard]] std::size_t phases() const noexcept { return n_; }
    [[nodiscard]] std::size_t points() const noexcept { return p_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return values_[i * p_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * p_ + j]; }

    [[nodiscard]] std::span<double> row(std::size_t i) noexcept { return {values_.data() + i * p_, p_}; }
    [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept {
        return {values_.data() + i * p_, p_};
    }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::span<double> values() noexcept { return values_; }

    /// True when every column lies on the simplex to within tol.
    [[nodiscard]] bool relaxed_feasible(double tol = 1e-12) const noexcept {
        for (std::size_t j = 0; j < p_; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n_; ++i) {
                const double v = (*this)(i, j);
                if (v < -tol || v > 1.0 + tol) return false;
                s += v;
            }
            if (std::abs(s - 1.0) > tol) return false;
        }
        return true;
    }

    /// True when every entry is within tol of 0 or 1.
    [[nodiscard]] bool near_binary(double tol) const noexcept {
        return std::all_of(values_.begin(), values_.end(),
                           [tol](double v) { return std::abs(v) <= tol || std::abs(v - 1.0) <= tol; });
    }

    friend bool operator==(const PhaseField&, const PhaseField&) = default;

private:
    std::size_t n_ = 0;
    std::size_t p_ = 0;
    std::vector<double> values_;
};

/// Binary phase assignment: each of p points belongs to exactly one of n phases.
///
/// Stored as one label per column, so the column-sum and {0,1} invariants hold
/// by construction. Entry (i, j) is 1 iff label(j) == i.
class IndicatorField {
public:
    IndicatorField() = default;
    IndicatorField(std::size_t phases, std::size_t points, std::uint32_t fill = 0)
        : n_(phases), labels_(points, fill) {
        if (phases < 2) throw ConfigError("an indicator field needs at least 2 phases");
        if (fill >= phases) throw ConfigError("label out of range");
    }
    IndicatorField(std::size_t phases, std::vector<std::uint32_t> labels) : n_(phases), labels_(std::move(labels)) {
        if (phases < 2) throw ConfigError("an indicator field needs at least 2 phases");
        for (auto l : labels_) {
            if (l >= phases) throw ConfigError("label " + std::to_string(l) + " out of range");
        }
    }

    /// Two-phase field from a single row u (u_j = 1 puts point j in phase 1).
    static IndicatorField from_row(std::span<const std::uint8_t> row) {
        std::vector<std::uint32_t> labels(row.begin(), row.end());
        for (auto& l : labels) l = l != 0 ? 1U : 0U;
        return {2, std::move(labels)};
    }

    [[nodiscard]] std::size_t phases() const noexcept { return n_; }
    [[nodiscard]] std::size_t points() const noexcept { return labels_.size(); }
    [[nodiscard]] std::uint32_t label(std::size_t j) const noexcept { return labels_[j]; }
    void set_label(std::size_t j, std::uint32_t phase) {
        if (phase >= n_) throw ConfigError("label out of range");
        labels_[j] = phase;
    }
    [[nodiscard]] const std::vector<std::uint32_t>& labels() const noexcept { return labels_; }

    [[nodiscard]] int operator()(std::size_t i, std::size_t j) const noexcept { return labels_[j] == i ? 1 : 0; }

    /// Number of points assigned to phase i.
    [[nodiscard]] std::size_t count(std::size_t i) const noexcept {
        return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), static_cast<std::uint32_t>(i)));
    }

    /// Row i as 0/1 doubles.
    [[nodiscard]] std::vector<double> row(std::size_t i) const {
        std::vector<double> r(labels_.size());
        for (std::size_t j = 0; j < r.size(); ++j) r[j] = labels_[j] == i ? 1.0 : 0.0;
        return r;
    }

    [[nodiscard]] PhaseField dense() const {
        PhaseField u(n_, labels_.size());
        for (std::size_t j = 0; j < labels_.size(); ++j) u(labels_[j], j) = 1.0;
        return u;
    }

    /// Changed entries between two assignments; each moved point changes two entries.
    [[nodiscard]] std::size_t changed_entries(const IndicatorField& other) const noexcept {
        std::size_t changed = 0;
        for (std::size_t j = 0; j < labels_.size(); ++j) changed += labels_[j] != other.labels_[j] ? 2 : 0;
        return changed;
    }

    friend bool operator==(const IndicatorField&, const IndicatorField&) = default;

private:
    std::size_t n_ = 0;
    std::vector<std::uint32_t> labels_;
};

/// Euclidean projection onto the binary assignment set, column by column.
///
/// Each column goes to the smallest phase index attaining the column maximum.
inline IndicatorField project_to_C(const PhaseField& v) {
    const std::size_t n = v.phases();
    const std::size_t p = v.points();
    std::vector<std::uint32_t> labels(p, 0);
    for (std::size_t j = 0; j < p; ++j) {
        double best = v(0, j);
        if (!std::isfinite(best)) throw NumericError("non-finite value at phase 0, point " + std::to_string(j));
        std::uint32_t arg = 0;
        for (std::size_t i = 1; i < n; ++i) {
            const double x = v(i, j);
            if (!std::isfinite(x)) {
                throw NumericError("non-finite value at phase " + std::to_string(i) + ", point " + std::to_string(j));
            }
            if (x > best) {
                best = x;
                arg = static_cast<std::uint32_t>(i);
            }
        }
        labels[j] = arg;
    }
    return {n, std::move(labels)};
}

/// Euclidean projection of a vector onto the probability simplex (sort and shift).
inline void project_to_simplex(std::span<double> x) {
    std::vector<double> s(x.begin(), x.end());
    std::sort(s.begin(), s.end(), std::greater<>());
    double cumulative = 0.0;
    double shift = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        cumulative += s[k];
        const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
        if (s[k] - candidate > 0.0) shift = candidate;
    }
    for (double& v : x) v = std::max(v - shift, 0.0);
}

/// Projection onto the relaxed set: every column onto the simplex.
inline void project_columns_to_simplex(PhaseField& u) {
    std::vector<double> column(u.phases());
    for (std::size_t j = 0; j < u.points(); ++j) {
        for (std::size_t i = 0; i < u.phases(); ++i) column[i] = u(i, j);
        project_to_simplex(column);
        for (std::size_t i = 0; i < u.phases(); ++i) u(i, j) = column[i];
    }
}

}  // namespace ictm
