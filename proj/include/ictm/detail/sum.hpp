#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace ictm::detail {

// Neumaier compensated accumulator. Energies are sums over 10^4..10^6 terms
// and the solvers compare successive values at 1e-10 absolute.
class Accumulator {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
    Accumulator acc;
    for (std::size_t i = 0; i < a.size(); ++i) acc.add(a[i] * b[i]);
    return acc.value();
}

inline double sum(std::span<const double> a) noexcept {
    Accumulator acc;
    for (double v : a) acc.add(v);
    return acc.value();
}

}  // namespace ictm::detail
