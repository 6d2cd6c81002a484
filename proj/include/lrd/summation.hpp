#pragma once

#include <cmath>
#include <span>

namespace lrd {

// Neumaier-compensated accumulator. Long probability convolutions lose
// several digits under naive accumulation; the running correction term
// keeps the result within a few ulp of the exact sum.
class compensated_sum {
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

    double value() const noexcept { return sum_ + comp_; }

    void reset() noexcept { sum_ = 0.0; comp_ = 0.0; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_total(std::span<const double> xs) noexcept {
    compensated_sum acc;
    for (double x : xs) acc.add(x);
    return acc.value();
}

}  // namespace lrd
