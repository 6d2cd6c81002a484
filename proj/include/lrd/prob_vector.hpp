#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "summation.hpp"

namespace lrd {

// Distribution over states 0..N truncated to N, with the mass assigned
// beyond N tracked explicitly.  Every distribution-valued computation in the
// library produces one of these, so truncation loss is always visible.
struct prob_vector {
    std::vector<double> weights;
    double tail_mass = 0.0;

    static prob_vector point_mass(std::size_t state, std::size_t truncation) {
        if (state > truncation) {
            throw std::invalid_argument("point_mass: state " + std::to_string(state) +
                                        " exceeds truncation " + std::to_string(truncation));
        }
        prob_vector v;
        v.weights.assign(truncation + 1, 0.0);
        v.weights[state] = 1.0;
        return v;
    }

    double total() const {
        compensated_sum s;
        for (double w : weights) s.add(w);
        s.add(tail_mass);
        return s.value();
    }

    void validate() const {
        for (double w : weights) {
            if (!(w >= 0.0)) {
                throw std::invalid_argument("prob_vector: negative weight");
            }
        }
        if (!(tail_mass >= 0.0)) {
            throw std::invalid_argument("prob_vector: negative tail mass");
        }
        const double t = total();
        if (std::abs(t - 1.0) > 1e-12) {
            throw std::invalid_argument("prob_vector: total mass " + std::to_string(t) +
                                        " deviates from 1 beyond 1e-12");
        }
    }
};

}  // namespace lrd
