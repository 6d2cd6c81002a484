#pragma once

#include <stdexcept>
#include <string>

namespace lrd {

// Requested truncation cannot represent the distribution to the requested
// tolerance (too much mass beyond the last tracked state).
class truncation_error : public std::runtime_error {
public:
    explicit truncation_error(const std::string& what) : std::runtime_error(what) {}
};

// An adaptive summation could not push its certified error bound below the
// requested tolerance within its work budget.
class certification_error : public std::runtime_error {
public:
    explicit certification_error(const std::string& what) : std::runtime_error(what) {}
};

// The chain is null recurrent: no stationary distribution exists.
class no_stationary_error : public std::runtime_error {
public:
    explicit no_stationary_error(const std::string& what) : std::runtime_error(what) {}
};

// A state with zero tail probability was addressed (unreachable age).
class zero_tail_error : public std::domain_error {
public:
    explicit zero_tail_error(const std::string& what) : std::domain_error(what) {}
};

}  // namespace lrd
