#pragma once

#include <stdexcept>
#include <string>

namespace schf {

inline constexpr const char* kVersion = "0.1.0";

/// Thrown when an iterative solver fails to reach its tolerance.
struct SolverError : std::runtime_error {
    double final_residual;
    int iterations;
    SolverError(const std::string& what_, double res, int iters)
        : std::runtime_error(what_), final_residual(res), iterations(iters) {}
};

/// Thrown on malformed configuration input or invalid option values.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace schf
