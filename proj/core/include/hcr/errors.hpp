#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hcr {

// Failure categories surfaced by the library. The CLI maps these onto
// process exit codes (config -> 2, data -> 3, numeric -> 4).
enum class errc {
    config,              // invalid configuration or requested degree out of range
    unsupported_degree,  // basis degree outside the supported cap
    io,                  // unreadable / empty / malformed input
    insufficient_data,   // fewer observations than the operation requires
    domain,              // argument outside the mathematical domain
    degenerate_scale,    // zero-spread sample, no usable scale parameter
    misaligned_panel,    // panel columns of unequal length
    shape_mismatch,      // dimension disagreement between arguments
    degenerate_context,  // conditioning context carries nonpositive mass
    fit_failure,         // iterative fit did not converge
    rank_deficient,      // singular design matrix
    contract,            // caller violated an operation contract
    numeric,             // other numerical failure
};

const char* errc_name(errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

// Fit failures carry the best parameter vector found so far, so callers can
// decide whether a partial result is still usable.
class FitFailureError : public Error {
public:
    FitFailureError(const std::string& message, std::vector<double> best)
        : Error(errc::fit_failure, message), best_so_far_(std::move(best)) {}

    const std::vector<double>& best_so_far() const noexcept { return best_so_far_; }

private:
    std::vector<double> best_so_far_;
};

class DegenerateContextError : public Error {
public:
    DegenerateContextError(const std::string& message, double context_mass)
        : Error(errc::degenerate_context, message), context_mass_(context_mass) {}

    // Raw (unnormalized) mass the model assigned to the context.
    double context_mass() const noexcept { return context_mass_; }

private:
    double context_mass_;
};

}  // namespace hcr
