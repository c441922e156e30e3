#pragma once

#include <stdexcept>
#include <string>

namespace doob {

/// Base class for every error raised by the library.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct empty_path : error {
    empty_path() : error("path must contain at least one value") {}
};

struct non_finite_entry : error {
    explicit non_finite_entry(std::size_t index)
        : error("path entry " + std::to_string(index) + " is not finite"), index(index) {}
    std::size_t index;
};

/// Argument outside the mathematical domain of an operation (negative value
/// under a logarithm, x_0 <= 0 where a positive start is needed, ...).
struct domain_error : error {
    using error::error;
};

struct exponent_out_of_range : error {
    explicit exponent_out_of_range(double p)
        : error("exponent must satisfy p > 1, got " + std::to_string(p)), exponent(p) {}
    double exponent;
};

/// A tree does not belong to the process class an inequality requires.
struct classification_error : error {
    using error::error;
};

/// A Monte Carlo generator does not produce the process class an inequality requires.
struct class_mismatch : error {
    using error::error;
};

/// Malformed tree. `where` is a JSON path such as `$.children[1].node.value`.
struct tree_format_error : error {
    tree_format_error(std::string where, const std::string& what)
        : error(where + ": " + what), where(std::move(where)) {}
    std::string where;
};

/// Unparseable text input (path files, generator documents).
struct parse_error : error {
    using error::error;
};

} // namespace doob
