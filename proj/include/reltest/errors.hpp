#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace reltest {

/// One violated constraint: which field, and what was expected of it.
struct Violation {
    std::string field;
    std::string constraint;
};

/// Invalid input. Carries every violation found, not only the first.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(std::vector<Violation> violations);
    ValidationError(std::string field, std::string constraint);

    const std::vector<Violation>& violations() const noexcept { return violations_; }

private:
    std::vector<Violation> violations_;
};

/// Argument outside the mathematical domain of a function (e.g. U(r) for r > 1).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// The problem is too large for the requested exact method.
class CapacityError : public std::runtime_error {
public:
    CapacityError(const std::string& what, std::uint64_t required, std::uint64_t limit);

    std::uint64_t required() const noexcept { return required_; }
    std::uint64_t limit() const noexcept { return limit_; }

private:
    std::uint64_t required_;
    std::uint64_t limit_;
};

/// Interval bounds that do not intersect the probability simplex.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input is well formed but the requested case is not handled (e.g. an
/// ellipsoid whose worst-case point leaves the simplex).
class UnsupportedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    IoError(const std::string& path, const std::string& what);

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

} // namespace reltest
