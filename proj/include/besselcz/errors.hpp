#ifndef BESSELCZ_ERRORS_HPP
#define BESSELCZ_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace besselcz {

/// An argument is outside the mathematical domain of the operation.
class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// A numerical procedure failed to reach its tolerance within budget.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace besselcz

#endif  // BESSELCZ_ERRORS_HPP
