#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace treedyn {

// Base class for all domain errors. The CLI maps these to exit code 1 and a
// machine-readable JSON object on stderr keyed by kind().
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class InvalidRSpec : public Error {
public:
    explicit InvalidRSpec(const std::string& what) : Error("InvalidRSpec", what) {}
};

class InvalidSequence : public Error {
public:
    explicit InvalidSequence(const std::string& what) : Error("InvalidSequence", what) {}
};

// A sequence whose backward partial sums skip n_k at index k: the sums reach
// `undershoot`, then jump to `overshoot` without hitting n_k.
class NotMetaFib : public Error {
public:
    NotMetaFib(long long k, std::string undershoot, std::string overshoot)
        : Error("NotMetaFib",
                "no r(k) reproduces n_k at k=" + std::to_string(k) + " (sums reach " + undershoot +
                    " then " + overshoot + ")"),
          k(k), undershoot(std::move(undershoot)), overshoot(std::move(overshoot)) {}

    long long k;
    std::string undershoot;
    std::string overshoot;
};

class PreconditionFailed : public Error {
public:
    explicit PreconditionFailed(const std::string& what) : Error("PreconditionFailed", what) {}
};

class AddressOutOfRange : public Error {
public:
    explicit AddressOutOfRange(const std::string& what) : Error("AddressOutOfRange", what) {}
};

// Return machinery requires F to shift levels down (H >= 1).
class UnsupportedShift : public Error {
public:
    explicit UnsupportedShift(const std::string& what) : Error("UnsupportedShift", what) {}
};

// A search budget ran out before anything could be proven.  Distinct from
// proven non-recurrence: the engine never claims infinity on a budget.
class BudgetExhausted : public Error {
public:
    explicit BudgetExhausted(const std::string& what) : Error("BudgetExhausted", what) {}
};

class NormalFormRequired : public Error {
public:
    explicit NormalFormRequired(const std::string& what) : Error("NormalFormRequired", what) {}
};

class ModelError : public Error {
public:
    explicit ModelError(const std::string& what) : Error("ModelError", what) {}
};

class UnresolvableExceptional : public Error {
public:
    explicit UnresolvableExceptional(const std::string& what)
        : Error("UnresolvableExceptional", what) {}
};

class AmbiguousPullback : public Error {
public:
    explicit AmbiguousPullback(const std::string& what) : Error("AmbiguousPullback", what) {}
};

class NoValidGrouping : public Error {
public:
    explicit NoValidGrouping(const std::string& what) : Error("NoValidGrouping", what) {}
};

class InconsistentImage : public Error {
public:
    explicit InconsistentImage(const std::string& what) : Error("InconsistentImage", what) {}
};

class NonUniqueCritical : public Error {
public:
    explicit NonUniqueCritical(const std::string& what) : Error("NonUniqueCritical", what) {}
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error("ParseError", what) {}
};

class Unsupported : public Error {
public:
    explicit Unsupported(const std::string& what) : Error("Unsupported", what) {}
};

} // namespace treedyn
