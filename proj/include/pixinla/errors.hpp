#pragma once

#include <stdexcept>
#include <string>

namespace pixinla {

/// Coarse failure categories, used by the CLI to pick exit codes.
enum class ErrorKind {
    validation,  ///< bad arguments, malformed config, dimension mismatches
    numerical,   ///< factorization / optimization / integration failures
    io,          ///< file system and format problems
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& msg)
        : Error(ErrorKind::validation, msg) {}
};

struct InvalidHyper : Error {
    explicit InvalidHyper(const std::string& msg)
        : Error(ErrorKind::validation, msg) {}
};

struct InvalidConfig : Error {
    explicit InvalidConfig(const std::string& msg)
        : Error(ErrorKind::validation, msg) {}
};

struct InvalidVariance : Error {
    explicit InvalidVariance(const std::string& msg)
        : Error(ErrorKind::validation, msg) {}
};

/// A latent rate left the positive orthant (or was supplied outside it).
struct NonPositiveRate : Error {
    explicit NonPositiveRate(const std::string& msg)
        : Error(ErrorKind::numerical, msg) {}
};

/// A Cholesky pivot fell below the zero threshold.
struct NotPositiveDefinite : Error {
    explicit NotPositiveDefinite(const std::string& msg)
        : Error(ErrorKind::numerical, msg) {}
};

struct NoConvergence : Error {
    explicit NoConvergence(const std::string& msg)
        : Error(ErrorKind::numerical, msg) {}
};

/// The hyperparameter Hessian has a non-negative eigenvalue at the claimed mode.
struct IndefiniteHessian : Error {
    explicit IndefiniteHessian(const std::string& msg)
        : Error(ErrorKind::numerical, msg) {}
};

struct EmptyPointSet : Error {
    explicit EmptyPointSet(const std::string& msg)
        : Error(ErrorKind::numerical, msg) {}
};

/// Integration-point budget exceeded: the hyperposterior is not concentrated.
struct ExplosionGuard : Error {
    explicit ExplosionGuard(const std::string& msg)
        : Error(ErrorKind::numerical, msg) {}
};

struct ConstantImage : Error {
    explicit ConstantImage(const std::string& msg)
        : Error(ErrorKind::validation, msg) {}
};

/// Both images are jointly constant: the pooled dynamic range is zero.
struct DegenerateRange : Error {
    explicit DegenerateRange(const std::string& msg)
        : Error(ErrorKind::validation, msg) {}
};

struct MalformedHeader : Error {
    explicit MalformedHeader(const std::string& msg)
        : Error(ErrorKind::io, msg) {}
};

struct TruncatedData : Error {
    explicit TruncatedData(const std::string& msg)
        : Error(ErrorKind::io, msg) {}
};

struct UnsupportedMagic : Error {
    explicit UnsupportedMagic(const std::string& msg)
        : Error(ErrorKind::io, msg) {}
};

struct IoError : Error {
    explicit IoError(const std::string& msg)
        : Error(ErrorKind::io, msg) {}
};

}  // namespace pixinla
