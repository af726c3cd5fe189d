#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace scbl {

using Complex = std::complex<double>;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor, std::ptrdiff_t>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Base class for all library errors. `module` and `operation` name the
/// failing stage so the CLI can report it.
class Error : public std::runtime_error {
public:
    Error(std::string module, std::string operation, const std::string& what)
        : std::runtime_error(what), module_(std::move(module)), operation_(std::move(operation)) {}

    const std::string& module() const noexcept { return module_; }
    const std::string& operation() const noexcept { return operation_; }

private:
    std::string module_;
    std::string operation_;
};

/// Invalid parameters or violated preconditions.
class DomainError : public Error {
    using Error::Error;
};

/// A numerical procedure failed (non-convergence, singular solve, size cap).
class NumericalError : public Error {
    using Error::Error;
};

/// Malformed or inconsistent configuration.
class ConfigError : public Error {
    using Error::Error;
};

/// Runs `body(i)` for i in [0, count) on up to `workers` threads. Each index
/// is processed exactly once; callers write results into index-addressed
/// slots so reductions stay order independent. The first exception thrown
/// by any worker is rethrown on the calling thread.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body);

/// Worker count used when the caller passes `workers <= 0`.
int default_workers();

}  // namespace scbl
