#pragma once

#include <stdexcept>
#include <string>

namespace cellwise {

enum class ErrorKind {
    Input,        // malformed arguments or data
    Shape,        // unsupported table shape, e.g. n <= d
    Singular,     // matrix not positive definite where it must be
    Convergence,  // iterative routine ran out of iterations
    Sparsity,     // too few complete observations for a statistic
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace cellwise
