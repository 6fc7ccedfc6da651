#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scalefn {

/// Error categories shared by every module. The CLI prints `error_name(kind)`
/// verbatim, so the names are part of the external interface.
enum class ErrorKind {
    InvalidArgument,
    GridMismatch,
    NonConvergentIntegral,
    RootNotBracketed,
    SubordinatorExcluded,
    RegimeMismatch,
    NotConverged,
    KernelMismatch,
    InfiniteMeasure,
    MassNotOne,
    SingularSystem,
    NotPositive,
    NoResolvent,
    DomainTooShort,
    NetProfitViolated,
    ParseError,
};

std::string_view error_name(ErrorKind kind) noexcept;

/// Short "%.6g" rendering for error messages.
std::string format_real(double v);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& detail);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace scalefn
