#include "scalefn/errors.hpp"

#include <cstdio>

namespace scalefn {

std::string_view error_name(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::GridMismatch: return "GridMismatch";
        case ErrorKind::NonConvergentIntegral: return "NonConvergentIntegral";
        case ErrorKind::RootNotBracketed: return "RootNotBracketed";
        case ErrorKind::SubordinatorExcluded: return "SubordinatorExcluded";
        case ErrorKind::RegimeMismatch: return "RegimeMismatch";
        case ErrorKind::NotConverged: return "NotConverged";
        case ErrorKind::KernelMismatch: return "KernelMismatch";
        case ErrorKind::InfiniteMeasure: return "InfiniteMeasure";
        case ErrorKind::MassNotOne: return "MassNotOne";
        case ErrorKind::SingularSystem: return "SingularSystem";
        case ErrorKind::NotPositive: return "NotPositive";
        case ErrorKind::NoResolvent: return "NoResolvent";
        case ErrorKind::DomainTooShort: return "DomainTooShort";
        case ErrorKind::NetProfitViolated: return "NetProfitViolated";
        case ErrorKind::ParseError: return "ParseError";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& detail)
    : std::runtime_error(std::string(error_name(kind)) + ": " + detail), kind_(kind) {}

std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace scalefn
