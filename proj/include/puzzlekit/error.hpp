#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace puzzlekit {

enum class ErrorKind {
    RayLost,
    NotLanded,
    RootFindingFailed,
    InMainComponent,
    PortraitNotFound,
    PortraitNotUnicritical,
    OnRay,
    CombinatoricsUndefined,
    DepthUnavailable,
    LabelMismatch,
    OnBoundary,
    OutsideTruncation,
    BudgetExhausted,
    NeverEscapes,
    NotRecurrent,
    DegenerateAnnulus,
    NonConvergence,
    HypothesisNotMet,
    InvalidArgument,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library. `kind` is stable and machine-readable;
/// the message carries the operation context (depth, budget, angle, ...).
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    /// Budget-type failures are inconclusive rather than mathematical absence.
    bool inconclusive() const noexcept {
        return kind_ == ErrorKind::BudgetExhausted || kind_ == ErrorKind::NeverEscapes ||
               kind_ == ErrorKind::NotRecurrent || kind_ == ErrorKind::DepthUnavailable;
    }

private:
    ErrorKind kind_;
};

}  // namespace puzzlekit
