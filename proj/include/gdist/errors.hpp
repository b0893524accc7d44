#pragma once

#include <stdexcept>
#include <string>

namespace gdist {

//! Base class for all toolkit errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

//! Input shape/validation problems (bad sizes, invalid parameters, malformed specs).
struct InvalidArgument : Error {
    using Error::Error;
};

//! z (or coefficient) dimension does not match the market dimension.
struct DimensionMismatch : InvalidArgument {
    using InvalidArgument::InvalidArgument;
};

//! A quadrature failed to converge across two refinement levels.
struct NonIntegrable : Error {
    using Error::Error;
};

//! The reference law has an atom where an atomless law is required.
struct AtomDetected : Error {
    using Error::Error;
};

//! A requested simulation exceeds the configured memory cap.
struct ResourceLimit : Error {
    using Error::Error;
};

//! Regression Gram matrix condition number above the configured cap.
struct RegressionSingular : Error {
    using Error::Error;
};

//! NaN/Inf appeared during a numerical scheme; carries diagnostics.
struct NumericalFailure : Error {
    using Error::Error;
};

//! A probe's stated precondition (samplewise or pointwise dominance) fails.
struct PreconditionViolated : Error {
    using Error::Error;
};

//! A theorem hypothesis required by a solver does not hold for the inputs.
struct HypothesisViolated : Error {
    using Error::Error;
};

//! No Lagrange multiplier can match the requested budget.
struct BudgetInfeasible : Error {
    using Error::Error;
};

//! Root bracketing or monotonicity of a root-finding map failed.
struct RootBracketFailure : Error {
    using Error::Error;
};

//! Terminal law fails the exponential-moment admissibility test.
struct InadmissibleDistribution : Error {
    using Error::Error;
};

//! An exponent left the floating-point range while building a transform.
struct QuadratureOverflow : Error {
    using Error::Error;
};

//! Samples fail the distribution check (Kolmogorov–Smirnov) they claim.
struct LawMismatch : Error {
    using Error::Error;
};

}  // namespace gdist
