#pragma once

#include <stdexcept>
#include <string>

namespace predkit {

// Error taxonomy shared by all modules. The CLI maps these onto its exit
// codes: invalid input/parameter -> 2, numerical failure -> 3,
// insufficient data -> 4.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or out-of-contract data (bad rows, missing labels, ...).
struct InvalidInput : Error {
    using Error::Error;
};

// A caller-supplied parameter outside its documented range.
struct InvalidParameter : Error {
    using Error::Error;
};

// An algorithm failed to converge or the problem is too ill-conditioned.
struct NumericalFailure : Error {
    using Error::Error;
};

// Statistically degenerate data (zero variance, all-equal ranks).
struct DegenerateInput : Error {
    using Error::Error;
};

// Not enough labeled data to fit a benchmark correlation.
struct InsufficientData : Error {
    using Error::Error;
};

}  // namespace predkit
