#pragma once

#include <stdexcept>
#include <string>

namespace recomb {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A linear system that should have an exact null direction has none within
/// tolerance. Usually badly scaled input.
class NumericalDegeneracy : public Error {
public:
    using Error::Error;
};

class OdeDivergence : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class DegreeCheckFailed : public Error {
public:
    using Error::Error;
};

class UnsupportedDepth : public Error {
public:
    using Error::Error;
};

class TreeTooLarge : public Error {
public:
    using Error::Error;
};

}  // namespace recomb
