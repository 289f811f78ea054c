// Error taxonomy shared by the library and the command line tool.
//
// UsageError   -> bad arguments, invalid parameters, out-of-domain inputs (exit 2)
// FormatError  -> malformed data files                                    (exit 3)
// NumericalError -> quadrature/convergence/gating failures               (exit 4)
#pragma once

#include <stdexcept>
#include <string>

namespace fretflim {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace fretflim
