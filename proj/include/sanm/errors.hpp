#pragma once

#include <stdexcept>
#include <string>

namespace sanm {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define SANM_DEFINE_ERROR(Name)                                       \
    class Name : public Error {                                       \
    public:                                                           \
        explicit Name(const std::string& what) : Error(what) {}       \
    }

SANM_DEFINE_ERROR(NonSkewInput);      // vee() on a matrix that is not skew-symmetric
SANM_DEFINE_ERROR(DegenerateMatrix);  // orthonormalize() on a rank-deficient / reflected matrix
SANM_DEFINE_ERROR(DegenerateThrust);  // desired force too small to define an attitude
SANM_DEFINE_ERROR(HeadingAligned);    // heading parallel to desired thrust axis
SANM_DEFINE_ERROR(NotHurwitz);        // Lyapunov solve on an unstable companion matrix
SANM_DEFINE_ERROR(NotDecaying);       // no positive-rate envelope covers the series
SANM_DEFINE_ERROR(NonFiniteState);    // integrator produced NaN/inf
SANM_DEFINE_ERROR(SimDiverged);       // state left the sane simulation region
SANM_DEFINE_ERROR(InvalidSpec);       // malformed trajectory/disturbance/parameter spec
SANM_DEFINE_ERROR(IoError);           // file I/O failure (message carries row index where known)
SANM_DEFINE_ERROR(SchemaMismatch);    // telemetry file header does not match the fixed schema
SANM_DEFINE_ERROR(ConfigError);       // scenario config parse/validation failure

#undef SANM_DEFINE_ERROR

}  // namespace sanm
