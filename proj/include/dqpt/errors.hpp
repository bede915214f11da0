// Exception types shared by all dqpt modules

#pragma once

#include <stdexcept>
#include <string>

namespace dqpt {

// Base for failures of a numerical method. The CLI maps these to exit code 3.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad user input (config, CLI). Exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define DQPT_NUMERICAL_ERRORS(X) \
    X(NonHermitianInput)         \
    X(UnstableDrift)             \
    X(SolveFailure)              \
    X(ToleranceFailure)          \
    X(NonPhysical)               \
    X(SingularState)             \
    X(SingularReference)         \
    X(DefectiveMatrix)           \
    X(DegenerateOverlap)         \
    X(DegenerateSoftMode)        \
    X(RankDeficient)             \
    X(NonConvergentF)            \
    X(MultipleSteadyStates)      \
    X(NonHermitianH)             \
    X(CutoffTooSmall)            \
    X(NoCrossing)                \
    X(InsufficientPoints)        \
    X(NonPositiveData)           \
    X(NoOverlap)

#define DQPT_DECLARE_ERROR(name)                   \
    struct name : NumericalError {                 \
        explicit name(const std::string& what)     \
            : NumericalError(#name ": " + what) {} \
    };

DQPT_NUMERICAL_ERRORS(DQPT_DECLARE_ERROR)
#undef DQPT_DECLARE_ERROR

// Call inside a catch block: rethrows the active numerical error as the same
// type with `context` prepended to its message. Other exceptions pass through.
[[noreturn]] inline void rethrow_with_context(const std::string& context)
{
    auto strip = [](const char* what, const std::string& name) {
        std::string w(what);
        const std::string prefix = name + ": ";
        return w.rfind(prefix, 0) == 0 ? w.substr(prefix.size()) : w;
    };
    try {
        throw;
    }
#define DQPT_RETHROW(name) \
    catch (const name& e) { throw name(context + ": " + strip(e.what(), #name)); }
    DQPT_NUMERICAL_ERRORS(DQPT_RETHROW)
#undef DQPT_RETHROW
}

} // namespace dqpt
