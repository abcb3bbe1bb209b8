#pragma once

#include <stdexcept>
#include <string>

namespace freeconv {

// Every failure the library can surface maps to one code, so callers (and the
// CLI exit-status logic) never have to match on message strings.
enum class Errc {
    InvalidMeasure,
    SupportCollision,
    MTransformPole,
    NonPositiveSample,
    NoConvergence,
    LeftAdmissibleRegion,
    BranchJump,
    StabilityDegenerate,
    EdgeBracketFailure,
    SubcriticalTarget,
    SubcriticalInS,
    OutlierInsideBulk,
    DecompositionFailure,
    ConfigError,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace freeconv
