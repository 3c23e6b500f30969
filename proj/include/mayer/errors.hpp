#pragma once

#include <stdexcept>
#include <string>

namespace mayer {

/// Base class for all numeric/model errors raised by the library.
/// `code()` is the stable machine-readable name surfaced by the CLI.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

struct NonsmoothPoint : Error {
    explicit NonsmoothPoint(const std::string& what)
        : Error("NonsmoothPoint", what) {}
};

struct DegenerateCostate : Error {
    explicit DegenerateCostate(const std::string& what)
        : Error("DegenerateCostate", what) {}
};

struct ModelInvalid : Error {
    explicit ModelInvalid(const std::string& what)
        : Error("ModelInvalid", what) {}
};

struct OutOfDomain : Error {
    explicit OutOfDomain(const std::string& what)
        : Error("OutOfDomain", what) {}
};

struct ContaminatedRegion : Error {
    explicit ContaminatedRegion(const std::string& what)
        : Error("ContaminatedRegion", what) {}
};

struct AsymmetryDrift : Error {
    explicit AsymmetryDrift(const std::string& what)
        : Error("AsymmetryDrift", what) {}
};

struct PremiseFailed : Error {
    explicit PremiseFailed(const std::string& what)
        : Error("PremiseFailed", what) {}
};

struct PrePostViolation : Error {
    explicit PrePostViolation(const std::string& what)
        : Error("PrePostViolation", what) {}
};

/// Scenario file errors carry the offending line and key.
struct ScenarioParseError : Error {
    ScenarioParseError(int line, const std::string& key, const std::string& what)
        : Error("ScenarioParseError",
                "scenario parse error at line " + std::to_string(line) +
                    ", key '" + key + "': " + what),
          line(line), key(key) {}
    int line;
    std::string key;
};

struct UsageError : Error {
    explicit UsageError(const std::string& what) : Error("UsageError", what) {}
};

} // namespace mayer
