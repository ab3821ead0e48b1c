#pragma once

#include <stdexcept>
#include <string>

namespace memmac {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid protocol, problem or simulation parameters.
class BadParams : public Error {
public:
    explicit BadParams(const std::string& what) : Error("BadParams: " + what) {}
};

/// A linear system met a pivot below the singularity threshold.
class SingularSystem : public Error {
public:
    explicit SingularSystem(const std::string& what) : Error("SingularSystem: " + what) {}
};

/// A two-critical scenario was requested under a configuration that cannot realize it.
class ScenarioUnsatisfiable : public Error {
public:
    explicit ScenarioUnsatisfiable(const std::string& what)
        : Error("ScenarioUnsatisfiable: " + what) {}
};

}  // namespace memmac
