#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace kgrag {

/// Every failure in the library carries a stable machine-readable name
/// (e.g. "unknown-id", "llm-unavailable") next to the human message; the
/// CLI prints `error: <name>: <message>` and exits nonzero.
class Error : public std::runtime_error {
public:
    Error(std::string name, const std::string& message)
        : std::runtime_error(name + ": " + message), name_(std::move(name)) {}

    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

[[noreturn]] inline void raise(std::string name, const std::string& message) {
    throw Error(std::move(name), message);
}

}  // namespace kgrag
