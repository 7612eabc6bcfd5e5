#ifndef DGLUE_ERROR_HPP
#define DGLUE_ERROR_HPP

#include <stdexcept>
#include <string>
#include <utility>

namespace dglue {

// Every validation failure carries a stable code naming the violated
// contract ("NonMonotoneGluingMap", "IncompatibleSections", ...) so that
// reports and tests can match on it without parsing prose.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void fail(std::string code, const std::string& message) {
    throw Error(std::move(code), message);
}

} // namespace dglue

#endif
