#pragma once

#include <stdexcept>
#include <string>

namespace prodemb {

// Error categories map 1:1 onto CLI exit codes.
enum class ErrorKind { Usage = 1, Config = 2, Data = 3, Runtime = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }
    int exit_code() const { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void throw_usage(const std::string& msg) {
    throw Error(ErrorKind::Usage, msg);
}
[[noreturn]] inline void throw_config(const std::string& msg) {
    throw Error(ErrorKind::Config, msg);
}
[[noreturn]] inline void throw_data(const std::string& msg) {
    throw Error(ErrorKind::Data, msg);
}
[[noreturn]] inline void throw_runtime(const std::string& msg) {
    throw Error(ErrorKind::Runtime, msg);
}

} // namespace prodemb
