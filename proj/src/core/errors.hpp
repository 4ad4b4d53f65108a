#pragma once

#include <stdexcept>
#include <string>

namespace roadcell {

// Error categories; numeric values line up with the CLI exit-code contract
// (0 ok, 1 usage, 2 data validation, 3 training) plus io/internal buckets.
enum class ErrKind : int {
    usage = 1,
    validation = 2,
    training = 3,
    io = 4,
    internal = 5,
};

class Error : public std::runtime_error {
public:
    Error(ErrKind kind, std::string msg) : std::runtime_error(std::move(msg)), kind_(kind) {}
    ErrKind kind() const noexcept { return kind_; }

private:
    ErrKind kind_;
};

[[noreturn]] inline void fail(ErrKind kind, const std::string& msg) { throw Error(kind, msg); }

}  // namespace roadcell
