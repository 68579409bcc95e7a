#ifndef OWLEYE_ERROR_HPP
#define OWLEYE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace owleye {

enum class ErrorKind {
    InvalidArgument,
    Parse,
    Schema,
    Io,
    Shape,
    NoCandidate,
    UnsupportedCategory,
    DegenerateRegion,
    Numeric,
    Config,
    StaleCache,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "invalid argument";
        case ErrorKind::Parse: return "parse error";
        case ErrorKind::Schema: return "schema error";
        case ErrorKind::Io: return "i/o error";
        case ErrorKind::Shape: return "shape error";
        case ErrorKind::NoCandidate: return "no candidate";
        case ErrorKind::UnsupportedCategory: return "unsupported category";
        case ErrorKind::DegenerateRegion: return "degenerate region";
        case ErrorKind::Numeric: return "numeric failure";
        case ErrorKind::Config: return "config error";
        case ErrorKind::StaleCache: return "stale cache";
    }
    return "error";
}

/// Single exception type for the toolkit; `kind()` lets callers branch
/// (the CLI maps kinds onto exit codes).
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Parse failures carry the byte offset where the document went wrong.
class ParseError : public Error {
public:
    ParseError(std::size_t offset, const std::string& what)
        : Error(ErrorKind::Parse, what + " (at byte " + std::to_string(offset) + ")"),
          offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

}  // namespace owleye

#endif
