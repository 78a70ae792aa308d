#pragma once

#include <stdexcept>
#include <string>

namespace semstream {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct UnknownEntity : Error {
    explicit UnknownEntity(const std::string& id) : Error("unknown entity: " + id) {}
};

struct DuplicateTriple : Error {
    explicit DuplicateTriple(const std::string& key) : Error("duplicate triple: " + key) {}
};

struct InvalidProbability : Error {
    explicit InvalidProbability(double p)
        : Error("probability out of (0,1]: " + std::to_string(p)) {}
};

struct UnknownTriple : Error {
    explicit UnknownTriple(const std::string& key) : Error("unknown triple: " + key) {}
};

struct CategoryConflict : Error {
    explicit CategoryConflict(const std::string& id)
        : Error("entity category conflict: " + id) {}
};

struct EventOutOfBounds : Error {
    explicit EventOutOfBounds(const std::string& what) : Error(what) {}
};

struct InvalidFraming : Error {
    explicit InvalidFraming(const std::string& what) : Error(what) {}
};

struct HeaderMismatch : Error {
    explicit HeaderMismatch(const std::string& what) : Error(what) {}
};

struct UnsupportedChannelCount : Error {
    explicit UnsupportedChannelCount(int n)
        : Error("unsupported output channel count: " + std::to_string(n)) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& field) : Error("bad config: " + field) {}
};

struct ParseError : Error {
    ParseError(int line, const std::string& what)
        : Error("parse error at line " + std::to_string(line) + ": " + what), line(line) {}
    int line;
};

struct ValidationError : Error {
    explicit ValidationError(const std::string& what) : Error("validation: " + what) {}
};

} // namespace semstream
