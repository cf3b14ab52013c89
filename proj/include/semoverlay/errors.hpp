#pragma once

#include <stdexcept>
#include <string>

namespace semo {

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct UnknownProperty : std::runtime_error {
    explicit UnknownProperty(const std::string& name)
        : std::runtime_error("unknown property: " + name) {}
};

struct UnsupportedPattern : std::runtime_error {
    explicit UnsupportedPattern(const std::string& msg) : std::runtime_error(msg) {}
};

struct UnboundSelectVariable : std::runtime_error {
    explicit UnboundSelectVariable(const std::string& var)
        : std::runtime_error("selected variable not in pattern: ?" + var) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NoContacts : std::runtime_error {
    NoContacts() : std::runtime_error("contact table is empty") {}
};

struct JoinFailed : std::runtime_error {
    explicit JoinFailed(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace semo
