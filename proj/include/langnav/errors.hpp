#pragma once

#include <stdexcept>
#include <string>

namespace langnav {

// Malformed or inconsistent input data (scene files, episodes, records).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Failures talking to a completion/embedding service.
class GatewayError : public std::runtime_error {
public:
    explicit GatewayError(const std::string& what) : std::runtime_error(what) {}
};

// Generated text could not be matched to any navigable candidate.
class NoMatchError : public std::runtime_error {
public:
    explicit NoMatchError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace langnav
