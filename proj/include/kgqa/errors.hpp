#pragma once

#include <stdexcept>
#include <string>

namespace kgqa {

// Input could not be tokenized/decoded. Carries a human-readable location.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Input decoded but violates the documented schema (unknown kind, bad field).
class SchemaError : public std::runtime_error {
public:
    explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

// A cross-reference (relation endpoint, qa_id, doc id) does not resolve.
class ReferenceError : public std::runtime_error {
public:
    explicit ReferenceError(const std::string& msg) : std::runtime_error(msg) {}
};

// A structural invariant does not hold (cyclic continuation chain, ...).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Problems in the global config file or model configuration.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Transport-level failure after exhausting retries.
class TransportError : public std::runtime_error {
public:
    explicit TransportError(const std::string& msg) : std::runtime_error(msg) {}
};

// Authentication/authorization failure; never retried.
class CredentialError : public std::runtime_error {
public:
    explicit CredentialError(const std::string& msg) : std::runtime_error(msg) {}
};

// A QA pair's provenance (bindings/answers) cannot be mapped back to spans.
class ProvenanceError : public std::runtime_error {
public:
    explicit ProvenanceError(const std::string& msg) : std::runtime_error(msg) {}
};

// An out-of-subset query construct was requested.
class UnsupportedFeatureError : public std::runtime_error {
public:
    explicit UnsupportedFeatureError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace kgqa
