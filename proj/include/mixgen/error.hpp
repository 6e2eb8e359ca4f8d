#pragma once

#include <stdexcept>
#include <string>

namespace mixgen {

enum class ErrorKind {
    validation,   // malformed input: non-stochastic matrix, loss outside [0,1], bad config field
    model,        // well-formed but unusable model (reducible or periodic chain)
    size,         // enumeration or state-space cap exceeded
    domain,       // argument outside the domain of a formula
    config,       // inconsistent experiment configuration
    protocol,     // online learner broke the game protocol
    consistency,  // an identity that must hold exactly did not
    io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

#define MIXGEN_DEFINE_ERROR(Name, Kind)                                     \
    class Name : public Error {                                             \
    public:                                                                 \
        explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
    }

MIXGEN_DEFINE_ERROR(ValidationError, validation);
MIXGEN_DEFINE_ERROR(ModelError, model);
MIXGEN_DEFINE_ERROR(SizeError, size);
MIXGEN_DEFINE_ERROR(DomainError, domain);
MIXGEN_DEFINE_ERROR(ConfigError, config);
MIXGEN_DEFINE_ERROR(ProtocolError, protocol);
MIXGEN_DEFINE_ERROR(ConsistencyError, consistency);
MIXGEN_DEFINE_ERROR(IoError, io);

#undef MIXGEN_DEFINE_ERROR

}  // namespace mixgen
