#pragma once

#include <stdexcept>
#include <string>

namespace fed {

// Base class for every error raised by the library. Callers that only
// care about "something went wrong" can catch this one type.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& msg) : Error(msg) {}
};

struct DivisionByZero : Error {
    explicit DivisionByZero(const std::string& msg) : Error(msg) {}
};

struct NonFiniteScalar : Error {
    explicit NonFiniteScalar(const std::string& msg) : Error(msg) {}
};

struct NonFiniteValue : Error {
    explicit NonFiniteValue(const std::string& msg) : Error(msg) {}
};

struct EmptyInput : Error {
    explicit EmptyInput(const std::string& msg) : Error(msg) {}
};

struct RoundMismatch : Error {
    explicit RoundMismatch(const std::string& msg) : Error(msg) {}
};

struct InvalidConfig : Error {
    explicit InvalidConfig(const std::string& msg) : Error(msg) {}
};

// data module
struct EmptyDataset : Error {
    explicit EmptyDataset(const std::string& msg) : Error(msg) {}
};

struct FileNotFound : Error {
    explicit FileNotFound(const std::string& msg) : Error(msg) {}
};

struct MalformedHeader : Error {
    explicit MalformedHeader(const std::string& msg) : Error(msg) {}
};

struct UnknownRegion : Error {
    explicit UnknownRegion(const std::string& msg) : Error(msg) {}
};

// transport module
struct CodecError : Error {
    explicit CodecError(const std::string& msg) : Error(msg) {}
};

struct FrameTooShort : CodecError {
    explicit FrameTooShort(const std::string& msg) : CodecError(msg) {}
};

struct LengthMismatch : CodecError {
    explicit LengthMismatch(const std::string& msg) : CodecError(msg) {}
};

struct UnknownKind : CodecError {
    explicit UnknownKind(const std::string& msg) : CodecError(msg) {}
};

struct NonFiniteWeight : CodecError {
    explicit NonFiniteWeight(const std::string& msg) : CodecError(msg) {}
};

struct ConnectionRefused : Error {
    explicit ConnectionRefused(const std::string& msg) : Error(msg) {}
};

struct PartialDelivery : Error {
    explicit PartialDelivery(const std::string& msg) : Error(msg) {}
};

struct AllServersUnreachable : Error {
    explicit AllServersUnreachable(const std::string& msg) : Error(msg) {}
};

// harness module
struct TopologyError : Error {
    explicit TopologyError(const std::string& msg) : Error(msg) {}
};

struct MismatchedConfigs : Error {
    explicit MismatchedConfigs(const std::string& msg) : Error(msg) {}
};

struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

} // namespace fed
