#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace reidx {

// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Two vectors (or a vector and a model/gallery) disagree on dimensionality.
class DimensionMismatch : public Error {
public:
    DimensionMismatch(std::size_t a, std::size_t b)
        : Error("dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}
    explicit DimensionMismatch(const std::string& what) : Error(what) {}
};

// A precondition on a plain argument failed (non-positive size, negative weight, ...).
class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& what) : Error(what) {}
};

class InvalidKeypoints : public Error {
public:
    explicit InvalidKeypoints(const std::string& what) : Error(what) {}
};

// Clamping a box against the frame left nothing.
class EmptyBox : public Error {
public:
    explicit EmptyBox(const std::string& what) : Error(what) {}
};

class RegionMismatch : public Error {
public:
    explicit RegionMismatch(const std::string& what) : Error(what) {}
};

class LengthMismatch : public Error {
public:
    explicit LengthMismatch(const std::string& what) : Error(what) {}
};

class InsufficientData : public Error {
public:
    explicit InsufficientData(const std::string& what) : Error(what) {}
};

class TooFewMembers : public Error {
public:
    explicit TooFewMembers(const std::string& what) : Error(what) {}
};

// A group cannot be split because every member descriptor is identical.
class Unsplittable : public Error {
public:
    explicit Unsplittable(const std::string& what) : Error(what) {}
};

class UnknownGroup : public Error {
public:
    explicit UnknownGroup(const std::string& what) : Error(what) {}
};

// A query label has no match in the gallery; average precision is undefined.
class NoRelevant : public Error {
public:
    explicit NoRelevant(const std::string& what) : Error(what) {}
};

class InvalidSpec : public Error {
public:
    explicit InvalidSpec(const std::string& what) : Error(what) {}
};

// Malformed or mismatched input data: bad magic, unsupported version,
// truncated payload, checksum mismatch.
class FormatError : public Error {
public:
    explicit FormatError(const std::string& what) : Error(what) {}
};

}  // namespace reidx
