#pragma once

#include <stdexcept>
#include <string>

namespace wepo {

// Base for all recoverable errors raised by the pipeline. Subclasses exist so
// callers and tests can catch a specific failure mode by type.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class EmptyInputError : public Error {
public:
    using Error::Error;
};

class UnknownNodeError : public Error {
public:
    using Error::Error;
};

class UnknownElementError : public Error {
public:
    using Error::Error;
};

// Malformed record or file content; carries a 1-based line/record position.
class ParseError : public Error {
public:
    ParseError(const std::string& what, long line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

class DuplicateIdError : public Error {
public:
    using Error::Error;
};

class MissingTruthError : public Error {
public:
    using Error::Error;
};

class EmptyCandidatesError : public Error {
public:
    using Error::Error;
};

class NoCandidatesError : public Error {
public:
    using Error::Error;
};

class ActionNotCandidateError : public Error {
public:
    using Error::Error;
};

class EmptyDatasetError : public Error {
public:
    using Error::Error;
};

class EmptyEvalSetError : public Error {
public:
    using Error::Error;
};

class MissingStepError : public Error {
public:
    using Error::Error;
};

class DuplicatePredictionError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Raised per step when a page cannot yield preference pairs (fewer than two
// candidates after pruning). Corpus drivers catch it and count the skip.
class SkippedStep : public Error {
public:
    using Error::Error;
};

}  // namespace wepo
