#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nodalgraph {

/// Invalid graph data (lengths, weights, robin blocks, connectivity).
class GraphError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Syntax or semantic error while reading a graph or basis-table document.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Numerical failure inside the spectral solver (budget exhausted, inconsistent nullspace, ...).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A basis table or strategy that cannot be realised inside an eigenspace.
class BasisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace nodalgraph
