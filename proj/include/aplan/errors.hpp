#pragma once

#include <stdexcept>
#include <string>

namespace aplan {

// Bad user input: malformed scenario, out-of-range probability, unknown host.
class InputError : public std::runtime_error {
  public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Lexical or syntactic error in a PDDL or .pomdp file, with source position.
class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string& what, int line, int column)
        : std::runtime_error(what + " at line " + std::to_string(line) + ", column " +
                             std::to_string(column)),
          line(line),
          column(column) {}
    int line;
    int column;
};

// Input is well-formed but outside the supported structural subset
// (e.g. a cyclic PDDL asset lattice).
class StructureError : public std::runtime_error {
  public:
    explicit StructureError(const std::string& what) : std::runtime_error(what) {}
};

// Combinatorial size guard tripped (brute-force oracles, exact POMDP solver).
class GuardError : public std::runtime_error {
  public:
    explicit GuardError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace aplan
