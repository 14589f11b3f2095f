//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLNCE_ERROR_H_
#define MOLNCE_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace molnce {

// Base of every exception raised by the library.
class Error: public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed input files or records (SMILES, JSON graphs, grammar files).
class DataError: public Error {
public:
  using Error::Error;
};

class SyntaxError: public DataError {
public:
  SyntaxError(std::size_t position, const std::string &reason)
      : DataError("syntax error at position " + std::to_string(position)
                  + ": " + reason),
        position_(position) { }

  std::size_t position() const noexcept { return position_; }

private:
  std::size_t position_;
};

class UnsupportedFeature: public DataError {
public:
  using DataError::DataError;
};

class NonTerminalPresent: public Error {
public:
  using Error::Error;
};

class DisconnectedInput: public DataError {
public:
  using DataError::DataError;
};

class LengthMismatch: public Error {
public:
  using Error::Error;
};

class InvalidRule: public DataError {
public:
  using DataError::DataError;
};

class NoPendingNonterminal: public Error {
public:
  using Error::Error;
};

using EmptyAgenda = NoPendingNonterminal;

class IllegalRule: public Error {
public:
  using Error::Error;
};

class AgendaCorruption: public Error {
public:
  using Error::Error;
};

class IllegalSequence: public Error {
public:
  IllegalSequence(std::size_t step, const std::string &reason)
      : Error("illegal rule at step " + std::to_string(step) + ": " + reason),
        step_(step) { }

  std::size_t step() const noexcept { return step_; }

private:
  std::size_t step_;
};

class IncompleteDerivation: public Error {
public:
  using Error::Error;
};

class ShapeMismatch: public Error {
public:
  using Error::Error;
};

class NumericalError: public Error {
public:
  using Error::Error;
};

class EvaluatorProtocolError: public Error {
public:
  using Error::Error;
};

class BudgetExhausted: public Error {
public:
  using Error::Error;
};

// No legal rule at the focus non-terminal (a dead end).
class EmptyLegalSet: public Error {
public:
  using Error::Error;
};

// A frozen grammar lacks a rule or child tuple needed to parse a molecule.
class NotCovered: public Error {
public:
  using Error::Error;
};

}  // namespace molnce

#endif  // MOLNCE_ERROR_H_
