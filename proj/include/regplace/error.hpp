#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace regplace {

enum class ErrorCode {
  Io,          // file not found / unreadable
  Parse,       // syntax error in a text format
  Validation,  // structural netlist violation
  Placement,   // placement does not match its netlist
  Capacity,    // die too small for the cells
  Schema,      // dataset / model schema mismatch
  Numeric,     // factorization or solver failure
  Config,      // bad or unknown configuration key
  Domain,      // any other precondition failure
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace regplace
