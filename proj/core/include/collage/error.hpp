#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace collage {

enum class ErrorKind {
  invalid_input,     // precondition violation or malformed data
  io,                // filesystem / decode / encode failure
  corrupt_bank,      // damaged manifest or checksum mismatch
  version_mismatch,  // on-disk format newer/older than this build
  missing_asset,     // manifest references a file that is not there
  backend_failure,   // a pluggable backend misbehaved
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace collage
