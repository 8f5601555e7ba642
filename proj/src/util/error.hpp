// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace rtopf {

enum class Errc {
  config,   // bad config / schema violation
  io,       // missing or unwritable file
  solver,   // numerical failure (non-convergence, singular system)
  usage,    // API misuse (precondition violation)
  gate,     // acceptance gate not met (eval gate mode)
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace rtopf
