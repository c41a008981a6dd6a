#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace froglab {

using VertexId = std::uint64_t;     // external, stable across serialization
using VertexIndex = std::uint32_t;  // dense preorder index inside one tree

inline constexpr VertexIndex kNoVertex = std::numeric_limits<VertexIndex>::max();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Status : int {
  Ok = 0,
  InvalidArgument = 1,
  ParseError = 2,
  BudgetExceeded = 3,
  DepthExceeded = 4,
  IoError = 5,
  InvariantFailure = 6,
};

class Error : public std::runtime_error {
 public:
  Error(Status code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Status code() const { return code_; }

 private:
  Status code_;
};

[[noreturn]] inline void fail(Status code, const std::string& what) { throw Error(code, what); }

inline const char* version_string() {
#ifdef FROGLAB_VERSION_STRING
  return FROGLAB_VERSION_STRING;
#else
  return "0.0.0";
#endif
}

}  // namespace froglab
