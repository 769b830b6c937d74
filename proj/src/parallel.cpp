#include "lcw/parallel.hpp"

#include <cstdlib>
#include <string>

namespace lcw {

std::size_t thread_limit() {
  static const std::size_t limit = [] {
    const char* env = std::getenv("LCW_THREADS");
    if (!env || !*env) return std::size_t{1};
    try {
      long v = std::stol(env);
      return v < 1 ? std::size_t{1} : static_cast<std::size_t>(v);
    } catch (...) {
      return std::size_t{1};
    }
  }();
  return limit;
}

}  // namespace lcw
