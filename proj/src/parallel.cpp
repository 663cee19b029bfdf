#include "meanfield/parallel.hpp"

#include <cstdlib>
#include <string>

namespace meanfield {

unsigned resolve_thread_count(unsigned requested) {
  if (const char* env = std::getenv("MEANFIELD_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (...) {
      // malformed value: fall through to the flag
    }
  }
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace meanfield
