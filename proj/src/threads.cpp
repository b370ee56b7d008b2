#include "tvflow/types.hpp"

#include <cstdlib>

namespace tvflow {

int thread_cap() {
  static const int cap = [] {
    const char* env = std::getenv("TVFLOW_THREADS");
    if (env == nullptr) return 1;
    int v = std::atoi(env);
    return v < 1 ? 1 : v;
  }();
  return cap;
}

}  // namespace tvflow
