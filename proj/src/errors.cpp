#include "mfgp/errors.hpp"

#include <atomic>
#include <iostream>

namespace mfgp {

namespace {
std::atomic<bool> g_muted{false};
}

void warn(const std::string& message) {
  if (!g_muted.load()) std::cerr << "warning: " << message << '\n';
}

void set_warnings_muted(bool muted) { g_muted.store(muted); }

}  // namespace mfgp
