#include "coreg/types.hpp"

#include "coreg/error.hpp"

#include <algorithm>
#include <string>

namespace coreg {

IndexSet normalize_index_set(IndexSet omega, Index n) {
  std::sort(omega.begin(), omega.end());
  omega.erase(std::unique(omega.begin(), omega.end()), omega.end());
  if (!omega.empty() && (omega.front() < 0 || omega.back() >= n)) {
    throw Error("index set out of range [0, " + std::to_string(n) + ")");
  }
  return omega;
}

IndexSet complement(const IndexSet& omega, Index n) {
  IndexSet out;
  out.reserve(static_cast<std::size_t>(n) - omega.size());
  auto it = omega.begin();
  for (Index i = 0; i < n; ++i) {
    if (it != omega.end() && *it == i) {
      ++it;
    } else {
      out.push_back(i);
    }
  }
  return out;
}

}  // namespace coreg

#include "coreg/version.hpp"

namespace coreg {

const char* version() { return COREG_VERSION; }

}  // namespace coreg
