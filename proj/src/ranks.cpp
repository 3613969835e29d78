#include "gsbag/ranks.hpp"

#include <algorithm>
#include <numeric>

namespace gsbag {

RankInfo midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  RankInfo info;
  info.ranks.resize(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 (0-based) hold ranks i+1..j
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) info.ranks[order[k]] = rank;
    const auto t = static_cast<double>(j - i);
    if (j - i > 1) {
      info.has_ties = true;
      info.tie_term += t * t * t - t;
    }
    i = j;
  }
  return info;
}

}  // namespace gsbag
