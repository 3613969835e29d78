#pragma once

#include <span>
#include <vector>

namespace gsbag {

struct RankInfo {
  std::vector<double> ranks;  ///< 1-based midranks, in input order
  double tie_term = 0.0;      ///< sum over tie groups of (t^3 - t)
  bool has_ties = false;
};

/// Ascending midranks: tied values share the average of the ranks they span.
RankInfo midranks(std::span<const double> values);

}  // namespace gsbag
