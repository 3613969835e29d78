#pragma once

#include <string>

#include "gsbag/dataio.hpp"

#ifndef GSBAG_DATA_DIR
#error "GSBAG_DATA_DIR must point at the bundled data directory"
#endif

namespace gsbag::testing {

inline std::string data_path(const std::string& relative) { return std::string(GSBAG_DATA_DIR) + "/" + relative; }

inline AnalysisBundle tiny_bundle(BundleOptions options = {}) {
  return build_bundle(parse_expression_matrix(data_path("tiny/expression.tsv")),
                      parse_phenotype(data_path("tiny/phenotype.tsv"), "status"),
                      parse_gmt(data_path("tiny/sets.gmt")), parse_annotation(data_path("tiny/annotation.tsv")),
                      options);
}

}  // namespace gsbag::testing
