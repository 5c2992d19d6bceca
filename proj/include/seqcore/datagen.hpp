#pragma once

#include <cstdint>
#include <vector>

#include "seqcore/core.hpp"

namespace seqcore {

struct LinearSample {
  Dataset data;
  Vector truth;  // coefficient vector h
};

// x_i with standard normal entries, h uniform in [coef_lo, coef_hi]^d,
// y_i = <h, x_i> + N(0, noise_var).
LinearSample gen_linear(Index n, Index d, double coef_lo = -5.0, double coef_hi = 5.0, double noise_var = 4.0,
                        std::uint64_t seed = 0);

struct BlobSample {
  Dataset data;  // responses hold the labels as doubles
  std::vector<int> labels;
  std::vector<Vector> means;
};

// k isotropic unit-variance blobs in D dimensions whose means are pairwise at
// least separation * sqrt(D) apart. Labels are drawn uniformly.
BlobSample gen_gmm(Index n, Index dim, Index k, double separation, std::uint64_t seed = 0);

}  // namespace seqcore
