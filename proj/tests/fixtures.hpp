#pragma once

// Shared profile and kernel for the unit tests. Both are cached on disk under
// the build tree, so only the first test process pays for the kernel build.

#include <spikechain/spikechain.hpp>

namespace fixtures {

inline spikechain::RunConfig base_config() {
  spikechain::RunConfig c;
  c.cache_dir = SPIKECHAIN_TEST_CACHE;
  return c;
}

inline const spikechain::GroundStateProfile& profile() {
  static const spikechain::GroundStateProfile prof =
      spikechain::obtain_profile(base_config(), [](const std::string&) {});
  return prof;
}

inline const spikechain::InteractionKernel& kernel() {
  static const spikechain::InteractionKernel k =
      spikechain::obtain_kernel(base_config(), profile(), [](const std::string&) {});
  return k;
}

inline spikechain::CurvatureModel symmetric_model() { return spikechain::CurvatureModel::family(1.0, 1.0, 20.0, 0.0); }

}  // namespace fixtures
