#pragma once

#include "pistol/dataset.hpp"
#include "pistol/unlearn.hpp"

namespace pistol::test {

/// Small bound model with random parameters: chain of `nodes` companies.
inline sim::ToyMemorizer small_model(std::uint64_t seed, std::size_t nodes = 3, std::size_t width = 8,
                                     double scale = 0.5) {
  const CompiledDataset ds = compile(ChainTopology{nodes}, 1);
  sim::ToyMemorizer m = sim::ToyMemorizer::for_dataset(ds, sim::default_refusals(), width);
  m.initialize(seed, scale);
  return m;
}

inline const CompiledDataset& chain3() {
  static const CompiledDataset ds = compile(ChainTopology{3}, 1);
  return ds;
}

/// Dataset 1 memorized once per process (seed 1, width 64).
inline const sim::MemorizedModel& dataset1_model() {
  static const sim::MemorizedModel m = [] {
    sim::MemorizeConfig mc;
    mc.seed = 1;
    return sim::memorize(compile(Dataset1Topology{}, 1), mc);
  }();
  return m;
}

inline const CompiledDataset& dataset1() {
  static const CompiledDataset ds = compile(Dataset1Topology{}, 1);
  return ds;
}

}  // namespace pistol::test
