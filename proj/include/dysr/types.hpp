#pragma once

#include <string>
#include <vector>

#include "dysr/numerics.hpp"

namespace dysr {

/// One mashup-creation record: the requirement vector, when it happened, and
/// the set of component services it was satisfied with. Service references
/// are dense registry indices; timestamps are fractional days since the
/// corpus epoch.
struct RequirementSample {
  std::string id;
  double t = 0.0;
  DenseVector v_r;
  std::vector<int> components;  // sorted, unique
};

struct ServiceRecord {
  std::string id;
  std::string name;
  DenseVector z0;  // initial representation, may be empty until resolved
};

struct CorpusSplit {
  std::vector<RequirementSample> init_history;
  std::vector<RequirementSample> train;
  std::vector<RequirementSample> test;
};

}  // namespace dysr
