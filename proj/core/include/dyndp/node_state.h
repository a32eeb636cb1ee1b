// Copyright 2026 The DynDP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DYNDP_NODE_STATE_H_
#define DYNDP_NODE_STATE_H_

#include <vector>

namespace dyndp {

// Push-sum state of one node: parameters x, scalar weight w > 0 and the
// de-biased parameters z = x / w at which gradients are evaluated.
struct NodeState {
  std::vector<double> x;
  double w = 1.0;
  std::vector<double> z;

  friend bool operator==(const NodeState&, const NodeState&) = default;
};

}  // namespace dyndp

#endif  // DYNDP_NODE_STATE_H_
