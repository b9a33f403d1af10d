// Copyright 2026 The vecmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <functional>
#include <vector>

#include "vecmpc/mpc.hpp"

namespace vecmpc {

struct ClusterOptions {
  uint64_t dealer_seed = 1;
  uint64_t session_id = 1;
  bool record_transcripts = false;
  std::chrono::milliseconds timeout = kDefaultRoundTimeout;
  FixedPointCodec codec;
};

struct ClusterRun {
  std::vector<TrafficStats> stats;
  std::vector<Transcript> transcripts;
  double wall_seconds = 0;
  double preprocessing_seconds = 0;
};

using PartyScript = std::function<void(PartyContext&)>;

// Runs `script` on n in-process servers (one thread each) over a LocalHub,
// with a shared dealer. If any party throws, the session is aborted and the
// first error is rethrown.
ClusterRun run_local_cluster(int n, int t, const PartyScript& script,
                             const ClusterOptions& options = {});

}  // namespace vecmpc
