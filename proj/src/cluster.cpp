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

#include "vecmpc/cluster.hpp"

#include <exception>
#include <mutex>
#include <thread>

namespace vecmpc {

ClusterRun run_local_cluster(int n, int t, const PartyScript& script,
                             const ClusterOptions& options) {
  const ShareScheme scheme(n, t);
  LocalHub hub(n);
  SharedDealer dealer(scheme, options.dealer_seed);

  std::vector<std::unique_ptr<Session>> sessions;
  std::vector<std::unique_ptr<PreprocSource>> sources;
  for (int p = 0; p < n; ++p) {
    sessions.push_back(std::make_unique<Session>(hub.endpoint(static_cast<PartyId>(p)),
                                                 options.session_id, options.timeout,
                                                 options.record_transcripts));
    sources.push_back(dealer.source_for(static_cast<PartyId>(p)));
  }

  std::mutex mu;
  std::exception_ptr first_error;
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::thread> threads;
  for (int p = 0; p < n; ++p) {
    threads.emplace_back([&, p] {
      try {
        PartyContext ctx(scheme, options.codec, *sessions[p], *sources[p]);
        script(ctx);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first_error) {
          first_error = std::current_exception();
          hub.abort_session(options.session_id, "party " + std::to_string(p) + " failed");
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  if (first_error) std::rethrow_exception(first_error);

  ClusterRun run;
  run.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  run.preprocessing_seconds = dealer.generation_seconds();
  for (int p = 0; p < n; ++p) {
    run.stats.push_back(sessions[p]->stats());
    run.transcripts.push_back(sessions[p]->transcript());
  }
  return run;
}

}  // namespace vecmpc
