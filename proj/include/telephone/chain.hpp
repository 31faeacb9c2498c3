#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace telephone {

enum class Direction { origin, forward, back };

std::string_view to_string(Direction d);
Direction parse_direction(std::string_view s);

/// One text in a chain. Index 0 is the untranslated original.
struct IterationOutput {
  std::size_t index = 0;
  std::string text;
  std::string lang;
  std::string translator_id;  // empty for index 0
  Direction direction = Direction::origin;

  bool operator==(const IterationOutput&) const = default;
};

/// A sentence's passage through one rotation plan.
struct TranslationChain {
  std::string sentence_id;
  std::string plan_id;
  std::vector<IterationOutput> iterations;

  bool operator==(const TranslationChain&) const = default;

  /// Number of executed hops (outputs after the original).
  std::size_t hop_count() const { return iterations.empty() ? 0 : iterations.size() - 1; }
};

/// Throws InvalidArgument unless indices run 0..n-1, index 0 is the origin,
/// and every text is non-empty.
void validate(const TranslationChain& chain);

struct ChainFailure {
  std::string sentence_id;
  std::string plan_id;
  std::string error;

  bool operator==(const ChainFailure&) const = default;
};

/// Bookkeeping for one `run`/`resume` invocation.
struct RunManifest {
  std::vector<std::string> plan_ids;
  std::vector<std::string> backend_ids;
  std::uint64_t seed = 0;
  std::string started_at;
  std::string finished_at;
  std::string status = "complete";  // complete | partial | aborted
  std::size_t completed_chains = 0;
  std::size_t failed_chains = 0;
  std::size_t skipped_chains = 0;  // never attempted because the run aborted
  std::size_t reused_chains = 0;   // carried over from a previous run on resume
  std::vector<ChainFailure> failures;

  bool operator==(const RunManifest&) const = default;
};

/// Current UTC time as ISO-8601 ("2026-01-02T03:04:05Z").
std::string utc_timestamp();

}  // namespace telephone
