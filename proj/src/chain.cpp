#include "telephone/chain.hpp"

#include <fmt/format.h>

#include <chrono>
#include <ctime>

#include "telephone/error.hpp"

namespace telephone {

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::origin: return "origin";
    case Direction::forward: return "forward";
    case Direction::back: return "back";
  }
  return "origin";
}

Direction parse_direction(std::string_view s) {
  if (s == "origin") return Direction::origin;
  if (s == "forward") return Direction::forward;
  if (s == "back") return Direction::back;
  throw InvalidArgument(fmt::format("unknown direction '{}'", s));
}

void validate(const TranslationChain& chain) {
  if (chain.iterations.empty()) {
    throw InvalidArgument(fmt::format("chain {}/{} has no iterations", chain.sentence_id, chain.plan_id));
  }
  for (std::size_t i = 0; i < chain.iterations.size(); ++i) {
    const auto& it = chain.iterations[i];
    if (it.index != i) {
      throw InvalidArgument(fmt::format("chain {}/{}: iteration {} has index {}", chain.sentence_id,
                                        chain.plan_id, i, it.index));
    }
    if (it.text.empty()) {
      throw InvalidArgument(
          fmt::format("chain {}/{}: iteration {} is empty", chain.sentence_id, chain.plan_id, i));
    }
    if ((i == 0) != (it.direction == Direction::origin)) {
      throw InvalidArgument(fmt::format("chain {}/{}: only iteration 0 may have direction origin",
                                        chain.sentence_id, chain.plan_id));
    }
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace telephone
