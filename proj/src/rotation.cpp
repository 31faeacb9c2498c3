#include "telephone/rotation.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <set>

#include "json_io.hpp"
#include "telephone/error.hpp"
#include "telephone/ingest.hpp"
#include "telephone/log.hpp"

namespace telephone {

namespace detail {
extern const std::string_view kBuiltinTripletsLow;
extern const std::string_view kBuiltinTripletsHigh;
}  // namespace detail

using detail::Json;

std::string_view to_string(PlanKind k) {
  switch (k) {
    case PlanKind::model_rotation: return "model_rotation";
    case PlanKind::language_rotation_pivot: return "language_rotation_pivot";
    case PlanKind::language_rotation_direct: return "language_rotation_direct";
  }
  return "model_rotation";
}

PlanKind parse_plan_kind(std::string_view s) {
  if (s == "model_rotation" || s == "model") return PlanKind::model_rotation;
  if (s == "language_rotation_pivot" || s == "language") return PlanKind::language_rotation_pivot;
  if (s == "language_rotation_direct" || s == "language-direct") return PlanKind::language_rotation_direct;
  throw InvalidArgument(fmt::format("unknown plan kind '{}'", s));
}

std::string_view to_string(Diversity d) { return d == Diversity::low ? "low" : "high"; }

Diversity parse_diversity(std::string_view s) {
  if (s == "low") return Diversity::low;
  if (s == "high") return Diversity::high;
  throw InvalidArgument(fmt::format("unknown diversity '{}' (expected low or high)", s));
}

std::size_t RotationPlan::iteration_count() const {
  std::size_t k = 0;
  for (const auto& h : hops) k = std::max(k, h.iteration_index);
  return k;
}

bool plan_applies_to(const RotationPlan& plan, const SentenceRecord& sentence) {
  return plan.source_lang == sentence.source_lang && plan.target_lang == sentence.target_lang;
}

void validate(const RotationPlan& plan) {
  if (plan.plan_id.empty()) throw InvalidArgument("plan has an empty id");
  if (plan.hops.empty()) throw InvalidArgument(fmt::format("plan {} has no hops", plan.plan_id));
  if (plan.hops.front().from_lang != plan.source_lang) {
    throw InvalidArgument(fmt::format("plan {}: first hop starts in {}, source is {}", plan.plan_id,
                                      plan.hops.front().from_lang, plan.source_lang));
  }
  std::size_t expected_iteration = 1;
  for (std::size_t k = 0; k < plan.hops.size(); ++k) {
    const auto& h = plan.hops[k];
    if (h.from_lang == h.to_lang) {
      throw InvalidArgument(fmt::format("plan {}: hop {} translates {} into itself", plan.plan_id, k, h.from_lang));
    }
    if (h.direction == Direction::origin) {
      throw InvalidArgument(fmt::format("plan {}: hop {} has direction origin", plan.plan_id, k));
    }
    if (k > 0 && plan.hops[k - 1].to_lang != h.from_lang) {
      throw InvalidArgument(fmt::format("plan {}: hop {} starts in {} but hop {} ended in {}", plan.plan_id, k,
                                        h.from_lang, k - 1, plan.hops[k - 1].to_lang));
    }
    if (h.iteration_index != expected_iteration) {
      if (h.iteration_index != expected_iteration + 1 || k == 0) {
        throw InvalidArgument(fmt::format("plan {}: hop {} has iteration index {}", plan.plan_id, k, h.iteration_index));
      }
      expected_iteration = h.iteration_index;
    }
  }
}

TripletTable::TripletTable(Diversity diversity, std::map<std::string, Triplet> triplets)
    : diversity_(diversity), triplets_(std::move(triplets)) {
  for (const auto& [src, t] : triplets_) {
    if (t[0] != src) {
      throw InvalidArgument(fmt::format("triplet for {} must start with {}, got {}", src, src, t[0]));
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      throw InvalidArgument(fmt::format("triplet for {} has duplicate languages", src));
    }
  }
}

TripletTable TripletTable::from_json(std::string_view text) {
  const auto j = detail::parse_json(text, "triplet table");
  const auto diversity = parse_diversity(detail::get_string(j, "diversity"));
  auto it = j.find("triplets");
  if (it == j.end() || !it->is_object()) throw FormatError("triplet table: missing 'triplets' object");
  std::map<std::string, Triplet> triplets;
  for (const auto& [src, langs] : it->items()) {
    if (!langs.is_array() || langs.size() != 3) {
      throw FormatError(fmt::format("triplet table: entry '{}' must list exactly 3 languages", src));
    }
    Triplet t;
    for (std::size_t k = 0; k < 3; ++k) {
      if (!langs[k].is_string()) throw FormatError(fmt::format("triplet table: entry '{}' has a non-string", src));
      t[k] = langs[k].get<std::string>();
    }
    triplets.emplace(src, std::move(t));
  }
  try {
    return TripletTable(diversity, std::move(triplets));
  } catch (const InvalidArgument& e) {
    throw FormatError(fmt::format("triplet table: {}", e.what()));
  }
}

TripletTable TripletTable::load(const std::filesystem::path& path) { return from_json(detail::read_file(path)); }

const TripletTable& TripletTable::builtin(Diversity diversity) {
  static const TripletTable low = from_json(detail::kBuiltinTripletsLow);
  static const TripletTable high = from_json(detail::kBuiltinTripletsHigh);
  return diversity == Diversity::low ? low : high;
}

std::vector<std::string> TripletTable::languages() const {
  std::vector<std::string> out;
  for (const auto& [src, t] : triplets_) out.push_back(src);
  return out;
}

const Triplet& lookup_triplet(const TripletTable& table, const std::string& source_lang) {
  auto it = table.triplets().find(source_lang);
  if (it == table.triplets().end()) {
    throw InvalidArgument(fmt::format("no {}-diversity triplet for '{}'; supported languages: {}",
                                      to_string(table.diversity()), source_lang,
                                      fmt::join(table.languages(), ", ")));
  }
  return it->second;
}

RotationPlan build_model_rotation_plan(const std::string& source_lang, const std::string& target_lang,
                                       std::span<const std::string> translators, std::size_t iterations,
                                       std::string plan_id) {
  if (translators.empty()) throw InvalidArgument("model rotation needs at least one translator");
  if (iterations == 0) throw InvalidArgument("iterations must be >= 1");
  if (source_lang == target_lang) {
    throw InvalidArgument(fmt::format("model rotation needs two languages, got {} twice", source_lang));
  }
  std::set<std::string> distinct(translators.begin(), translators.end());
  if (distinct.size() != translators.size()) {
    log::warn("model rotation {}-{}: duplicate translator ids in [{}]", source_lang, target_lang,
              fmt::join(translators, ", "));
  }

  RotationPlan plan;
  plan.plan_id = plan_id.empty() ? fmt::format("mr-{}-{}", source_lang, target_lang) : std::move(plan_id);
  plan.kind = PlanKind::model_rotation;
  plan.source_lang = source_lang;
  plan.target_lang = target_lang;
  plan.hops.reserve(2 * iterations);
  for (std::size_t j = 1; j <= iterations; ++j) {
    const auto& t = translators[(j - 1) % translators.size()];
    plan.hops.push_back({t, source_lang, target_lang, Direction::forward, j});
    plan.hops.push_back({t, target_lang, source_lang, Direction::back, j});
  }
  return plan;
}

RotationPlan build_language_rotation_plan(const std::string& source_lang, const Triplet& triplet,
                                          const LanguageRotationOptions& options) {
  if (triplet[0] == triplet[1] || triplet[1] == triplet[2] || triplet[0] == triplet[2]) {
    throw InvalidArgument(fmt::format("triplet ({}, {}, {}) has a duplicate language", triplet[0], triplet[1], triplet[2]));
  }
  if (options.pivot && std::find(triplet.begin(), triplet.end(), *options.pivot) != triplet.end()) {
    throw InvalidArgument(fmt::format("pivot {} is part of the triplet", *options.pivot));
  }
  if (options.iterations == 0) throw InvalidArgument("iterations must be >= 1");
  if (options.hops_per_iteration == 0) throw InvalidArgument("hops_per_iteration must be >= 1");
  const auto start = std::find(triplet.begin(), triplet.end(), source_lang);
  if (start == triplet.end()) {
    throw InvalidArgument(fmt::format("source language {} is not in the triplet ({}, {}, {})", source_lang,
                                      triplet[0], triplet[1], triplet[2]));
  }
  const auto s = static_cast<std::size_t>(start - triplet.begin());
  auto lang = [&](std::size_t k) -> const std::string& { return triplet[(s + k) % 3]; };

  RotationPlan plan;
  plan.source_lang = source_lang;
  plan.target_lang = options.target_lang;
  if (options.pivot) {
    plan.kind = PlanKind::language_rotation_pivot;
    plan.plan_id = options.plan_id.empty() ? fmt::format("lrp-{}", source_lang) : options.plan_id;
    for (std::size_t k = 1; k <= options.iterations; ++k) {
      plan.hops.push_back({options.translator_id, lang(k - 1), *options.pivot, Direction::forward, k});
      plan.hops.push_back({options.translator_id, *options.pivot, lang(k), Direction::back, k});
    }
  } else {
    plan.kind = PlanKind::language_rotation_direct;
    plan.plan_id = options.plan_id.empty() ? fmt::format("lrd-{}", source_lang) : options.plan_id;
    const std::size_t total = options.iterations * options.hops_per_iteration;
    for (std::size_t m = 0; m < total; ++m) {
      const bool first_in_iteration = m % options.hops_per_iteration == 0;
      plan.hops.push_back({options.translator_id, lang(m), lang(m + 1),
                           first_in_iteration ? Direction::forward : Direction::back,
                           m / options.hops_per_iteration + 1});
    }
  }
  return plan;
}

PlanConfig parse_plan_config(std::string_view json_text) {
  const auto j = detail::parse_json(json_text, "plan config");
  auto setups = j.find("setups");
  if (setups == j.end() || !setups->is_array()) throw FormatError("plan config: missing 'setups' array");
  PlanConfig config;
  for (const auto& s : *setups) {
    SetupConfig c;
    try {
      c.kind = parse_plan_kind(detail::get_string(s, "kind"));
      if (s.contains("translators")) c.translators = s.at("translators").get<std::vector<std::string>>();
      if (s.contains("triplet")) {
        const auto t = s.at("triplet").get<std::vector<std::string>>();
        if (t.size() != 3) throw FormatError("'triplet' must list exactly 3 languages");
        c.triplet = Triplet{t[0], t[1], t[2]};
      }
      if (s.contains("diversity")) c.diversity = parse_diversity(detail::get_string(s, "diversity"));
      if (s.contains("pivot") && !s.at("pivot").is_null()) c.pivot = detail::get_string(s, "pivot");
      c.translator = detail::get_string_or(s, "translator", c.translator);
      if (s.contains("iterations")) c.iterations = detail::get_size(s, "iterations");
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(fmt::format("plan config setup {}: {}", config.setups.size(), e.what()));
    } catch (const Error& e) {
      throw FormatError(fmt::format("plan config setup {}: {}", config.setups.size(), e.what()));
    }
    config.setups.push_back(std::move(c));
  }
  return config;
}

PlanConfig default_model_rotation_config() {
  PlanConfig config;
  for (std::size_t shift = 0; shift < 3; ++shift) {
    SetupConfig c;
    c.kind = PlanKind::model_rotation;
    for (std::size_t k = 0; k < 3; ++k) c.translators.emplace_back(kDefaultTranslators[(shift + k) % 3]);
    config.setups.push_back(std::move(c));
  }
  return config;
}

PlanConfig default_language_rotation_config(Diversity diversity, bool direct, std::string pivot) {
  PlanConfig config;
  for (const char* t : kDefaultTranslators) {
    SetupConfig c;
    c.kind = direct ? PlanKind::language_rotation_direct : PlanKind::language_rotation_pivot;
    c.diversity = diversity;
    if (!direct) c.pivot = pivot;
    c.translator = t;
    config.setups.push_back(std::move(c));
  }
  return config;
}

namespace {

std::string_view kind_tag(PlanKind k) {
  switch (k) {
    case PlanKind::model_rotation: return "mr";
    case PlanKind::language_rotation_pivot: return "lrp";
    case PlanKind::language_rotation_direct: return "lrd";
  }
  return "mr";
}

RotationPlan build_setup(const std::string& src, const std::string& tgt, const SetupConfig& setup,
                         std::size_t setup_number, std::size_t direct_hops_per_iteration,
                         const TripletTables& tables) {
  const auto id = fmt::format("{}-{}-{}-s{}", kind_tag(setup.kind), src, tgt, setup_number);
  if (setup.kind == PlanKind::model_rotation) {
    std::vector<std::string> translators = setup.translators;
    if (translators.empty()) translators.assign(kDefaultTranslators.begin(), kDefaultTranslators.end());
    return build_model_rotation_plan(src, tgt, translators, setup.iterations, id);
  }
  Triplet triplet;
  if (setup.triplet) {
    triplet = *setup.triplet;
  } else {
    const auto diversity = setup.diversity.value_or(Diversity::low);
    const TripletTable* table = diversity == Diversity::low ? tables.low : tables.high;
    triplet = lookup_triplet(*table, src);
  }
  LanguageRotationOptions opts;
  opts.translator_id = setup.translator;
  opts.iterations = setup.iterations;
  opts.target_lang = tgt;
  opts.plan_id = id;
  if (setup.kind == PlanKind::language_rotation_pivot) {
    opts.pivot = setup.pivot.value_or("en");
  } else {
    if (setup.pivot) throw InvalidArgument(fmt::format("setup {}: direct rotation takes no pivot", setup_number));
    opts.hops_per_iteration = direct_hops_per_iteration;
  }
  return build_language_rotation_plan(src, triplet, opts);
}

}  // namespace

std::vector<RotationPlan> build_plans(const std::string& source_lang, const std::string& target_lang,
                                      const PlanConfig& config, const TripletTables& tables) {
  if (config.setups.empty()) throw InvalidArgument("plan config has no setups");
  std::vector<RotationPlan> plans;
  for (std::size_t k = 0; k < config.setups.size(); ++k) {
    plans.push_back(build_setup(source_lang, target_lang, config.setups[k], k + 1, 1, tables));
  }
  return plans;
}

std::vector<RotationPlan> standard_18_round_plans(const std::string& source_lang, const std::string& target_lang,
                                                  const PlanConfig& config, const TripletTables& tables) {
  constexpr std::size_t kSetups = 3, kDirections = 2, kIterations = 3;
  if (config.setups.size() != kSetups) {
    throw InvalidArgument(fmt::format("the 18-round design needs exactly {} setups, config has {}", kSetups,
                                      config.setups.size()));
  }
  std::vector<RotationPlan> plans;
  for (std::size_t k = 0; k < kSetups; ++k) {
    const auto& setup = config.setups[k];
    if (setup.iterations != kIterations) {
      throw InvalidArgument(fmt::format("setup {} has {} iterations; the 18-round design uses {}", k + 1,
                                        setup.iterations, kIterations));
    }
    plans.push_back(build_setup(source_lang, target_lang, setup, k + 1, kDirections, tables));
  }
  std::size_t hops = 0;
  for (const auto& p : plans) hops += p.hops.size();
  if (hops != kSetups * kDirections * kIterations) {
    throw InvalidArgument(fmt::format("plans total {} hops, expected 18", hops));
  }
  return plans;
}

std::vector<std::size_t> comparison_positions(const RotationPlan& plan, ComparisonRule rule) {
  std::vector<std::size_t> out;
  const auto& hops = plan.hops;
  switch (rule) {
    case ComparisonRule::every_hop:
      for (std::size_t k = 0; k < hops.size(); ++k) out.push_back(k + 1);
      break;
    case ComparisonRule::end_of_iteration:
      for (std::size_t k = 0; k < hops.size(); ++k) {
        if (k + 1 == hops.size() || hops[k + 1].iteration_index != hops[k].iteration_index) out.push_back(k + 1);
      }
      break;
    case ComparisonRule::forward_output: {
      std::size_t last_iteration = 0;
      for (std::size_t k = 0; k < hops.size(); ++k) {
        if (hops[k].direction == Direction::forward && hops[k].iteration_index != last_iteration) {
          out.push_back(k + 1);
          last_iteration = hops[k].iteration_index;
        }
      }
      break;
    }
  }
  return out;
}

std::string language_at(const RotationPlan& plan, std::size_t position) {
  if (position == 0) return plan.source_lang;
  if (position > plan.hops.size()) {
    throw InvalidArgument(fmt::format("plan {} has no position {}", plan.plan_id, position));
  }
  return plan.hops[position - 1].to_lang;
}

std::string plans_to_json(std::span<const RotationPlan> plans) {
  Json arr = Json::array();
  for (const auto& p : plans) {
    Json jp;
    jp["plan_id"] = p.plan_id;
    jp["kind"] = std::string(to_string(p.kind));
    jp["source_lang"] = p.source_lang;
    jp["target_lang"] = p.target_lang;
    Json hops = Json::array();
    for (const auto& h : p.hops) {
      Json jh;
      jh["translator_id"] = h.translator_id;
      jh["from_lang"] = h.from_lang;
      jh["to_lang"] = h.to_lang;
      jh["direction"] = std::string(to_string(h.direction));
      jh["iteration_index"] = h.iteration_index;
      hops.push_back(std::move(jh));
    }
    jp["hops"] = std::move(hops);
    arr.push_back(std::move(jp));
  }
  Json root;
  root["plans"] = std::move(arr);
  return detail::dump(root, 2) + "\n";
}

std::vector<RotationPlan> plans_from_json(std::string_view text) {
  const auto root = detail::parse_json(text, "plan file");
  auto arr = root.find("plans");
  if (arr == root.end() || !arr->is_array()) throw FormatError("plan file: missing 'plans' array");
  std::vector<RotationPlan> plans;
  std::set<std::string> ids;
  for (const auto& jp : *arr) {
    RotationPlan p;
    try {
      p.plan_id = detail::get_string(jp, "plan_id");
      p.kind = parse_plan_kind(detail::get_string(jp, "kind"));
      p.source_lang = detail::get_string(jp, "source_lang");
      p.target_lang = detail::get_string_or(jp, "target_lang", "");
      for (const auto& jh : jp.at("hops")) {
        Hop h;
        h.translator_id = detail::get_string(jh, "translator_id");
        h.from_lang = detail::get_string(jh, "from_lang");
        h.to_lang = detail::get_string(jh, "to_lang");
        h.direction = parse_direction(detail::get_string(jh, "direction"));
        h.iteration_index = detail::get_size(jh, "iteration_index");
        p.hops.push_back(std::move(h));
      }
      validate(p);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(fmt::format("plan file, plan {}: {}", plans.size(), e.what()));
    } catch (const Error& e) {
      throw FormatError(fmt::format("plan file, plan {}: {}", plans.size(), e.what()));
    }
    if (!ids.insert(p.plan_id).second) throw FormatError(fmt::format("plan file: duplicate plan id '{}'", p.plan_id));
    plans.push_back(std::move(p));
  }
  return plans;
}

void write_plans(std::span<const RotationPlan> plans, const std::filesystem::path& path) {
  detail::write_file_atomic(path, plans_to_json(plans));
}

std::vector<RotationPlan> read_plans(const std::filesystem::path& path) {
  return plans_from_json(detail::read_file(path));
}

}  // namespace telephone
