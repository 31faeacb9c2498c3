#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "telephone/chain.hpp"
#include "telephone/scores.hpp"

namespace telephone {

struct SentenceRecord;

/// One translation step within a plan.
struct Hop {
  std::string translator_id;
  std::string from_lang;
  std::string to_lang;
  Direction direction = Direction::forward;  // forward or back
  std::size_t iteration_index = 1;           // 1-based

  bool operator==(const Hop&) const = default;
};

enum class PlanKind { model_rotation, language_rotation_pivot, language_rotation_direct };

std::string_view to_string(PlanKind k);
PlanKind parse_plan_kind(std::string_view s);

struct RotationPlan {
  std::string plan_id;
  PlanKind kind = PlanKind::model_rotation;
  std::vector<Hop> hops;
  std::string source_lang;
  std::string target_lang;  // language pair the plan was built for

  /// Highest iteration index among the hops.
  std::size_t iteration_count() const;

  bool operator==(const RotationPlan&) const = default;
};

/// True when the plan was built for this sentence's language pair.
bool plan_applies_to(const RotationPlan& plan, const SentenceRecord& sentence);

/// Throws InvalidArgument if hops do not chain or iteration indices are not
/// contiguous from 1.
void validate(const RotationPlan& plan);

using Triplet = std::array<std::string, 3>;

enum class Diversity { low, high };

std::string_view to_string(Diversity d);
Diversity parse_diversity(std::string_view s);

/// Source language -> ordered triplet of rotation languages.
class TripletTable {
 public:
  TripletTable(Diversity diversity, std::map<std::string, Triplet> triplets);

  /// The table compiled in from data/triplets_{low,high}.json.
  static const TripletTable& builtin(Diversity diversity);
  /// Parses {"diversity": "low"|"high", "triplets": {"cs": ["cs","pl","ru"], ...}}.
  static TripletTable from_json(std::string_view text);
  static TripletTable load(const std::filesystem::path& path);

  Diversity diversity() const noexcept { return diversity_; }
  const std::map<std::string, Triplet>& triplets() const noexcept { return triplets_; }
  std::vector<std::string> languages() const;

 private:
  Diversity diversity_;
  std::map<std::string, Triplet> triplets_;
};

/// Throws InvalidArgument listing the supported languages when absent.
const Triplet& lookup_triplet(const TripletTable& table, const std::string& source_lang);

/// Fixed language pair, translator changes each iteration in cyclic order.
/// Hop pair j uses translators[(j - 1) % size] for src->tgt then tgt->src.
RotationPlan build_model_rotation_plan(const std::string& source_lang, const std::string& target_lang,
                                       std::span<const std::string> translators, std::size_t iterations,
                                       std::string plan_id = {});

struct LanguageRotationOptions {
  std::optional<std::string> pivot;  // nullopt = direct variant
  std::string translator_id = "default";
  std::size_t iterations = 3;
  /// Direct variant only: consecutive hops grouped into one iteration.
  std::size_t hops_per_iteration = 1;
  std::string target_lang;  // pair tag recorded on the plan
  std::string plan_id;
};

/// Fixed translator, language cycles through the triplet starting at
/// source_lang's position. Pivoted: iteration k goes triplet[k-1] -> pivot
/// (forward) -> triplet[k] (back). Direct: each hop moves to the next triplet
/// language.
RotationPlan build_language_rotation_plan(const std::string& source_lang, const Triplet& triplet,
                                          const LanguageRotationOptions& options);

/// One rotation setup from a plan config file.
struct SetupConfig {
  PlanKind kind = PlanKind::model_rotation;
  std::vector<std::string> translators;   // model rotation
  std::optional<Triplet> triplet;         // language rotation, explicit
  std::optional<Diversity> diversity;     // language rotation, table lookup
  std::optional<std::string> pivot;       // pivoted language rotation
  std::string translator = "default";     // language rotation
  std::size_t iterations = 3;
};

struct PlanConfig {
  std::vector<SetupConfig> setups;
};

/// Parses {"setups": [{"kind", "translators"?, "triplet"?, "diversity"?,
/// "pivot"?, "translator"?, "iterations"}]}.
PlanConfig parse_plan_config(std::string_view json_text);

inline constexpr std::array<const char*, 3> kDefaultTranslators = {
    "gemma-3-12b-it", "Qwen2.5-14B-Instruct", "nllb-200-distilled-600M"};

/// Three cyclic shifts of the default translator triplet.
PlanConfig default_model_rotation_config();
/// One language-rotation setup per default translator.
PlanConfig default_language_rotation_config(Diversity diversity, bool direct, std::string pivot = "en");

struct TripletTables {
  const TripletTable* low = &TripletTable::builtin(Diversity::low);
  const TripletTable* high = &TripletTable::builtin(Diversity::high);
};

/// Builds one plan per setup with ids "<kind>-<src>-<tgt>-s<k>".
std::vector<RotationPlan> build_plans(const std::string& source_lang, const std::string& target_lang,
                                      const PlanConfig& config, const TripletTables& tables = {});

/// The 3 setups x 2 directions x 3 iterations = 18 hop design. Requires
/// exactly three setups of three iterations each; direct setups use two hops
/// per iteration.
std::vector<RotationPlan> standard_18_round_plans(const std::string& source_lang,
                                                  const std::string& target_lang, const PlanConfig& config,
                                                  const TripletTables& tables = {});

/// Chain output indices (1-based positions after the original) that are
/// scored, one per column.
std::vector<std::size_t> comparison_positions(const RotationPlan& plan, ComparisonRule rule);

/// Language of the chain text at a chain position (0 = source).
std::string language_at(const RotationPlan& plan, std::size_t position);

std::string plans_to_json(std::span<const RotationPlan> plans);
std::vector<RotationPlan> plans_from_json(std::string_view text);
void write_plans(std::span<const RotationPlan> plans, const std::filesystem::path& path);
std::vector<RotationPlan> read_plans(const std::filesystem::path& path);

}  // namespace telephone
