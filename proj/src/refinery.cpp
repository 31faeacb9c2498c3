#include "telephone/refinery.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "json_io.hpp"
#include "telephone/error.hpp"

namespace telephone {

using detail::Json;

namespace {

double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Population standard deviation; exactly 0 for constant input so that rounding
// in the mean cannot manufacture a tiny spread.
double population_std(std::span<const double> xs, double mu) {
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  if (*lo == *hi) return 0.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

}  // namespace

FragilityStats compute_fragility(const ScoreGrid& q) {
  if (q.rows() < 2) throw InvalidArgument(fmt::format("fragility needs at least 2 sentences, got {}", q.rows()));
  if (q.cols() < 1) throw InvalidArgument("fragility needs at least 1 iteration");
  FragilityStats f;
  f.sentence_means.reserve(q.rows());
  for (std::size_t i = 0; i < q.rows(); ++i) f.sentence_means.push_back(mean(q.row(i)));
  f.mean_of_means = mean(f.sentence_means);
  f.std_of_means = population_std(f.sentence_means, f.mean_of_means);
  f.z.assign(q.rows(), 0.0);
  if (f.std_of_means > 0.0) {
    for (std::size_t i = 0; i < q.rows(); ++i) f.z[i] = (f.sentence_means[i] - f.mean_of_means) / f.std_of_means;
  }
  return f;
}

FragilityStats compute_fragility(const RawScoreMatrix& q) {
  q.validate();
  return compute_fragility(q.values);
}

IterationStats compute_iteration_stats(const ScoreGrid& q) {
  if (q.rows() < 1 || q.cols() < 1) throw InvalidArgument("iteration statistics need a non-empty grid");
  IterationStats s;
  for (std::size_t j = 0; j < q.cols(); ++j) {
    const auto col = q.column(j);
    const double mu = mean(col);
    s.means.push_back(mu);
    s.stddevs.push_back(population_std(col, mu));
  }
  return s;
}

IterationStats compute_iteration_stats(const RawScoreMatrix& q) {
  q.validate();
  return compute_iteration_stats(q.values);
}

ScoreGrid refine_grid(const ScoreGrid& q) {
  const auto f = compute_fragility(q);
  const auto it = compute_iteration_stats(q);
  ScoreGrid r(q.rows(), q.cols());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    for (std::size_t j = 0; j < q.cols(); ++j) r(i, j) = it.means[j] + f.z[i] * it.stddevs[j];
  }
  return r;
}

RefinedScoreMatrix refine_scores(const RawScoreMatrix& q) {
  q.validate();
  RefinedScoreMatrix out;
  out.source_matrix_id = q.matrix_id;
  out.matrix_id = "refined:" + q.matrix_id;
  out.plan_id = q.plan_id;
  out.language_pair = q.language_pair;
  out.sentence_ids = q.sentence_ids;
  out.fragility = compute_fragility(q.values);
  out.iterations = compute_iteration_stats(q.values);
  out.values = ScoreGrid(q.values.rows(), q.values.cols());
  out.clipped = ScoreGrid(q.values.rows(), q.values.cols());
  for (std::size_t i = 0; i < q.values.rows(); ++i) {
    for (std::size_t j = 0; j < q.values.cols(); ++j) {
      const double r = out.iterations.means[j] + out.fragility.z[i] * out.iterations.stddevs[j];
      out.values(i, j) = r;
      out.clipped(i, j) = std::clamp(r, 0.0, 1.0);
    }
  }
  return out;
}

void write_refined_matrix(const RefinedScoreMatrix& r, const std::filesystem::path& path) {
  Json header;
  header["record"] = "header";
  header["matrix_id"] = r.matrix_id;
  header["source_matrix_id"] = r.source_matrix_id;
  header["plan_id"] = r.plan_id;
  header["lp"] = r.language_pair;
  header["N"] = r.values.rows();
  header["K"] = r.values.cols();
  header["sentence_ids"] = r.sentence_ids;
  header["mean_of_means"] = r.fragility.mean_of_means;
  header["std_of_means"] = r.fragility.std_of_means;
  header["iteration_means"] = r.iterations.means;
  header["iteration_stds"] = r.iterations.stddevs;
  std::string out = detail::dump(header) + "\n";
  for (std::size_t i = 0; i < r.values.rows(); ++i) {
    Json row;
    row["record"] = "row";
    row["sentence_id"] = r.sentence_ids[i];
    row["sentence_mean"] = r.fragility.sentence_means[i];
    row["z"] = r.fragility.z[i];
    row["values"] = std::vector<double>(r.values.row(i).begin(), r.values.row(i).end());
    row["clipped"] = std::vector<double>(r.clipped.row(i).begin(), r.clipped.row(i).end());
    out += detail::dump(row) + "\n";
  }
  detail::write_file_atomic(path, out);
}

RefinedScoreMatrix read_refined_matrix(const std::filesystem::path& path) {
  const auto lines = detail::read_lines(path);
  RefinedScoreMatrix r;
  std::vector<std::vector<double>> values, clipped;
  std::size_t k_cols = 0, record = 0;
  try {
    for (const auto& l : lines) {
      if (l.text.empty()) continue;
      const auto j = detail::parse_json(l.text, "refined record");
      if (record == 0) {
        if (detail::get_string(j, "record") != "header") throw FormatError("first record must be the header");
        r.matrix_id = detail::get_string(j, "matrix_id");
        r.source_matrix_id = detail::get_string(j, "source_matrix_id");
        r.plan_id = detail::get_string(j, "plan_id");
        r.language_pair = detail::get_string(j, "lp");
        k_cols = detail::get_size(j, "K");
        r.sentence_ids = j.at("sentence_ids").get<std::vector<std::string>>();
        r.fragility.mean_of_means = detail::get_number(j, "mean_of_means");
        r.fragility.std_of_means = detail::get_number(j, "std_of_means");
        r.iterations.means = j.at("iteration_means").get<std::vector<double>>();
        r.iterations.stddevs = j.at("iteration_stds").get<std::vector<double>>();
      } else {
        if (detail::get_string(j, "record") != "row") throw FormatError("expected a row record");
        const auto id = detail::get_string(j, "sentence_id");
        if (values.size() >= r.sentence_ids.size() || r.sentence_ids[values.size()] != id) {
          throw FormatError(fmt::format("row '{}' out of header order", id));
        }
        r.fragility.sentence_means.push_back(detail::get_number(j, "sentence_mean"));
        r.fragility.z.push_back(detail::get_number(j, "z"));
        values.push_back(j.at("values").get<std::vector<double>>());
        clipped.push_back(j.at("clipped").get<std::vector<double>>());
        if (values.back().size() != k_cols || clipped.back().size() != k_cols) {
          throw FormatError(fmt::format("row '{}' does not have K = {} values", id, k_cols));
        }
      }
      ++record;
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("{}: record {}: {}", path.string(), record, e.what()));
  } catch (const Error& e) {
    throw FormatError(fmt::format("{}: record {}: {}", path.string(), record, e.what()));
  }
  if (record == 0) throw FormatError(fmt::format("{}: empty file", path.string()));
  if (values.size() != r.sentence_ids.size()) {
    throw FormatError(fmt::format("{}: {} rows for {} ids", path.string(), values.size(), r.sentence_ids.size()));
  }
  r.values = values.empty() ? ScoreGrid(0, k_cols) : ScoreGrid::from_rows(values);
  r.clipped = clipped.empty() ? ScoreGrid(0, k_cols) : ScoreGrid::from_rows(clipped);
  return r;
}

std::string_view to_string(LabelMode m) {
  switch (m) {
    case LabelMode::refined: return "refined";
    case LabelMode::iteration_average: return "iteration_average";
    case LabelMode::raw: return "raw";
  }
  return "refined";
}

LabelMode parse_label_mode(std::string_view s) {
  if (s == "refined") return LabelMode::refined;
  if (s == "iteration_average" || s == "it") return LabelMode::iteration_average;
  if (s == "raw" || s == "unmd") return LabelMode::raw;
  throw InvalidArgument(fmt::format("unknown label mode '{}'", s));
}

std::string_view to_string(ReferenceKind k) {
  switch (k) {
    case ReferenceKind::gold: return "gold";
    case ReferenceKind::pseudo_previous_iteration: return "pseudo_previous_iteration";
    case ReferenceKind::none: return "none";
  }
  return "none";
}

ReferenceKind parse_reference_kind(std::string_view s) {
  if (s == "gold" || s == "hm") return ReferenceKind::gold;
  if (s == "pseudo_previous_iteration" || s == "pseudo" || s == "rel") return ReferenceKind::pseudo_previous_iteration;
  if (s == "none" || s == "qe") return ReferenceKind::none;
  throw InvalidArgument(fmt::format("unknown reference kind '{}'", s));
}

std::vector<TrainingExample> export_training_examples(std::span<const TranslationChain> chains,
                                                      const RawScoreMatrix& q, const RefinedScoreMatrix* refined,
                                                      const ExportOptions& options) {
  q.validate();
  const std::size_t n = q.sentence_count(), k = q.iteration_count();
  if (q.positions.size() != k) {
    throw InvalidArgument(fmt::format("matrix {} lacks chain positions", q.matrix_id));
  }
  if (options.label_mode == LabelMode::refined) {
    if (!refined) throw InvalidArgument("label mode 'refined' needs refined scores");
    if (refined->source_matrix_id != q.matrix_id || refined->clipped.rows() != n || refined->clipped.cols() != k) {
      throw InvalidArgument(fmt::format("refined matrix {} does not derive from {}", refined->matrix_id, q.matrix_id));
    }
  }
  if (options.reference_kind == ReferenceKind::gold && !options.corpus) {
    throw InvalidArgument("gold references requested but no corpus supplied");
  }
  std::optional<IterationStats> stats;
  if (options.label_mode == LabelMode::iteration_average) stats = compute_iteration_stats(q.values);

  std::map<std::string, const TranslationChain*> by_sentence;
  for (const auto& c : chains) {
    if (c.plan_id == q.plan_id) by_sentence[c.sentence_id] = &c;
  }

  std::vector<TrainingExample> out;
  out.reserve(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& id = q.sentence_ids[i];
    auto it = by_sentence.find(id);
    if (it == by_sentence.end()) {
      throw InvalidArgument(fmt::format("no chain for sentence {} under plan {}", id, q.plan_id));
    }
    const TranslationChain& chain = *it->second;
    const SentenceRecord* rec = options.corpus ? options.corpus->find(id) : nullptr;
    std::optional<std::string> gold;
    if (options.reference_kind == ReferenceKind::gold) {
      if (!rec || !rec->reference_text) throw InvalidArgument(fmt::format("sentence {} has no gold reference", id));
      gold = rec->reference_text;
    }
    for (std::size_t j = 0; j < k; ++j) {
      const auto pos = q.positions[j];
      if (pos >= chain.iterations.size()) {
        throw InvalidArgument(fmt::format("chain for {} has no output at position {}", id, pos));
      }
      TrainingExample e;
      e.sentence_id = id;
      e.iteration = j + 1;
      e.source = chain.iterations.front().text;
      e.hypothesis = chain.iterations[pos].text;
      e.label_mode = options.label_mode;
      e.reference_kind = options.reference_kind;
      e.language_pair = rec ? rec->language_pair() : q.language_pair;
      switch (options.reference_kind) {
        case ReferenceKind::gold: e.reference = gold; break;
        case ReferenceKind::pseudo_previous_iteration:
          e.reference = chain.iterations[j == 0 ? 0 : q.positions[j - 1]].text;
          break;
        case ReferenceKind::none: break;
      }
      switch (options.label_mode) {
        case LabelMode::refined: e.label = refined->clipped(i, j); break;
        case LabelMode::iteration_average: e.label = stats->means[j]; break;
        case LabelMode::raw: e.label = q.values(i, j); break;
      }
      out.push_back(std::move(e));
    }
  }
  return out;
}

std::string training_example_to_jsonl(const TrainingExample& e) {
  Json j;
  j["src"] = e.source;
  j["mt"] = e.hypothesis;
  j["ref"] = e.reference ? Json(*e.reference) : Json(nullptr);
  j["score"] = e.label;
  j["lp"] = e.language_pair;
  j["label_mode"] = std::string(to_string(e.label_mode));
  j["reference_kind"] = std::string(to_string(e.reference_kind));
  return detail::dump(j) + "\n";
}

void write_training_examples(std::span<const TrainingExample> examples, const std::filesystem::path& path) {
  std::string out;
  for (const auto& e : examples) out += training_example_to_jsonl(e);
  detail::write_file_atomic(path, out);
}

}  // namespace telephone
