#include "telephone/ingest.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json_io.hpp"
#include "telephone/error.hpp"
#include "telephone/hash.hpp"

namespace telephone {
namespace detail {

std::vector<TextLine> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(fmt::format("cannot open '{}'", path.string()));
  std::vector<TextLine> lines;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const bool terminated = !in.eof();
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back({n, std::move(line), terminated});
  }
  return lines;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write '{}'", tmp.string()));
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(fmt::format("short write to '{}'", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

std::string dump(const Json& j, int indent) {
  try {
    return j.dump(indent, ' ', false, Json::error_handler_t::strict);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("cannot serialize record: {}", e.what()));
  }
}

Json parse_json(std::string_view text, const std::string& where) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("{}: invalid JSON ({})", where, e.what()));
  }
}

std::string get_string(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw FormatError(fmt::format("missing or non-string field '{}'", key));
  }
  return it->get<std::string>();
}

std::string get_string_or(const Json& j, const char* key, std::string fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_string()) throw FormatError(fmt::format("field '{}' is not a string", key));
  return it->get<std::string>();
}

double get_number(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number()) {
    throw FormatError(fmt::format("missing or non-numeric field '{}'", key));
  }
  return it->get<double>();
}

std::size_t get_size(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number_unsigned()) {
    if (it != j.end() && it->is_number_integer() && it->get<long long>() >= 0) {
      return static_cast<std::size_t>(it->get<long long>());
    }
    throw FormatError(fmt::format("missing or non-integer field '{}'", key));
  }
  return it->get<std::size_t>();
}

Json chain_to_json(const TranslationChain& chain) {
  Json j;
  j["sentence_id"] = chain.sentence_id;
  j["plan_id"] = chain.plan_id;
  Json its = Json::array();
  for (const auto& it : chain.iterations) {
    Json o;
    o["index"] = it.index;
    o["text"] = it.text;
    o["lang"] = it.lang;
    o["translator_id"] = it.translator_id;
    o["direction"] = std::string(to_string(it.direction));
    its.push_back(std::move(o));
  }
  j["iterations"] = std::move(its);
  return j;
}

TranslationChain chain_from_json(const Json& j) {
  if (!j.is_object()) throw FormatError("chain record is not an object");
  TranslationChain c;
  c.sentence_id = get_string(j, "sentence_id");
  c.plan_id = get_string(j, "plan_id");
  auto its = j.find("iterations");
  if (its == j.end() || !its->is_array()) throw FormatError("missing 'iterations' array");
  for (const auto& o : *its) {
    IterationOutput it;
    it.index = get_size(o, "index");
    it.text = get_string(o, "text");
    it.lang = get_string(o, "lang");
    it.translator_id = get_string(o, "translator_id");
    try {
      it.direction = parse_direction(get_string(o, "direction"));
    } catch (const InvalidArgument& e) {
      throw FormatError(e.what());
    }
    c.iterations.push_back(std::move(it));
  }
  return c;
}

Json manifest_to_json(const RunManifest& m) {
  Json j;
  j["plan_ids"] = m.plan_ids;
  j["backend_ids"] = m.backend_ids;
  j["seed"] = m.seed;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["status"] = m.status;
  j["completed_chains"] = m.completed_chains;
  j["failed_chains"] = m.failed_chains;
  j["skipped_chains"] = m.skipped_chains;
  j["reused_chains"] = m.reused_chains;
  Json failures = Json::array();
  for (const auto& f : m.failures) {
    failures.push_back(Json{{"sentence_id", f.sentence_id}, {"plan_id", f.plan_id}, {"error", f.error}});
  }
  j["failures"] = std::move(failures);
  return j;
}

RunManifest manifest_from_json(const Json& j) {
  RunManifest m;
  try {
    m.plan_ids = j.at("plan_ids").get<std::vector<std::string>>();
    m.backend_ids = j.at("backend_ids").get<std::vector<std::string>>();
    m.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("manifest: {}", e.what()));
  }
  m.started_at = get_string_or(j, "started_at", "");
  m.finished_at = get_string_or(j, "finished_at", "");
  m.status = get_string(j, "status");
  m.completed_chains = get_size(j, "completed_chains");
  m.failed_chains = get_size(j, "failed_chains");
  m.skipped_chains = get_size(j, "skipped_chains");
  m.reused_chains = get_size(j, "reused_chains");
  for (const auto& f : j.at("failures")) {
    m.failures.push_back({get_string(f, "sentence_id"), get_string(f, "plan_id"), get_string(f, "error")});
  }
  return m;
}

}  // namespace detail

using detail::Json;

Corpus::Corpus(std::string name, std::vector<SentenceRecord> records)
    : name_(std::move(name)), records_(std::move(records)) {
  by_id_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (r.id.empty()) throw InvalidArgument(fmt::format("record {} has an empty id", i));
    if (r.source_text.empty()) {
      throw InvalidArgument(fmt::format("record '{}' has empty source_text", r.id));
    }
    if (r.source_lang.empty() || r.target_lang.empty()) {
      throw InvalidArgument(fmt::format("record '{}' is missing a language code", r.id));
    }
    if (r.source_lang == r.target_lang) {
      throw InvalidArgument(
          fmt::format("record '{}' has identical source and target language '{}'", r.id, r.source_lang));
    }
    if (!by_id_.emplace(r.id, i).second) {
      throw InvalidArgument(fmt::format("duplicate id '{}'", r.id));
    }
  }
}

const SentenceRecord* Corpus::find(const std::string& id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &records_[it->second];
}

CorpusFormat corpus_format_for(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".jsonl" || ext == ".json") return CorpusFormat::jsonl;
  return CorpusFormat::tsv;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

std::string line_error(const std::filesystem::path& path, std::size_t line, std::string_view what) {
  return fmt::format("{}:{}: {}", path.string(), line, what);
}

// Adds a record, converting record-level validation into a line-numbered error.
void push_record(std::vector<SentenceRecord>& out, std::unordered_map<std::string, std::size_t>& seen,
                 SentenceRecord r, const std::filesystem::path& path, std::size_t line) {
  if (r.source_text.empty()) throw FormatError(line_error(path, line, "missing source_text"));
  if (r.source_lang.empty()) throw FormatError(line_error(path, line, "missing source_lang"));
  if (r.target_lang.empty()) throw FormatError(line_error(path, line, "missing target_lang"));
  if (r.source_lang == r.target_lang) {
    throw FormatError(line_error(path, line, "source_lang equals target_lang"));
  }
  if (!seen.emplace(r.id, line).second) {
    throw FormatError(line_error(path, line, fmt::format("duplicate id '{}'", r.id)));
  }
  out.push_back(std::move(r));
}

Corpus load_tsv(const std::filesystem::path& path) {
  const auto lines = detail::read_lines(path);
  std::size_t first = 0;
  while (first < lines.size() && lines[first].text.empty()) ++first;
  if (first == lines.size()) throw FormatError(fmt::format("{}: empty file", path.string()));

  const auto header = split_tabs(lines[first].text);
  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  };
  const auto c_id = column("id");
  const auto c_src = column("source_text");
  const auto c_sl = column("source_lang");
  const auto c_tl = column("target_lang");
  const auto c_ref = column("reference_text");
  const auto c_origin = column("origin");
  if (!c_src || !c_sl || !c_tl) {
    throw FormatError(line_error(path, lines[first].line_number,
                                 "header must name source_text, source_lang and target_lang"));
  }

  std::vector<SentenceRecord> records;
  std::unordered_map<std::string, std::size_t> seen;
  std::size_t row = 0;
  for (std::size_t k = first + 1; k < lines.size(); ++k) {
    const auto& l = lines[k];
    if (l.text.empty()) continue;
    const auto fields = split_tabs(l.text);
    if (fields.size() > header.size()) {
      throw FormatError(line_error(path, l.line_number,
                                   fmt::format("{} fields, header has {}", fields.size(), header.size())));
    }
    auto field = [&](const std::optional<std::size_t>& c) -> std::string {
      return c && *c < fields.size() ? fields[*c] : std::string();
    };
    SentenceRecord r;
    r.id = field(c_id);
    if (r.id.empty()) r.id = std::to_string(row);
    r.source_text = field(c_src);
    r.source_lang = field(c_sl);
    r.target_lang = field(c_tl);
    if (auto ref = field(c_ref); !ref.empty()) r.reference_text = std::move(ref);
    r.origin = field(c_origin);
    push_record(records, seen, std::move(r), path, l.line_number);
    ++row;
  }
  if (records.empty()) throw FormatError(fmt::format("{}: no data rows", path.string()));
  return Corpus(path.stem().string(), std::move(records));
}

std::string first_string(const Json& j, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    auto it = j.find(k);
    if (it == j.end() || it->is_null()) continue;
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_integer()) return std::to_string(it->get<long long>());
    throw FormatError(fmt::format("field '{}' is not a string", k));
  }
  return {};
}

Corpus load_jsonl(const std::filesystem::path& path) {
  const auto lines = detail::read_lines(path);
  std::vector<SentenceRecord> records;
  std::unordered_map<std::string, std::size_t> seen;
  std::size_t row = 0;
  for (const auto& l : lines) {
    if (l.text.empty()) continue;
    Json j;
    try {
      j = Json::parse(l.text);
    } catch (const nlohmann::json::exception&) {
      throw FormatError(line_error(path, l.line_number, "malformed JSON"));
    }
    if (!j.is_object()) throw FormatError(line_error(path, l.line_number, "record is not an object"));
    SentenceRecord r;
    try {
      r.id = first_string(j, {"id"});
      r.source_text = first_string(j, {"source_text", "src"});
      r.source_lang = first_string(j, {"source_lang"});
      r.target_lang = first_string(j, {"target_lang"});
      if (const auto lp = first_string(j, {"lp"}); !lp.empty() && (r.source_lang.empty() || r.target_lang.empty())) {
        const auto dash = lp.find('-');
        if (dash == std::string::npos) throw FormatError(fmt::format("bad lp '{}'", lp));
        r.source_lang = lp.substr(0, dash);
        r.target_lang = lp.substr(dash + 1);
      }
      if (auto ref = first_string(j, {"reference_text", "ref"}); !ref.empty()) r.reference_text = std::move(ref);
      r.origin = first_string(j, {"origin", "year"});
    } catch (const FormatError& e) {
      throw FormatError(line_error(path, l.line_number, e.what()));
    }
    if (r.id.empty()) r.id = std::to_string(row);
    push_record(records, seen, std::move(r), path, l.line_number);
    ++row;
  }
  if (records.empty()) throw FormatError(fmt::format("{}: empty file", path.string()));
  return Corpus(path.stem().string(), std::move(records));
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  return format == CorpusFormat::tsv ? load_tsv(path) : load_jsonl(path);
}

Corpus load_corpus(const std::filesystem::path& path) { return load_corpus(path, corpus_format_for(path)); }

std::size_t train_size(std::size_t n, double train_fraction) {
  return static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n) + 0.5));
}

std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw InvalidArgument(fmt::format("train_fraction {} not in (0, 1)", spec.train_fraction));
  }
  const std::size_t n = corpus.size();
  if (n < 2) throw InvalidArgument(fmt::format("cannot split a corpus of {} record(s)", n));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  SplitMix64 rng(spec.seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(order[i], order[rng.below(i + 1)]);
  }

  const std::size_t cut = train_size(n, spec.train_fraction);
  std::vector<SentenceRecord> train, valid;
  train.reserve(cut);
  valid.reserve(n - cut);
  for (std::size_t k = 0; k < n; ++k) {
    (k < cut ? train : valid).push_back(corpus[order[k]]);
  }
  return {Corpus(corpus.name() + ".train", std::move(train)),
          Corpus(corpus.name() + ".valid", std::move(valid))};
}

std::string chain_to_jsonl(const TranslationChain& chain) {
  return detail::dump(detail::chain_to_json(chain)) + "\n";
}

void write_chains(std::span<const TranslationChain> chains, const std::filesystem::path& path) {
  std::string out;
  for (const auto& c : chains) out += chain_to_jsonl(c);
  detail::write_file_atomic(path, out);
}

std::vector<TranslationChain> read_chains(const std::filesystem::path& path, TailPolicy tail) {
  const auto lines = detail::read_lines(path);
  std::vector<TranslationChain> chains;
  std::size_t record = 0;
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const auto& l = lines[k];
    if (l.text.empty()) continue;
    try {
      auto c = detail::chain_from_json(detail::parse_json(l.text, "chain"));
      validate(c);
      chains.push_back(std::move(c));
    } catch (const Error& e) {
      const bool last = k + 1 == lines.size();
      if (tail == TailPolicy::drop_truncated_tail && last && !l.terminated) break;
      throw FormatError(fmt::format("{}: record {} (line {}): {}", path.string(), record, l.line_number, e.what()));
    }
    ++record;
  }
  return chains;
}

void write_score_matrix(const RawScoreMatrix& m, const std::filesystem::path& path) {
  m.validate();
  Json header;
  header["record"] = "header";
  header["matrix_id"] = m.matrix_id;
  header["plan_id"] = m.plan_id;
  header["lp"] = m.language_pair;
  header["scorer_id"] = m.scorer_id;
  header["scoring_mode"] = std::string(to_string(m.scoring_mode));
  header["comparison_rule"] = std::string(to_string(m.comparison_rule));
  header["N"] = m.sentence_count();
  header["K"] = m.iteration_count();
  header["sentence_ids"] = m.sentence_ids;
  header["positions"] = m.positions;
  header["column_langs"] = m.column_langs;
  std::string out = detail::dump(header) + "\n";
  for (std::size_t i = 0; i < m.sentence_count(); ++i) {
    Json row;
    row["record"] = "row";
    row["sentence_id"] = m.sentence_ids[i];
    row["values"] = std::vector<double>(m.values.row(i).begin(), m.values.row(i).end());
    out += detail::dump(row) + "\n";
  }
  detail::write_file_atomic(path, out);
}

RawScoreMatrix read_score_matrix(const std::filesystem::path& path) {
  const auto lines = detail::read_lines(path);
  RawScoreMatrix m;
  std::size_t record = 0;
  std::size_t k_cols = 0;
  std::vector<std::vector<double>> rows;
  for (const auto& l : lines) {
    if (l.text.empty()) continue;
    try {
      const auto j = detail::parse_json(l.text, "matrix record");
      const auto kind = detail::get_string(j, "record");
      if (record == 0) {
        if (kind != "header") throw FormatError("first record must be the header");
        m.matrix_id = detail::get_string(j, "matrix_id");
        m.plan_id = detail::get_string(j, "plan_id");
        m.language_pair = detail::get_string(j, "lp");
        m.scorer_id = detail::get_string(j, "scorer_id");
        m.scoring_mode = parse_scoring_mode(detail::get_string(j, "scoring_mode"));
        m.comparison_rule = parse_comparison_rule(detail::get_string(j, "comparison_rule"));
        k_cols = detail::get_size(j, "K");
        m.sentence_ids = j.at("sentence_ids").get<std::vector<std::string>>();
        m.positions = j.at("positions").get<std::vector<std::size_t>>();
        m.column_langs = j.at("column_langs").get<std::vector<std::string>>();
      } else {
        if (kind != "row") throw FormatError(fmt::format("unexpected record kind '{}'", kind));
        const auto id = detail::get_string(j, "sentence_id");
        if (rows.size() >= m.sentence_ids.size() || id != m.sentence_ids[rows.size()]) {
          throw FormatError(fmt::format("row for '{}' does not match header order", id));
        }
        auto values = j.at("values").get<std::vector<double>>();
        if (values.size() != k_cols) {
          throw FormatError(fmt::format("row has {} values, header says K = {}", values.size(), k_cols));
        }
        rows.push_back(std::move(values));
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(fmt::format("{}: record {}: {}", path.string(), record, e.what()));
    } catch (const Error& e) {
      throw FormatError(fmt::format("{}: record {}: {}", path.string(), record, e.what()));
    }
    ++record;
  }
  if (record == 0) throw FormatError(fmt::format("{}: empty matrix file", path.string()));
  if (rows.size() != m.sentence_ids.size()) {
    throw FormatError(fmt::format("{}: {} rows for {} sentence ids", path.string(), rows.size(),
                                  m.sentence_ids.size()));
  }
  m.values = rows.empty() ? ScoreGrid(0, k_cols) : ScoreGrid::from_rows(rows);
  try {
    m.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return m;
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
  detail::write_file_atomic(path, detail::dump(detail::manifest_to_json(manifest), 2) + "\n");
}

RunManifest read_manifest(const std::filesystem::path& path) {
  return detail::manifest_from_json(detail::parse_json(detail::read_file(path), path.string()));
}

}  // namespace telephone
