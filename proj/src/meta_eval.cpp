#include "telephone/meta_eval.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

#include "telephone/error.hpp"
#include "telephone/hash.hpp"

namespace telephone {

namespace {

void require_paired(std::span<const double> x, std::span<const double> y, const char* what) {
  if (x.size() != y.size()) {
    throw InvalidArgument(fmt::format("{}: lengths differ ({} vs {})", what, x.size(), y.size()));
  }
  if (x.size() < 2) throw InvalidArgument(fmt::format("{}: need at least 2 points, got {}", what, x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw InvalidArgument(fmt::format("{}: non-finite value at index {}", what, i));
    }
  }
}

bool is_constant(std::span<const double> x) {
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  return *lo == *hi;
}

double pearson_unchecked(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Pairs (i < j) among `n` items sharing a value, summed over runs of a sorted sequence.
template <class Eq>
std::uint64_t tied_pairs(std::size_t n, Eq same_as_previous) {
  std::uint64_t total = 0, run = 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (same_as_previous(i)) {
      ++run;
    } else {
      total += run * (run - 1) / 2;
      run = 1;
    }
  }
  return total + run * (run - 1) / 2;
}

// Stable merge sort counting strict inversions.
std::uint64_t sort_counting_inversions(std::vector<double>& v, std::vector<double>& scratch, std::size_t lo,
                                       std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t swaps = sort_counting_inversions(v, scratch, lo, mid) + sort_counting_inversions(v, scratch, mid, hi);
  std::size_t a = lo, b = mid, k = lo;
  while (a < mid && b < hi) {
    if (v[b] < v[a]) {
      swaps += mid - a;
      scratch[k++] = v[b++];
    } else {
      scratch[k++] = v[a++];
    }
  }
  while (a < mid) scratch[k++] = v[a++];
  while (b < hi) scratch[k++] = v[b++];
  std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo), scratch.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    out.emplace_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
  return out;
}

double parse_real(const std::string& s, const char* field, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) {
    throw FormatError(fmt::format("line {}: {} '{}' is not a finite number", line, field, s));
  }
  return v;
}

struct ItemPair {
  double metric_diff;
  double human_diff;
};

// Every within-item system pair, systems ordered by id.
std::vector<ItemPair> within_item_pairs(const SegmentScoreTable& table) {
  if (table.systems().size() < 2) throw InvalidArgument("need at least 2 systems");
  if (!table.has_shared_coverage()) {
    throw InvalidArgument("systems do not cover the same items; use common_items_only first");
  }
  std::map<std::string, std::vector<const SegmentScore*>> by_item;
  for (const auto& r : table.rows()) by_item[r.item_id].push_back(&r);
  std::vector<ItemPair> pairs;
  for (auto& [item, rows] : by_item) {
    std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->system_id < b->system_id; });
    for (std::size_t a = 0; a < rows.size(); ++a) {
      for (std::size_t b = a + 1; b < rows.size(); ++b) {
        pairs.push_back({rows[a]->metric_score - rows[b]->metric_score, rows[a]->human_score - rows[b]->human_score});
      }
    }
  }
  if (pairs.empty()) throw InvalidArgument("no comparable system pairs");
  return pairs;
}

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  require_paired(x, y, "pearson");
  if (is_constant(x) || is_constant(y)) throw InvalidArgument("pearson: undefined for a constant vector");
  return pearson_unchecked(x, y);
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start;
    while (end + 1 < order.size() && x[order[end + 1]] == x[order[start]]) ++end;
    const double rank = static_cast<double>(start + end) / 2.0 + 1.0;
    for (std::size_t k = start; k <= end; ++k) ranks[order[k]] = rank;
    start = end + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  require_paired(x, y, "spearman");
  if (is_constant(x) || is_constant(y)) throw InvalidArgument("spearman: undefined when one side is all ties");
  const auto rx = average_ranks(x), ry = average_ranks(y);
  return pearson_unchecked(rx, ry);
}

double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  require_paired(x, y, "kendall_tau_b");
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });
  const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t n1 = tied_pairs(n, [&](std::size_t i) { return x[order[i]] == x[order[i - 1]]; });
  const std::uint64_t n3 = tied_pairs(n, [&](std::size_t i) {
    return x[order[i]] == x[order[i - 1]] && y[order[i]] == y[order[i - 1]];
  });
  std::vector<double> ys(n), scratch(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  const std::uint64_t swaps = sort_counting_inversions(ys, scratch, 0, n);
  const std::uint64_t n2 = tied_pairs(n, [&](std::size_t i) { return ys[i] == ys[i - 1]; });
  if (n0 == n1 || n0 == n2) throw InvalidArgument("kendall_tau_b: undefined when one side is all ties");
  // concordant - discordant = n0 - n1 - n2 + n3 - 2 * swaps
  const double numerator = static_cast<double>(n0) - static_cast<double>(n1) - static_cast<double>(n2) +
                           static_cast<double>(n3) - 2.0 * static_cast<double>(swaps);
  const double denominator =
      std::sqrt(static_cast<double>(n0 - n1)) * std::sqrt(static_cast<double>(n0 - n2));
  return std::clamp(numerator / denominator, -1.0, 1.0);
}

double roc_auc(std::span<const double> earlier, std::span<const double> later) {
  if (earlier.empty() || later.empty()) {
    throw InvalidArgument(fmt::format("roc_auc: empty class ({} earlier, {} later)", earlier.size(), later.size()));
  }
  std::vector<double> sorted(later.begin(), later.end());
  for (double v : sorted) {
    if (!std::isfinite(v)) throw InvalidArgument("roc_auc: non-finite score");
  }
  std::sort(sorted.begin(), sorted.end());
  // Twice the Mann-Whitney U, kept integral so the result is exact.
  std::uint64_t twice_u = 0;
  for (double e : earlier) {
    if (!std::isfinite(e)) throw InvalidArgument("roc_auc: non-finite score");
    const auto lo = std::lower_bound(sorted.begin(), sorted.end(), e);
    const auto hi = std::upper_bound(lo, sorted.end(), e);
    twice_u += 2 * static_cast<std::uint64_t>(lo - sorted.begin()) + static_cast<std::uint64_t>(hi - lo);
  }
  return static_cast<double>(twice_u) /
         (2.0 * static_cast<double>(earlier.size()) * static_cast<double>(later.size()));
}

void PairedGenerationSet::validate() const {
  if (pairs.empty()) throw InvalidArgument("paired generation set is empty");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].earlier_round >= pairs[i].later_round) {
      throw InvalidArgument(fmt::format("pair {}: earlier round {} is not before later round {}", i,
                                        pairs[i].earlier_round, pairs[i].later_round));
    }
  }
}

double roc_auc(const PairedGenerationSet& set) {
  set.validate();
  std::vector<double> earlier, later;
  for (const auto& p : set.pairs) {
    earlier.push_back(p.earlier_score);
    later.push_back(p.later_score);
  }
  return roc_auc(earlier, later);
}

SegmentScoreTable::SegmentScoreTable(std::vector<SegmentScore> rows) : rows_(std::move(rows)) {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& r : rows_) {
    if (!seen.emplace(r.item_id, r.system_id).second) {
      throw InvalidArgument(fmt::format("duplicate score for item '{}', system '{}'", r.item_id, r.system_id));
    }
    if (!std::isfinite(r.metric_score) || !std::isfinite(r.human_score)) {
      throw InvalidArgument(fmt::format("non-finite score for item '{}', system '{}'", r.item_id, r.system_id));
    }
  }
}

SegmentScoreTable SegmentScoreTable::load_tsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(fmt::format("cannot open {}", path.string()));
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::size_t> col;
  std::vector<SegmentScore> rows;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line == "\r") continue;
      const auto fields = split_tabs(line);
      if (col.empty()) {
        for (const char* name : {"item_id", "system_id", "metric_score", "human_score"}) {
          const auto it = std::find(fields.begin(), fields.end(), name);
          if (it == fields.end()) throw FormatError(fmt::format("line {}: header lacks column '{}'", line_no, name));
          col.push_back(static_cast<std::size_t>(it - fields.begin()));
        }
        continue;
      }
      if (fields.size() < *std::max_element(col.begin(), col.end()) + 1) {
        throw FormatError(fmt::format("line {}: expected at least {} fields, got {}", line_no,
                                      *std::max_element(col.begin(), col.end()) + 1, fields.size()));
      }
      SegmentScore s{fields[col[0]], fields[col[1]], parse_real(fields[col[2]], "metric_score", line_no),
                     parse_real(fields[col[3]], "human_score", line_no)};
      if (s.item_id.empty() || s.system_id.empty()) throw FormatError(fmt::format("line {}: empty id", line_no));
      rows.push_back(std::move(s));
    }
    if (col.empty()) throw FormatError("missing header");
    return SegmentScoreTable(std::move(rows));
  } catch (const Error& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::vector<std::string> SegmentScoreTable::systems() const {
  std::set<std::string> s;
  for (const auto& r : rows_) s.insert(r.system_id);
  return {s.begin(), s.end()};
}

std::vector<std::string> SegmentScoreTable::items() const {
  std::set<std::string> s;
  for (const auto& r : rows_) s.insert(r.item_id);
  return {s.begin(), s.end()};
}

SegmentScoreTable SegmentScoreTable::common_items_only(std::span<const std::string> systems) const {
  std::set<std::string> keep(systems.begin(), systems.end());
  const auto all = this->systems();
  if (keep.empty()) keep.insert(all.begin(), all.end());
  for (const auto& s : keep) {
    if (!std::binary_search(all.begin(), all.end(), s)) throw InvalidArgument(fmt::format("unknown system '{}'", s));
  }
  std::map<std::string, std::size_t> coverage;
  for (const auto& r : rows_) {
    if (keep.count(r.system_id)) ++coverage[r.item_id];
  }
  std::vector<SegmentScore> out;
  for (const auto& r : rows_) {
    if (keep.count(r.system_id) && coverage[r.item_id] == keep.size()) out.push_back(r);
  }
  return SegmentScoreTable(std::move(out));
}

bool SegmentScoreTable::has_shared_coverage() const {
  std::map<std::string, std::set<std::string>> by_system;
  for (const auto& r : rows_) by_system[r.system_id].insert(r.item_id);
  for (const auto& [system, items] : by_system) {
    if (items != by_system.begin()->second) return false;
  }
  return true;
}

std::vector<double> SegmentScoreTable::metric_scores() const {
  std::vector<double> v;
  for (const auto& r : rows_) v.push_back(r.metric_score);
  return v;
}

std::vector<double> SegmentScoreTable::human_scores() const {
  std::vector<double> v;
  for (const auto& r : rows_) v.push_back(r.human_score);
  return v;
}

TieCalibration tie_accuracy_at(const SegmentScoreTable& table, double epsilon) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw InvalidArgument(fmt::format("tie threshold must be a finite non-negative number, got {}", epsilon));
  }
  const auto pairs = within_item_pairs(table);
  std::size_t correct = 0;
  for (const auto& p : pairs) {
    const int metric = std::abs(p.metric_diff) <= epsilon ? 0 : sign_of(p.metric_diff);
    correct += metric == sign_of(p.human_diff);
  }
  return {epsilon, static_cast<double>(correct) / static_cast<double>(pairs.size()), pairs.size()};
}

TieCalibration tie_calibrated_accuracy(const SegmentScoreTable& table) {
  const auto pairs = within_item_pairs(table);
  struct Entry {
    double gap;
    int if_tied;    // correct when the metric calls a tie
    int if_signed;  // correct when the metric keeps its sign
  };
  std::vector<Entry> entries;
  entries.reserve(pairs.size());
  long correct = 0;
  for (const auto& p : pairs) {
    const int h = sign_of(p.human_diff);
    Entry e{std::abs(p.metric_diff), h == 0, p.metric_diff != 0.0 && sign_of(p.metric_diff) == h};
    correct += e.if_signed;
    entries.push_back(e);
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.gap < b.gap; });

  long best = -1;
  double best_eps = 0.0;
  std::size_t next = 0;
  auto consider = [&](double eps) {
    while (next < entries.size() && entries[next].gap <= eps) {
      correct += entries[next].if_tied - entries[next].if_signed;
      ++next;
    }
    if (correct > best) {
      best = correct;
      best_eps = eps;
    }
  };
  consider(0.0);
  while (next < entries.size()) consider(entries[next].gap);
  return {best_eps, static_cast<double>(best) / static_cast<double>(pairs.size()), pairs.size()};
}

double sign_flip_p_value(std::span<const double> d, const SpaOptions& options, std::uint64_t signs_seed) {
  if (d.empty()) throw InvalidArgument("sign-flip test needs at least one item");
  if (is_constant(d)) return 0.5;
  double observed = 0.0, scale = 0.0;
  for (double v : d) {
    observed += v;
    scale += std::abs(v);
  }
  // Sums equal in exact arithmetic may differ in the last bits.
  const double threshold = observed - 1e-12 * scale;
  const std::size_t n = d.size();
  if (!options.force_monte_carlo && n <= options.exact_threshold) {
    if (n >= 63) throw InvalidArgument("exact enumeration limited to fewer than 63 items");
    const std::uint64_t patterns = std::uint64_t{1} << n;
    std::uint64_t hits = 0;
    for (std::uint64_t mask = 0; mask < patterns; ++mask) {
      double t = 0.0;
      for (std::size_t i = 0; i < n; ++i) t += (mask >> i & 1) ? -d[i] : d[i];
      hits += t >= threshold;
    }
    return static_cast<double>(hits) / static_cast<double>(patterns);
  }
  if (options.resamples == 0) throw InvalidArgument("resamples must be positive");
  SplitMix64 rng(signs_seed);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < options.resamples; ++r) {
    double t = 0.0;
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i % 64 == 0) bits = rng.next();
      t += (bits >> (i % 64) & 1) ? -d[i] : d[i];
    }
    hits += t >= threshold;
  }
  return static_cast<double>(hits) / static_cast<double>(options.resamples);
}

SpaResult soft_pairwise_accuracy_detail(const SegmentScoreTable& table, const SpaOptions& options) {
  const auto systems = table.systems();
  if (systems.size() < 2) throw InvalidArgument("SPA needs at least 2 systems");
  if (!table.has_shared_coverage()) {
    throw InvalidArgument("systems do not cover the same items; use common_items_only first");
  }
  std::map<std::string, std::map<std::string, const SegmentScore*>> by_system;
  for (const auto& r : table.rows()) by_system[r.system_id][r.item_id] = &r;
  const auto items = table.items();

  SpaResult result;
  result.exact = !options.force_monte_carlo && items.size() <= options.exact_threshold;
  double total = 0.0;
  std::vector<double> dm(items.size()), dh(items.size());
  for (std::size_t a = 0; a < systems.size(); ++a) {
    for (std::size_t b = a + 1; b < systems.size(); ++b) {
      const auto& sa = by_system[systems[a]];
      const auto& sb = by_system[systems[b]];
      for (std::size_t i = 0; i < items.size(); ++i) {
        dm[i] = sa.at(items[i])->metric_score - sb.at(items[i])->metric_score;
        dh[i] = sa.at(items[i])->human_score - sb.at(items[i])->human_score;
      }
      // Both sides see the same sign patterns, and the stream depends only on the pair.
      const std::uint64_t pair_seed =
          splitmix64(options.seed ^ splitmix64(fnv1a64(systems[a]) ^ splitmix64(fnv1a64(systems[b]))));
      SystemPairAgreement p{systems[a], systems[b], sign_flip_p_value(dm, options, pair_seed),
                            sign_flip_p_value(dh, options, pair_seed)};
      total += 1.0 - std::abs(p.p_metric - p.p_human);
      result.pairs.push_back(std::move(p));
    }
  }
  result.spa = total / static_cast<double>(result.pairs.size());
  return result;
}

double soft_pairwise_accuracy(const SegmentScoreTable& table, const SpaOptions& options) {
  return soft_pairwise_accuracy_detail(table, options).spa;
}

PairedGenerationSet paired_generation_set(const ScoreGrid& scores, int earlier_round, int later_round) {
  if (earlier_round < 1 || later_round <= earlier_round || static_cast<std::size_t>(later_round) > scores.cols()) {
    throw InvalidArgument(fmt::format("rounds {} vs {} not available in a grid with {} round(s)", earlier_round,
                                      later_round, scores.cols()));
  }
  PairedGenerationSet set;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    set.pairs.push_back({scores(i, static_cast<std::size_t>(earlier_round - 1)),
                         scores(i, static_cast<std::size_t>(later_round - 1)), earlier_round, later_round});
  }
  return set;
}

std::vector<AucRow> paired_generation_report(std::span<const RoundScores> inputs) {
  std::vector<AucRow> rows;
  for (const auto& in : inputs) {
    if (in.scores.cols() < 3) {
      throw InvalidArgument(fmt::format("{} / {} / {}: missing round {} of 3", in.category, in.system, in.metric,
                                        in.scores.cols() + 1));
    }
    if (in.scores.rows() == 0) throw InvalidArgument(fmt::format("{} / {}: no sentences", in.category, in.system));
    rows.push_back({in.category, in.system, in.metric, roc_auc(paired_generation_set(in.scores, 1, 2)),
                    roc_auc(paired_generation_set(in.scores, 2, 3)), roc_auc(paired_generation_set(in.scores, 1, 3))});
  }
  return rows;
}

std::string render_auc_tsv(std::span<const AucRow> rows) {
  std::string out = "category\tsystem\tmetric\tauc_1v2\tauc_2v3\tauc_1v3\n";
  for (const auto& r : rows) {
    out += fmt::format("{}\t{}\t{}\t{:.6f}\t{:.6f}\t{:.6f}\n", r.category, r.system, r.metric, r.auc_1v2, r.auc_2v3,
                       r.auc_1v3);
  }
  return out;
}

std::string render_auc_table(std::span<const AucRow> rows) {
  std::vector<std::string> metrics;
  std::vector<std::pair<std::string, std::string>> keys;
  std::map<std::pair<std::string, std::string>, std::map<std::string, const AucRow*>> cells;
  for (const auto& r : rows) {
    if (std::find(metrics.begin(), metrics.end(), r.metric) == metrics.end()) metrics.push_back(r.metric);
    std::pair key{r.category, r.system};
    if (!cells.count(key)) keys.push_back(key);
    cells[key][r.metric] = &r;
  }
  std::size_t wc = 8, ws = 6, wm = 6;
  for (const auto& [c, s] : keys) {
    wc = std::max(wc, c.size());
    ws = std::max(ws, s.size());
  }
  for (const auto& m : metrics) wm = std::max(wm, m.size());
  const std::size_t group = metrics.size() * (wm + 1) - 1;

  std::string top = fmt::format("{:<{}} | {:<{}}", "Category", wc, "System", ws);
  for (const char* pair : {"1 vs 2", "2 vs 3", "1 vs 3"}) top += fmt::format(" | {:^{}}", pair, group);
  std::string sub = fmt::format("{:<{}} | {:<{}}", "", wc, "", ws);
  for (int p = 0; p < 3; ++p) {
    sub += " |";
    for (const auto& m : metrics) sub += fmt::format(" {:>{}}", m, wm);
  }
  std::string out = top + "\n" + sub + "\n" + std::string(sub.size(), '-') + "\n";
  for (const auto& key : keys) {
    out += fmt::format("{:<{}} | {:<{}}", key.first, wc, key.second, ws);
    for (double AucRow::*field : {&AucRow::auc_1v2, &AucRow::auc_2v3, &AucRow::auc_1v3}) {
      out += " |";
      for (const auto& m : metrics) {
        const auto it = cells[key].find(m);
        out += it == cells[key].end() ? fmt::format(" {:>{}}", "-", wm) : fmt::format(" {:>{}.3f}", it->second->*field, wm);
      }
    }
    out += "\n";
  }
  return out;
}

}  // namespace telephone
