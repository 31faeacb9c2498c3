// Brute-force reference implementations. Written from the definitions, with
// no code shared with the library, and deliberately slow.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace telephone::oracle {

using Grid = std::vector<std::vector<double>>;

struct Refined {
  std::vector<long double> z;
  std::vector<long double> col_mean;
  std::vector<long double> col_std;
  Grid r;
};

/// Sentence fragility, iteration statistics and refined scores in long double.
Refined refine(const Grid& q);

double pearson(const std::vector<double>& x, const std::vector<double>& y);
/// Average ranks by counting smaller and equal values.
std::vector<double> ranks(const std::vector<double>& x);
double spearman(const std::vector<double>& x, const std::vector<double>& y);
/// Tau-b from explicit concordant / discordant / tied pair counts.
double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y);

/// Twice the number of (earlier > later) pairs plus ties.
std::uint64_t auc_twice_count(const std::vector<double>& earlier, const std::vector<double>& later);

struct Cell {
  std::string item;
  std::string system;
  double metric;
  double human;
};

struct Sweep {
  double epsilon;
  std::size_t correct;
  std::size_t pairs;
};

/// Re-evaluates every threshold in {0, each |dm|, each midpoint, max + 1} from
/// scratch and keeps the smallest one with the most matching pairs.
Sweep tie_sweep(const std::vector<Cell>& cells);
std::size_t tie_correct_at(const std::vector<Cell>& cells, double epsilon);

/// SPA with p-values from full enumeration of sign patterns; sides whose
/// differences are all equal get p = 1/2.
double spa_enumerated(const std::vector<Cell>& cells);

}  // namespace telephone::oracle
