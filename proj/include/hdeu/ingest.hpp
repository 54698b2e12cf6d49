#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hdeu/hdtest.hpp"
#include "hdeu/portfolio.hpp"

namespace hdeu {

struct MissingCell {
  std::size_t row = 0;  // 1-based data row (header excluded)
  std::string date;
  std::string ticker;
};

/// Wide return table: one row per date, one column per ticker. Missing cells
/// are stored as NaN and listed in `missing`.
struct ReturnDataset {
  std::vector<std::string> tickers;
  std::vector<std::string> dates;
  Mat returns;  // T x p_total
  std::vector<MissingCell> missing;

  Index periods() const { return returns.rows(); }
  Index assets() const { return returns.cols(); }
};

/// Reads `date,TICKER1,TICKER2,...` CSV. Dates must be ISO-8601 (YYYY-MM-DD)
/// and strictly increasing. Empty, NA and NaN cells are recorded as missing;
/// anything else that is not a finite number is a ParseError.
ReturnDataset load_returns(const std::string& path);
ReturnDataset parse_returns(std::istream& in);

/// Writes the dataset in the format load_returns reads, 17 significant digits.
void write_returns(const std::string& path, const ReturnDataset& data);
void write_returns(std::ostream& out, const ReturnDataset& data);

/// Builds a dataset from a p x T return matrix (for example simulator output).
ReturnDataset dataset_from_matrix(const Mat& x_by_column, const std::vector<std::string>& tickers,
                                  const std::vector<std::string>& dates);

enum class UniverseRule {
  COMPLETE_COLUMNS,  // drop tickers with any missing cell, then take the first p
  DROP_ROWS          // take the first p tickers, then drop dates with gaps in them
};

struct UniverseSelection {
  ReturnDataset data;
  std::vector<std::string> excluded_tickers;
  std::vector<std::string> dropped_dates;
};

/// Tickers sorted alphabetically, first p retained. Throws InsufficientAssets.
UniverseSelection select_universe(const ReturnDataset& data, Index p,
                                  UniverseRule rule = UniverseRule::COMPLETE_COLUMNS);

struct RollingRecord {
  std::string window_end;
  Index end_index = 0;  // 0-based row of the last observation in the window
  double alpha_hat = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  bool reject = false;
  double statistic = 0.0;
  double p_value = 1.0;
  double r_gmv_hat = 0.0;
  double r_b_hat = 0.0;
  double v_c_hat = 0.0;
  double v_b_hat = 0.0;
};

struct InvalidWindow {
  std::string window_end;
  std::string message;
};

enum class RollingTest { TILDE, HAT };

struct RollingOptions {
  double level = 0.95;
  RollingTest test = RollingTest::TILDE;
  UniverseRule rule = UniverseRule::COMPLETE_COLUMNS;
  unsigned workers = 0;
};

struct RollingResult {
  std::vector<RollingRecord> records;
  std::vector<InvalidWindow> invalid;
  std::vector<std::string> tickers;  // selected universe
  std::vector<std::string> excluded_tickers;
  Index p = 0;
  Index n = 0;
  double c = 0.0;
  double gamma = 0.0;
  RollingOptions options;
};

/// Windows of n = round(p/c) observations ending at every period from n to T.
/// `target` must follow the selected (sorted) tickers; nullopt means equally
/// weighted.
RollingResult rolling_analysis(const ReturnDataset& data, Index p, double c, double gamma,
                               const std::optional<PortfolioWeights>& target,
                               const RollingOptions& opt = {});

/// One window, computed from scratch; rows [end - n + 1, end].
RollingRecord analyze_window(const ReturnDataset& data, Index end_index, Index n, double gamma,
                             const PortfolioWeights& target, const RollingOptions& opt);

}  // namespace hdeu
