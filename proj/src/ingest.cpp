#include "hdeu/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "hdeu/errors.hpp"
#include "hdeu/io.hpp"
#include "hdeu/montecarlo.hpp"

namespace hdeu {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return out;
}

bool is_iso_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9})
    if (s[i] < '0' || s[i] > '9') return false;
  const int month = std::stoi(s.substr(5, 2));
  const int day = std::stoi(s.substr(8, 2));
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

bool is_missing_token(const std::string& s) {
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "na";
}

}  // namespace

ReturnDataset parse_returns(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty input", 1, 0);
  const auto header = split_line(line);
  if (header.size() < 2) throw ParseError("header needs a date column and a ticker", 1, 0);
  std::string first = header[0];
  std::transform(first.begin(), first.end(), first.begin(), ::tolower);
  if (first != "date") throw ParseError("first header cell must be 'date'", 1, 1);
  ReturnDataset ds;
  std::set<std::string> seen;
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (header[j].empty()) throw ParseError("empty ticker name", 1, j + 1);
    if (!seen.insert(header[j]).second) throw ParseError("duplicate ticker " + header[j], 1, j + 1);
    ds.tickers.push_back(header[j]);
  }
  const std::size_t p = ds.tickers.size();
  std::vector<std::vector<double>> rows;
  std::size_t file_row = 1;
  while (std::getline(in, line)) {
    ++file_row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_line(line);
    if (cells.size() != p + 1)
      throw ParseError("expected " + std::to_string(p + 1) + " cells, found " +
                           std::to_string(cells.size()),
                       file_row, 0);
    if (!is_iso_date(cells[0])) throw ParseError("not an ISO-8601 date: '" + cells[0] + "'", file_row, 1);
    if (!ds.dates.empty() && !(cells[0] > ds.dates.back()))
      throw ParseError("dates must be strictly increasing", file_row, 1);
    ds.dates.push_back(cells[0]);
    std::vector<double> vals(p);
    for (std::size_t j = 0; j < p; ++j) {
      const std::string& tok = cells[j + 1];
      if (is_missing_token(tok)) {
        vals[j] = std::numeric_limits<double>::quiet_NaN();
        ds.missing.push_back(MissingCell{rows.size() + 1, cells[0], ds.tickers[j]});
        continue;
      }
      double v = 0.0;
      const char* b = tok.data();
      const char* e = tok.data() + tok.size();
      if (*b == '+') ++b;
      const auto res = std::from_chars(b, e, v);
      if (res.ec != std::errc() || res.ptr != e || !std::isfinite(v))
        throw ParseError("not a finite number: '" + tok + "'", file_row, j + 2);
      vals[j] = v;
    }
    rows.push_back(std::move(vals));
  }
  ds.returns.resize(static_cast<Index>(rows.size()), static_cast<Index>(p));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < p; ++j)
      ds.returns(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return ds;
}

ReturnDataset load_returns(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open return file '" + path + "'");
  return parse_returns(in);
}

void write_returns(std::ostream& out, const ReturnDataset& data) {
  out << "date";
  for (const auto& t : data.tickers) out << ',' << t;
  out << '\n';
  for (Index i = 0; i < data.periods(); ++i) {
    out << data.dates[static_cast<std::size_t>(i)];
    for (Index j = 0; j < data.assets(); ++j) {
      const double v = data.returns(i, j);
      out << ',' << (std::isnan(v) ? std::string("NA") : format_double(v));
    }
    out << '\n';
  }
}

void write_returns(const std::string& path, const ReturnDataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_returns(out, data);
}

ReturnDataset dataset_from_matrix(const Mat& x_by_column, const std::vector<std::string>& tickers,
                                  const std::vector<std::string>& dates) {
  if (static_cast<Index>(tickers.size()) != x_by_column.rows() ||
      static_cast<Index>(dates.size()) != x_by_column.cols())
    throw std::invalid_argument("dataset_from_matrix: label count mismatch");
  ReturnDataset ds;
  ds.tickers = tickers;
  ds.dates = dates;
  ds.returns = x_by_column.transpose();
  return ds;
}

UniverseSelection select_universe(const ReturnDataset& data, Index p, UniverseRule rule) {
  if (p < 1) throw std::invalid_argument("select_universe: p must be positive");
  std::vector<std::size_t> order(data.tickers.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return data.tickers[a] < data.tickers[b]; });
  UniverseSelection sel;
  std::vector<std::size_t> cols;
  if (rule == UniverseRule::COMPLETE_COLUMNS) {
    for (std::size_t j : order) {
      const bool complete = !data.returns.col(static_cast<Index>(j)).hasNaN();
      if (!complete) {
        sel.excluded_tickers.push_back(data.tickers[j]);
        continue;
      }
      if (static_cast<Index>(cols.size()) < p) cols.push_back(j);
    }
  } else {
    for (std::size_t j : order)
      if (static_cast<Index>(cols.size()) < p) cols.push_back(j);
  }
  if (static_cast<Index>(cols.size()) < p)
    throw InsufficientAssets("only " + std::to_string(cols.size()) +
                             " usable tickers, " + std::to_string(p) + " requested");
  std::vector<Index> rows;
  for (Index i = 0; i < data.periods(); ++i) {
    bool ok = true;
    for (std::size_t j : cols) ok = ok && !std::isnan(data.returns(i, static_cast<Index>(j)));
    if (ok) rows.push_back(i);
    else sel.dropped_dates.push_back(data.dates[static_cast<std::size_t>(i)]);
  }
  ReturnDataset& out = sel.data;
  out.returns.resize(static_cast<Index>(rows.size()), p);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.dates.push_back(data.dates[static_cast<std::size_t>(rows[r])]);
    for (Index j = 0; j < p; ++j)
      out.returns(static_cast<Index>(r), j) =
          data.returns(rows[r], static_cast<Index>(cols[static_cast<std::size_t>(j)]));
  }
  for (std::size_t j : cols) out.tickers.push_back(data.tickers[j]);
  return sel;
}

RollingRecord analyze_window(const ReturnDataset& data, Index end_index, Index n, double gamma,
                             const PortfolioWeights& target, const RollingOptions& opt) {
  if (end_index + 1 < n || end_index >= data.periods())
    throw std::invalid_argument("analyze_window: window out of range");
  const Mat x = data.returns.middleRows(end_index - n + 1, n).transpose();
  const SampleFit fit = fit_sample(sample_moments(x));
  const ShrinkageAnalysis an = analyze_shrinkage(fit, target, gamma);
  const bool tilde = opt.test == RollingTest::TILDE;
  const TestResult tr = shrinkage_test(an, tilde ? OmegaVariant::TILDE : OmegaVariant::HAT);
  const ConfidenceInterval ci = shrinkage_ci(an, opt.level, tilde ? CiVariant::TILDE : CiVariant::HAT);
  RollingRecord r;
  r.window_end = data.dates[static_cast<std::size_t>(end_index)];
  r.end_index = end_index;
  r.alpha_hat = an.decomp.alpha;
  r.ci_lo = ci.lower();
  r.ci_hi = ci.upper();
  r.reject = tr.reject_at(1.0 - opt.level);
  r.statistic = tr.statistic;
  r.p_value = tr.p_value;
  r.r_gmv_hat = an.est.r_gmv_hat;
  r.r_b_hat = an.est.r_b_hat;
  r.v_c_hat = an.est.v_c_hat;
  r.v_b_hat = an.est.v_b_hat;
  return r;
}

RollingResult rolling_analysis(const ReturnDataset& data, Index p, double c, double gamma,
                               const std::optional<PortfolioWeights>& target,
                               const RollingOptions& opt) {
  if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("rolling_analysis: c must lie in (0, 1)");
  if (!(opt.level > 0.0 && opt.level < 1.0))
    throw std::invalid_argument("rolling_analysis: level must lie in (0, 1)");
  const UniverseSelection sel = select_universe(data, p, opt.rule);
  RollingResult res;
  res.p = p;
  res.c = c;
  res.gamma = gamma;
  res.options = opt;
  res.n = static_cast<Index>(std::llround(static_cast<double>(p) / c));
  res.tickers = sel.data.tickers;
  res.excluded_tickers = sel.excluded_tickers;
  if (res.n <= p + 1) throw std::invalid_argument("rolling_analysis: n = round(p/c) must exceed p + 1");
  const Index t_total = sel.data.periods();
  if (t_total < res.n)
    throw std::invalid_argument("rolling_analysis: " + std::to_string(t_total) +
                                " complete periods, window needs " + std::to_string(res.n));
  const PortfolioWeights b = target ? make_weights(target->w) : equal_weights(p);
  if (b.size() != p) throw std::invalid_argument("rolling_analysis: target has wrong length");

  const Index windows = t_total - res.n + 1;
  std::vector<std::optional<RollingRecord>> recs(static_cast<std::size_t>(windows));
  std::vector<std::string> errors(static_cast<std::size_t>(windows));
  parallel_for(windows, opt.workers, [&](Index w) {
    try {
      recs[static_cast<std::size_t>(w)] = analyze_window(sel.data, res.n - 1 + w, res.n, gamma, b, opt);
    } catch (const Error& e) {
      errors[static_cast<std::size_t>(w)] = e.what();
    }
  });
  for (Index w = 0; w < windows; ++w) {
    const auto k = static_cast<std::size_t>(w);
    if (recs[k]) res.records.push_back(*recs[k]);
    else res.invalid.push_back(InvalidWindow{sel.data.dates[static_cast<std::size_t>(res.n - 1 + w)], errors[k]});
  }
  return res;
}

}  // namespace hdeu
