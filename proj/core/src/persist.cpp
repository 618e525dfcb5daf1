#include "dcw/persist.hpp"

#include <algorithm>
#include <map>

#include "dcw/errors.hpp"
#include "dcw/io_util.hpp"

namespace dcw {
namespace {

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out.push_back(sep);
    out += parts[i];
  }
  return out;
}

}  // namespace

void save_cov_series(const CovMatrixSeries& series, const std::string& path) {
  std::string out = "# assets," + join(series.tickers, ',') + "\n";
  out += "date,i,j,value\n";
  const Eigen::Index m = static_cast<Eigen::Index>(series.tickers.size());
  for (const auto& e : series.entries) {
    if (e.cov.rows() != m || e.cov.cols() != m)
      throw DataError("covariance entry dimension mismatch on " + e.date.to_string());
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = i; j < m; ++j)
        out += e.date.to_string() + "," + std::to_string(i) + "," +
               std::to_string(j) + "," + fmt_double(e.cov(i, j)) + "\n";
  }
  write_file(path, out);
}

CovMatrixSeries load_cov_series(const std::string& path,
                                const std::vector<std::string>* expected_tickers) {
  auto lines = read_lines(path);
  if (lines.size() < 2) throw DataError("covariance file too short: " + path);
  if (lines[0].rfind("# assets,", 0) != 0)
    throw ParseError("missing '# assets' ordering line", 1);
  auto tickers = split_csv(lines[0].substr(9));
  if (tickers.empty() || (tickers.size() == 1 && tickers[0].empty()))
    throw ParseError("empty asset list", 1);
  if (expected_tickers && tickers != *expected_tickers)
    throw DataError("asset ordering in " + path + " does not match configuration");
  if (split_csv(lines[1]) != std::vector<std::string>{"date", "i", "j", "value"})
    throw ParseError("expected header 'date,i,j,value'", 2);

  const Eigen::Index m = static_cast<Eigen::Index>(tickers.size());
  CovMatrixSeries series;
  series.tickers = tickers;

  Date cur;
  bool have_cur = false;
  Eigen::MatrixXd acc;
  Eigen::MatrixXi seen;
  auto flush = [&] {
    if (!have_cur) return;
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = i; j < m; ++j)
        if (!seen(i, j))
          throw DataError("incomplete matrix for " + cur.to_string());
    CovEntry e;
    e.date = cur;
    e.cov = acc.selfadjointView<Eigen::Upper>();
    series.entries.push_back(std::move(e));
  };

  for (size_t k = 2; k < lines.size(); ++k) {
    if (lines[k].empty()) continue;
    long lineno = static_cast<long>(k + 1);
    auto f = split_csv(lines[k]);
    if (f.size() != 4) throw ParseError("expected 4 fields", lineno);
    Date d;
    try {
      d = Date::parse(f[0]);
    } catch (const ParseError& e) {
      throw ParseError(std::string("bad date: ") + e.what(), lineno);
    }
    long i = parse_long_field(f[1], lineno);
    long j = parse_long_field(f[2], lineno);
    if (i > j || j >= m) throw ParseError("index outside upper triangle", lineno);
    double v = parse_double_field(f[3], lineno);
    if (!have_cur || d != cur) {
      if (have_cur && d < cur)
        throw ParseError("dates out of order", lineno);
      flush();
      cur = d;
      have_cur = true;
      acc = Eigen::MatrixXd::Zero(m, m);
      seen = Eigen::MatrixXi::Zero(m, m);
    }
    if (seen(i, j)) throw ParseError("duplicate entry", lineno);
    acc(i, j) = v;
    seen(i, j) = 1;
  }
  flush();
  if (series.entries.empty()) throw DataError("no covariance entries in " + path);
  return series;
}

void save_model_params(const ModelParams& params, const std::string& path) {
  std::string out = "tickers=" + join(params.tickers, ',') + "\n";
  if (params.har) {
    for (const auto& [ticker, p] : *params.har) {
      out += "alpha0." + ticker + "=" + fmt_double(p.alpha0) + "\n";
      out += "alpha1." + ticker + "=" + fmt_double(p.alpha1) + "\n";
      out += "alpha2." + ticker + "=" + fmt_double(p.alpha2) + "\n";
      out += "alpha3." + ticker + "=" + fmt_double(p.alpha3) + "\n";
    }
  }
  if (params.dcc) {
    out += "dcc.a=" + fmt_double(params.dcc->a) + "\n";
    out += "dcc.b=" + fmt_double(params.dcc->b) + "\n";
    const auto& pbar = params.dcc->pbar;
    for (Eigen::Index i = 0; i < pbar.rows(); ++i)
      for (Eigen::Index j = i; j < pbar.cols(); ++j)
        out += "dcc.pbar." + std::to_string(i) + "." + std::to_string(j) + "=" +
               fmt_double(pbar(i, j)) + "\n";
  }
  if (params.dcw) {
    for (size_t i = 0; i < params.tickers.size(); ++i) {
      const auto& t = params.tickers[i];
      auto idx = static_cast<Eigen::Index>(i);
      out += "dcw.astar." + t + "=" + fmt_double(params.dcw->astar(idx)) + "\n";
      out += "dcw.bstar." + t + "=" + fmt_double(params.dcw->bstar(idx)) + "\n";
      out += "dcw.omegabar." + t + "=" + fmt_double(params.dcw->omega_bar(idx)) + "\n";
    }
  }
  write_file(path, out);
}

ModelParams load_model_params(const std::string& path) {
  auto lines = read_lines(path);
  if (lines.empty() || lines[0].rfind("tickers=", 0) != 0)
    throw ParseError("missing tickers= line", 1);

  ModelParams params;
  params.tickers = split_csv(lines[0].substr(8));
  const Eigen::Index m = static_cast<Eigen::Index>(params.tickers.size());
  auto ticker_index = [&](const std::string& t, long lineno) -> Eigen::Index {
    for (size_t i = 0; i < params.tickers.size(); ++i)
      if (params.tickers[i] == t) return static_cast<Eigen::Index>(i);
    throw ParseError("unknown ticker " + t, lineno);
  };

  std::map<std::string, HarParams> har;
  bool has_dcc = false;
  DccParams dcc;
  bool has_dcw = false;
  DcwParams dcw;

  auto ensure_dcw = [&] {
    if (!has_dcw) {
      dcw.astar = Eigen::VectorXd::Zero(m);
      dcw.bstar = Eigen::VectorXd::Zero(m);
      dcw.omega_bar = Eigen::VectorXd::Zero(m);
      has_dcw = true;
    }
  };
  auto ensure_dcc = [&] {
    if (!has_dcc) {
      dcc.pbar = Eigen::MatrixXd::Identity(m, m);
      has_dcc = true;
    }
  };

  for (size_t k = 1; k < lines.size(); ++k) {
    if (lines[k].empty()) continue;
    long lineno = static_cast<long>(k + 1);
    auto eq = lines[k].find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", lineno);
    std::string key = lines[k].substr(0, eq);
    double value = parse_double_field(lines[k].substr(eq + 1), lineno);

    if (key.rfind("alpha", 0) == 0 && key.size() > 7 && key[6] == '.') {
      int which = key[5] - '0';
      if (which < 0 || which > 3) throw ParseError("unknown key " + key, lineno);
      std::string ticker = key.substr(7);
      ticker_index(ticker, lineno);
      auto& p = har[ticker];
      (which == 0 ? p.alpha0 : which == 1 ? p.alpha1 : which == 2 ? p.alpha2 : p.alpha3) = value;
    } else if (key == "dcc.a") {
      ensure_dcc();
      dcc.a = value;
    } else if (key == "dcc.b") {
      ensure_dcc();
      dcc.b = value;
    } else if (key.rfind("dcc.pbar.", 0) == 0) {
      ensure_dcc();
      std::string rest = key.substr(9);
      auto dot = rest.find('.');
      if (dot == std::string::npos) throw ParseError("bad pbar key", lineno);
      long i = parse_long_field(rest.substr(0, dot), lineno);
      long j = parse_long_field(rest.substr(dot + 1), lineno);
      if (i > j || j >= m) throw ParseError("pbar index out of range", lineno);
      dcc.pbar(i, j) = value;
      dcc.pbar(j, i) = value;
    } else if (key.rfind("dcw.astar.", 0) == 0) {
      ensure_dcw();
      dcw.astar(ticker_index(key.substr(10), lineno)) = value;
    } else if (key.rfind("dcw.bstar.", 0) == 0) {
      ensure_dcw();
      dcw.bstar(ticker_index(key.substr(10), lineno)) = value;
    } else if (key.rfind("dcw.omegabar.", 0) == 0) {
      ensure_dcw();
      dcw.omega_bar(ticker_index(key.substr(13), lineno)) = value;
    } else {
      throw ParseError("unknown key " + key, lineno);
    }
  }

  if (!har.empty()) params.har = std::move(har);
  if (has_dcc) params.dcc = std::move(dcc);
  if (has_dcw) params.dcw = std::move(dcw);
  return params;
}

void save_weight_series(const WeightSeries& series, const std::string& path) {
  std::string out = "date,ticker,weight\n";
  for (size_t t = 0; t < series.dates.size(); ++t)
    for (size_t i = 0; i < series.tickers.size(); ++i)
      out += series.dates[t].to_string() + "," + series.tickers[i] + "," +
             fmt_double(series.w(static_cast<Eigen::Index>(t),
                                 static_cast<Eigen::Index>(i))) +
             "\n";
  write_file(path, out);
}

WeightSeries load_weight_series(const std::string& path) {
  auto lines = read_lines(path);
  if (lines.size() < 2) throw DataError("weight file too short: " + path);
  if (split_csv(lines[0]) != std::vector<std::string>{"date", "ticker", "weight"})
    throw ParseError("expected header 'date,ticker,weight'", 1);

  std::map<Date, std::map<std::string, double>> rows;
  std::vector<std::string> ticker_order;
  for (size_t k = 1; k < lines.size(); ++k) {
    if (lines[k].empty()) continue;
    long lineno = static_cast<long>(k + 1);
    auto f = split_csv(lines[k]);
    if (f.size() != 3) throw ParseError("expected 3 fields", lineno);
    if (std::find(ticker_order.begin(), ticker_order.end(), f[1]) ==
        ticker_order.end())
      ticker_order.push_back(f[1]);
    rows[Date::parse(f[0])][f[1]] = parse_double_field(f[2], lineno);
  }
  if (rows.empty()) throw DataError("no weights in " + path);

  WeightSeries out;
  out.tickers = std::move(ticker_order);
  out.w.resize(static_cast<Eigen::Index>(rows.size()),
               static_cast<Eigen::Index>(out.tickers.size()));
  Eigen::Index t = 0;
  for (const auto& [date, row] : rows) {
    out.dates.push_back(date);
    for (size_t i = 0; i < out.tickers.size(); ++i) {
      auto it = row.find(out.tickers[i]);
      if (it == row.end())
        throw DataError("missing weight for " + out.tickers[i] + " on " +
                        date.to_string());
      out.w(t, static_cast<Eigen::Index>(i)) = it->second;
    }
    ++t;
  }
  return out;
}

}  // namespace dcw
