#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "selreg/dataset.hpp"
#include "selreg/error.hpp"
#include "selreg/random.hpp"

namespace selreg {

// ---------------------------------------------------------------------------
// Response functions
// ---------------------------------------------------------------------------

inline double sd_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

//! H(0) = 1.
inline double sd_heaviside(double x) { return x >= 0.0 ? 1.0 : 0.0; }

//! Piecewise-linear interpolation through (knots, values), held constant
//! outside the knot range.
struct PiecewiseLinear {
  std::vector<double> knots;
  std::vector<double> values;

  void validate() const {
    if (knots.empty() || knots.size() != values.size())
      throw Error("table function needs matching, nonempty knot and value lists");
    for (std::size_t i = 1; i < knots.size(); ++i)
      if (!(knots[i] > knots[i - 1])) throw Error("table knots must be strictly increasing");
  }

  double operator()(double x) const {
    if (x <= knots.front()) return values.front();
    if (x >= knots.back()) return values.back();
    const auto it = std::upper_bound(knots.begin(), knots.end(), x);
    const auto k = static_cast<std::size_t>(it - knots.begin());
    const double t = (x - knots[k - 1]) / (knots[k] - knots[k - 1]);
    return values[k - 1] + t * (values[k] - values[k - 1]);
  }
};

//! Named mean / standard-deviation functions of the covariate. The quadratic
//! uses |x|^2 / 4; the scalar shapes act on the first coordinate.
struct ResponseFunction {
  enum class Kind { Quadratic, Sigmoid, Heaviside, Constant, Table };

  Kind kind = Kind::Constant;
  double constant = 0.0;
  PiecewiseLinear table;

  static ResponseFunction quadratic() { return {Kind::Quadratic, 0.0, {}}; }
  static ResponseFunction sigmoid() { return {Kind::Sigmoid, 0.0, {}}; }
  static ResponseFunction heaviside() { return {Kind::Heaviside, 0.0, {}}; }
  static ResponseFunction constant_value(double c) { return {Kind::Constant, c, {}}; }
  static ResponseFunction from_table(PiecewiseLinear t) {
    t.validate();
    return {Kind::Table, 0.0, std::move(t)};
  }

  double operator()(Point x) const {
    switch (kind) {
      case Kind::Quadratic: {
        double s = 0.0;
        for (double v : x) s += v * v;
        return s / 4.0;
      }
      case Kind::Sigmoid: return sd_sigmoid(x[0]);
      case Kind::Heaviside: return sd_heaviside(x[0]);
      case Kind::Constant: return constant;
      case Kind::Table: return table(x[0]);
    }
    return 0.0;
  }
};

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

struct CovariateDist {
  enum class Kind { Uniform, Normal };
  Kind kind = Kind::Uniform;
  double p1 = -2.0;  // lo or mean
  double p2 = 2.0;   // hi or sd

  static CovariateDist uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }
  static CovariateDist normal(double mu, double sd) { return {Kind::Normal, mu, sd}; }

  void validate() const {
    if (kind == Kind::Uniform && !(p1 < p2)) throw Error("uniform covariate needs lo < hi");
    if (kind == Kind::Normal && !(p2 > 0.0)) throw Error("normal covariate needs sd > 0");
  }

  double draw(CounterRng& rng) const {
    return kind == Kind::Uniform ? rng.uniform(p1, p2) : p1 + p2 * rng.normal();
  }
};

//! Y = f(X) + sd(X) * eps with X drawn coordinatewise and eps ~ N(0, 1).
struct SyntheticSpec {
  std::vector<CovariateDist> covariates{CovariateDist::uniform(-2.0, 2.0)};
  ResponseFunction mean_fn = ResponseFunction::quadratic();
  ResponseFunction sd_fn = ResponseFunction::sigmoid();
  std::size_t n = 100;
  std::uint64_t seed = 0;

  std::size_t dim() const noexcept { return covariates.size(); }

  void validate() const {
    if (covariates.empty()) throw Error("synthetic spec needs at least one covariate");
    for (const auto& c : covariates) c.validate();
    if (n < 1) throw Error("synthetic spec needs n >= 1");
  }
};

//! Draws are made row by row (covariates first, then the noise) from a single
//! counter-based stream keyed by the seed; normals come from inverting the CDF.
inline Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t d = spec.dim();
  CounterRng rng(derive_seed(spec.seed, {}));
  std::vector<double> x(spec.n * d);
  std::vector<double> y(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    for (std::size_t j = 0; j < d; ++j) x[i * d + j] = spec.covariates[j].draw(rng);
    const Point row(x.data() + i * d, d);
    const double eps = rng.normal();
    y[i] = spec.mean_fn(row) + spec.sd_fn(row) * eps;
  }
  return Dataset(d, std::move(x), std::move(y));
}

// ---------------------------------------------------------------------------
// Covariate-shift split
// ---------------------------------------------------------------------------

struct ShiftSplit {
  std::size_t pivot_feature = 0;
  double train_quantile = 0.7;
  double swap_fraction = 0.2;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(train_quantile > 0.0 && train_quantile < 1.0)) throw Error("train_quantile must lie in (0, 1)");
    if (!(swap_fraction >= 0.0 && swap_fraction < 1.0)) throw Error("swap_fraction must lie in [0, 1)");
  }
};

struct SplitResult {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_rows;  // indices into the input, ascending
  std::vector<std::size_t> test_rows;
};

//! Part A takes the floor(q n) rows with the lowest pivot values (ties by row
//! index), part B the rest. Then floor(s |A|) random rows of A and
//! floor(s |B|) random rows of B change sides. A becomes train, B test.
inline SplitResult covariate_shift_split(const Dataset& data, const ShiftSplit& split) {
  split.validate();
  const std::size_t n = data.size();
  if (split.pivot_feature >= data.dim())
    throw Error("pivot feature " + std::to_string(split.pivot_feature) + " out of range");
  if (n < 10) throw Error("covariate-shift split needs at least 10 rows");

  const std::size_t p = split.pivot_feature;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return data.x(a, p) < data.x(b, p); });
  if (data.x(order.front(), p) == data.x(order.back(), p))
    throw Error("pivot feature is constant; split is undefined");

  const auto n_a = static_cast<std::size_t>(std::floor(split.train_quantile * static_cast<double>(n)));
  std::vector<std::size_t> part_a(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_a));
  std::vector<std::size_t> part_b(order.begin() + static_cast<std::ptrdiff_t>(n_a), order.end());

  CounterRng rng(derive_seed(split.seed, {0x5917}));
  const auto k_a = static_cast<std::size_t>(std::floor(split.swap_fraction * static_cast<double>(part_a.size())));
  const auto k_b = static_cast<std::size_t>(std::floor(split.swap_fraction * static_cast<double>(part_b.size())));
  const auto move_a = sample_without_replacement(part_a.size(), k_a, rng);
  const auto move_b = sample_without_replacement(part_b.size(), k_b, rng);

  std::vector<bool> in_train(n, false);
  for (auto r : part_a) in_train[r] = true;
  for (auto k : move_a) in_train[part_a[k]] = false;
  for (auto k : move_b) in_train[part_b[k]] = true;

  SplitResult out;
  for (std::size_t r = 0; r < n; ++r) (in_train[r] ? out.train_rows : out.test_rows).push_back(r);
  if (out.train_rows.empty() || out.test_rows.empty()) throw Error("split produced an empty part");
  out.train = data.subset(out.train_rows);
  out.test = data.subset(out.test_rows);
  return out;
}

// ---------------------------------------------------------------------------
// Standardization
// ---------------------------------------------------------------------------

//! Per-column affine map (x - mean) / sd fitted on training covariates.
//! Zero-variance columns pass through unchanged and are flagged.
struct Scaler {
  std::vector<double> mean;
  std::vector<double> sd;
  std::vector<bool> passthrough;

  Dataset apply(const Dataset& data) const { return transform(data, false); }
  Dataset inverse(const Dataset& data) const { return transform(data, true); }

 private:
  Dataset transform(const Dataset& data, bool invert) const {
    if (data.dim() != mean.size()) throw Error("scaler dimension does not match data");
    std::vector<double> x = data.covariates();
    const std::size_t d = data.dim();
    for (std::size_t i = 0; i < data.size(); ++i)
      for (std::size_t j = 0; j < d; ++j) {
        if (passthrough[j]) continue;
        double& v = x[i * d + j];
        v = invert ? v * sd[j] + mean[j] : (v - mean[j]) / sd[j];
      }
    return Dataset(d, std::move(x), data.responses());
  }
};

inline Scaler fit_scaler(const Dataset& train) {
  if (train.size() < 2) throw Error("standardization needs at least 2 training rows");
  const std::size_t n = train.size(), d = train.dim();
  Scaler s;
  s.mean.assign(d, 0.0);
  s.sd.assign(d, 1.0);
  s.passthrough.assign(d, false);
  for (std::size_t j = 0; j < d; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += train.x(i, j);
    m /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (train.x(i, j) - m) * (train.x(i, j) - m);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd > 0.0) {
      s.mean[j] = m;
      s.sd[j] = sd;
    } else {
      s.mean[j] = 0.0;
      s.passthrough[j] = true;
    }
  }
  return s;
}

struct Standardized {
  Dataset train;
  Dataset test;
  Scaler scaler;
};

//! Scales covariates only; responses are left as they are.
inline Standardized standardize(const Dataset& train, const Dataset& test) {
  auto scaler = fit_scaler(train);
  return {scaler.apply(train), scaler.apply(test), std::move(scaler)};
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

class CsvError : public Error {
 public:
  CsvError(std::size_t row, std::size_t column, const std::string& what)
      : Error(location(row, column) + what), row_(row), column_(column) {}

  //! 1-based line number in the file; column is 1-based, 0 when not applicable.
  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string location(std::size_t row, std::size_t column) {
    std::string s = "row " + std::to_string(row);
    if (column > 0) s += ", column " + std::to_string(column);
    return s + ": ";
  }
  std::size_t row_, column_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

//! Numeric table; the optional target column becomes the response.
struct CsvTable {
  std::vector<std::string> header;
  std::size_t columns = 0;
  std::vector<double> cells;  // row-major
  std::size_t rows() const noexcept { return columns == 0 ? 0 : cells.size() / columns; }
};

inline CsvTable parse_csv(std::istream& in, bool has_header) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = has_header;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    if (detail::trim(view).empty()) continue;
    const auto fields = detail::split_fields(view);
    if (header_pending) {
      for (auto f : fields) table.header.emplace_back(f);
      table.columns = fields.size();
      header_pending = false;
      continue;
    }
    if (table.columns == 0) table.columns = fields.size();
    if (fields.size() != table.columns)
      throw CsvError(line_no, 0,
                     "expected " + std::to_string(table.columns) + " fields, found " + std::to_string(fields.size()));
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto f = fields[c];
      double v = 0.0;
      const auto* first = f.data();
      if (!f.empty() && *first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, f.data() + f.size(), v);
      if (f.empty() || ec != std::errc() || ptr != f.data() + f.size())
        throw CsvError(line_no, c + 1, "not a number: '" + std::string(f) + "'");
      if (!std::isfinite(v)) throw CsvError(line_no, c + 1, "non-finite value '" + std::string(f) + "'");
      table.cells.push_back(v);
    }
  }
  if (table.rows() == 0) throw CsvError(line_no, 0, "no data rows");
  return table;
}

inline Dataset to_dataset(const CsvTable& table, std::optional<std::size_t> target_column) {
  const std::size_t cols = table.columns;
  if (target_column && *target_column >= cols)
    throw Error("target column " + std::to_string(*target_column) + " out of range (" + std::to_string(cols) +
                " columns)");
  const std::size_t d = target_column ? cols - 1 : cols;
  if (d == 0) throw Error("table has no covariate columns");
  std::vector<double> x;
  std::vector<double> y;
  x.reserve(table.rows() * d);
  for (std::size_t r = 0; r < table.rows(); ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = table.cells[r * cols + c];
      if (target_column && c == *target_column)
        y.push_back(v);
      else
        x.push_back(v);
    }
  return Dataset(d, std::move(x), std::move(y));
}

inline Dataset load_csv(const std::string& path, bool has_header, std::optional<std::size_t> target_column) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return to_dataset(parse_csv(in, has_header), target_column);
}

//! Writes covariates followed by the response (when present), 17 significant digits.
inline void write_csv(const std::string& path, const Dataset& data, const std::vector<std::string>& header = {}) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  if (!header.empty()) {
    for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
    out << '\n';
  }
  out.precision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < data.dim(); ++j) out << (j ? "," : "") << data.x(i, j);
    if (data.has_response()) out << ',' << data.y(i);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Airfoil-like stand-in
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& airfoil_standin_header() {
  static const std::vector<std::string> h{"frequency", "angle_of_attack", "chord_length",
                                          "free_stream_velocity", "suction_side_thickness", "sound_pressure"};
  return h;
}

//! Synthetic 5-feature table shaped like the UCI airfoil self-noise data:
//! discrete chord and velocity levels, a log-spread frequency, a skewed angle
//! of attack, and a response whose noise grows sharply with the angle, so the
//! noise variance spans roughly 2 to 60 (squared dB).
inline Dataset generate_airfoil_standin(std::size_t n = 1500, std::uint64_t seed = 20231) {
  static constexpr double chords[] = {0.0254, 0.0508, 0.1016, 0.1524, 0.2286, 0.3048};
  static constexpr double velocities[] = {31.7, 39.6, 55.5, 71.3};
  CounterRng rng(derive_seed(seed, {0xA1F0}));
  std::vector<double> x;
  std::vector<double> y;
  x.reserve(5 * n);
  y.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double log_f = rng.uniform(std::log10(200.0), std::log10(20000.0));
    const double u = rng.uniform();
    const double angle = 22.2 * u * u;
    const double chord = chords[rng.below(6)];
    const double velocity = velocities[rng.below(4)];
    const double thickness =
        0.0004 * std::exp(0.12 * angle) * std::sqrt(chord / 0.0254) * std::exp(0.15 * rng.normal());

    const double mean = 132.0 - 4.0 * (log_f - 3.2) * (log_f - 3.2) - 25.0 * chord + 0.08 * velocity -
                        0.2 * angle - 40.0 * thickness;
    const double sd = 1.4 + 6.0 / (1.0 + std::exp(-(angle - 9.0) / 2.0)) + (log_f > 3.9 ? 1.0 : 0.0);
    x.insert(x.end(), {std::pow(10.0, log_f), angle, chord, velocity, thickness});
    y.push_back(mean + sd * rng.normal());
  }
  return Dataset(5, std::move(x), std::move(y));
}

}  // namespace selreg
