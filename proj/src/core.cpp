#include "infcost/core.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace infcost {

XReal::XReal(double v) {
  if (std::isnan(v)) throw std::domain_error("XReal: NaN is not an extended real");
  if (std::isinf(v)) {
    kind_ = v > 0 ? Kind::PosInf : Kind::NegInf;
  } else {
    v_ = v;
  }
}

double XReal::value() const {
  if (!finite()) throw std::domain_error("XReal::value on an infinite value");
  return v_;
}

double XReal::to_double() const {
  switch (kind_) {
    case Kind::PosInf: return HUGE_VAL;
    case Kind::NegInf: return -HUGE_VAL;
    default: return v_;
  }
}

XReal XReal::operator-() const {
  switch (kind_) {
    case Kind::PosInf: return neg_inf();
    case Kind::NegInf: return inf();
    default: return XReal(-v_);
  }
}

bool operator==(const XReal& a, const XReal& b) {
  if (a.kind_ != b.kind_) return false;
  return !a.finite() || a.v_ == b.v_;
}

std::partial_ordering operator<=>(const XReal& a, const XReal& b) {
  if (a.kind_ != b.kind_) {
    return static_cast<int>(a.kind_) <=> static_cast<int>(b.kind_);
  }
  if (!a.finite()) return std::partial_ordering::equivalent;
  return a.v_ <=> b.v_;
}

XReal xreal_add(XReal a, XReal b, InfRule rule) {
  if (a.finite() && b.finite()) return XReal(a.value() + b.value());
  const bool opposite = (a.is_pos_inf() && b.is_neg_inf()) || (a.is_neg_inf() && b.is_pos_inf());
  if (opposite) return rule == InfRule::PlusWins ? XReal::inf() : XReal::neg_inf();
  return a.finite() ? b : a;
}

std::string to_string(XReal x) {
  if (x.is_pos_inf()) return "inf";
  if (x.is_neg_inf()) return "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << x.value();
  return os.str();
}

std::ostream& operator<<(std::ostream& os, XReal x) { return os << to_string(x); }

double dot(const Point& a, const Point& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_distance(const Point& a, const Point& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

std::string to_string(const Point& p) {
  std::ostringstream os;
  os << std::setprecision(17) << '(';
  for (std::size_t i = 0; i < p.size(); ++i) os << (i ? "," : "") << p[i];
  os << ')';
  return os.str();
}

CostFunction CostFunction::polar() { return CostFunction(CostKind::Polar); }
CostFunction CostFunction::bilinear() { return CostFunction(CostKind::Bilinear); }
CostFunction CostFunction::quadratic() { return CostFunction(CostKind::Quadratic); }

CostFunction CostFunction::table(std::vector<Point> rows, std::vector<Point> cols,
                                 std::vector<std::vector<XReal>> values) {
  auto t = std::make_shared<CostTable>();
  if (values.size() != rows.size()) throw std::invalid_argument("table: row count mismatch");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (values[i].size() != cols.size()) throw std::invalid_argument("table: ragged row");
    for (const XReal& v : values[i]) {
      if (v.is_neg_inf()) throw std::invalid_argument("table: -inf is not a valid cost");
    }
    if (!t->row_index.emplace(rows[i], i).second) {
      throw std::invalid_argument("table: duplicate row id " + to_string(rows[i]));
    }
  }
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (!t->col_index.emplace(cols[j], j).second) {
      throw std::invalid_argument("table: duplicate column id " + to_string(cols[j]));
    }
  }
  t->rows = std::move(rows);
  t->cols = std::move(cols);
  t->values = std::move(values);
  CostFunction c(CostKind::Table);
  c.table_ = std::move(t);
  return c;
}

std::string CostFunction::name() const {
  switch (kind_) {
    case CostKind::Polar: return "polar";
    case CostKind::Bilinear: return "bilinear";
    case CostKind::Quadratic: return "quadratic";
    case CostKind::Table: return "table";
  }
  return "unknown";
}

XReal CostFunction::operator()(const Point& x, const Point& y) const {
  switch (kind_) {
    case CostKind::Polar: {
      const double s = dot(x, y);
      if (!(s > 1.0)) return XReal::inf();
      return XReal(-std::log(s - 1.0));
    }
    case CostKind::Bilinear: return XReal(-dot(x, y));
    case CostKind::Quadratic: return XReal(0.5 * squared_distance(x, y));
    case CostKind::Table: {
      auto r = table_->row_index.find(x);
      auto c = table_->col_index.find(y);
      if (r == table_->row_index.end() || c == table_->col_index.end()) {
        throw std::out_of_range("table cost: unknown point " +
                                to_string(r == table_->row_index.end() ? x : y));
      }
      return table_->values[r->second][c->second];
    }
  }
  throw std::logic_error("unreachable cost kind");
}

bool CostFunction::finite(const Point& x, const Point& y) const {
  if (kind_ == CostKind::Polar) return dot(x, y) > 1.0;
  return (*this)(x, y).finite();
}

XReal eval_cost(const CostFunction& c, const Point& x, const Point& y) { return c(x, y); }

std::vector<std::pair<std::size_t, std::size_t>> finiteness_set(
    const CostFunction& c, std::span<const Point> xs, std::span<const Point> ys) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < ys.size(); ++j) {
      if (c.finite(xs[i], ys[j])) out.emplace_back(i, j);
    }
  }
  return out;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\"");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
  return v;
}

Point parse_point_id(const std::string& s) {
  Point p;
  std::string cur;
  for (char ch : s + ";") {
    if (ch == ';') {
      if (cur.empty()) throw std::invalid_argument("empty coordinate in point id '" + s + "'");
      p.push_back(parse_double(trim(cur)));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  return p;
}

XReal parse_cell(const std::string& s) {
  if (s == "inf" || s == "+inf" || s == "Inf" || s == "INF") return XReal::inf();
  return XReal(parse_double(s));
}

}  // namespace

CostFunction load_table_csv(std::istream& in) {
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) throw std::invalid_argument("table csv: empty input");
  std::vector<Point> cols;
  for (std::size_t j = 1; j < rows[0].size(); ++j) cols.push_back(parse_point_id(rows[0][j]));
  std::vector<Point> row_ids;
  std::vector<std::vector<XReal>> values;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != cols.size() + 1) {
      throw std::invalid_argument("table csv: row " + std::to_string(i) + " has wrong width");
    }
    row_ids.push_back(parse_point_id(rows[i][0]));
    std::vector<XReal> r;
    for (std::size_t j = 1; j < rows[i].size(); ++j) r.push_back(parse_cell(rows[i][j]));
    values.push_back(std::move(r));
  }
  return CostFunction::table(std::move(row_ids), std::move(cols), std::move(values));
}

CostFunction load_table_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_table_csv(in);
}

std::vector<double> TransportPlan::source_marginal(std::size_t n) const {
  std::vector<double> out(n, 0.0);
  for (const auto& e : entries) out.at(e.source) += e.mass;
  return out;
}

std::vector<double> TransportPlan::target_marginal(std::size_t m) const {
  std::vector<double> out(m, 0.0);
  for (const auto& e : entries) out.at(e.target) += e.mass;
  return out;
}

}  // namespace infcost
