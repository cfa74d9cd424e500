#pragma once

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace infcost {

// How to resolve (+inf) + (-inf).
enum class InfRule { PlusWins, MinusWins };

// Extended real. Infinities are tags, never large floats.
class XReal {
 public:
  enum class Kind : unsigned char { NegInf, Finite, PosInf };

  constexpr XReal() = default;
  // Accepts +-HUGE_VAL as the matching tag; NaN throws.
  XReal(double v);  // NOLINT(google-explicit-constructor)

  static constexpr XReal inf() { return XReal(Kind::PosInf); }
  static constexpr XReal neg_inf() { return XReal(Kind::NegInf); }

  constexpr Kind kind() const { return kind_; }
  constexpr bool finite() const { return kind_ == Kind::Finite; }
  constexpr bool is_pos_inf() const { return kind_ == Kind::PosInf; }
  constexpr bool is_neg_inf() const { return kind_ == Kind::NegInf; }

  // Throws std::domain_error on infinities.
  double value() const;
  // Infinities map to +-HUGE_VAL; for output only.
  double to_double() const;

  XReal operator-() const;

  friend bool operator==(const XReal& a, const XReal& b);
  friend std::partial_ordering operator<=>(const XReal& a, const XReal& b);

 private:
  constexpr explicit XReal(Kind k) : kind_(k) {}
  Kind kind_ = Kind::Finite;
  double v_ = 0.0;
};

XReal xreal_add(XReal a, XReal b, InfRule rule);
std::string to_string(XReal x);
std::ostream& operator<<(std::ostream& os, XReal x);

using Point = std::vector<double>;

double dot(const Point& a, const Point& b);
double squared_distance(const Point& a, const Point& b);
std::string to_string(const Point& p);

enum class CostKind { Polar, Bilinear, Quadratic, Table };

struct CostTable {
  std::vector<Point> rows;
  std::vector<Point> cols;
  std::vector<std::vector<XReal>> values;  // values[row][col]
  std::map<Point, std::size_t> row_index;
  std::map<Point, std::size_t> col_index;
};

// c(x,y) with values in (-inf, +inf]. Cheap to copy; table data is shared.
class CostFunction {
 public:
  static CostFunction polar();
  static CostFunction bilinear();
  static CostFunction quadratic();
  // Throws on ragged input, duplicate ids or a -inf cell.
  static CostFunction table(std::vector<Point> rows, std::vector<Point> cols,
                            std::vector<std::vector<XReal>> values);

  CostKind kind() const { return kind_; }
  const CostTable* table_data() const { return table_.get(); }
  std::string name() const;

  XReal operator()(const Point& x, const Point& y) const;
  // Exact finiteness predicate; for Polar this is <x,y> > 1.
  bool finite(const Point& x, const Point& y) const;

 private:
  explicit CostFunction(CostKind k) : kind_(k) {}
  CostKind kind_;
  std::shared_ptr<const CostTable> table_;
};

XReal eval_cost(const CostFunction& c, const Point& x, const Point& y);

std::vector<std::pair<std::size_t, std::size_t>> finiteness_set(
    const CostFunction& c, std::span<const Point> xs, std::span<const Point> ys);

// Header row: corner cell, then column ids. Each body row: row id, then
// numbers or `inf`. An id is a point written as coordinates joined by ';'.
CostFunction load_table_csv(std::istream& in);
CostFunction load_table_csv_file(const std::string& path);

// Plan entries (source index, target index, mass).
struct TransportPlan {
  struct Entry {
    std::size_t source;
    std::size_t target;
    double mass;
  };
  std::vector<Entry> entries;

  std::vector<double> source_marginal(std::size_t n) const;
  std::vector<double> target_marginal(std::size_t m) const;
};

}  // namespace infcost
