#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "orbitkit/errors.hpp"
#include "orbitkit/format.hpp"
#include "orbitkit/space.hpp"

namespace orbitkit {

/// Real polynomial in a fixed number of variables x0..x{n-1}, kept in a
/// canonical form (merged monomials, no zero coefficients, sorted).
class Polynomial {
 public:
  struct Term {
    double coef;
    std::vector<int> exps;
  };

  Polynomial() = default;
  explicit Polynomial(int vars) : vars_(vars) {}
  Polynomial(int vars, std::vector<Term> terms) : vars_(vars), terms_(std::move(terms)) { normalize(); }

  static Polynomial constant(int vars, double c) {
    return Polynomial(vars, {Term{c, std::vector<int>(static_cast<std::size_t>(vars), 0)}});
  }

  static Polynomial variable(int vars, int i, double coef = 1.0) {
    std::vector<int> e(static_cast<std::size_t>(vars), 0);
    e[static_cast<std::size_t>(i)] = 1;
    return Polynomial(vars, {Term{coef, std::move(e)}});
  }

  int vars() const noexcept { return vars_; }
  const std::vector<Term>& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }

  int degree() const {
    int d = 0;
    for (const auto& t : terms_) d = std::max(d, total_degree(t.exps));
    return d;
  }

  double operator()(const Vector& x) const {
    double s = 0.0;
    for (const auto& t : terms_) {
      double m = t.coef;
      for (int i = 0; i < vars_; ++i) {
        const int e = t.exps[static_cast<std::size_t>(i)];
        if (e == 1) {
          m *= x(i);
        } else if (e > 1) {
          m *= std::pow(x(i), e);
        }
      }
      s += m;
    }
    return s;
  }

  Polynomial partial(int i) const {
    std::vector<Term> out;
    for (const auto& t : terms_) {
      const int e = t.exps[static_cast<std::size_t>(i)];
      if (e == 0) continue;
      Term d{t.coef * e, t.exps};
      d.exps[static_cast<std::size_t>(i)] = e - 1;
      out.push_back(std::move(d));
    }
    return Polynomial(vars_, std::move(out));
  }

  /// Derivative along the constant direction u.
  Polynomial directional(const Vector& u) const {
    std::vector<Term> out;
    for (const auto& t : terms_) {
      for (int i = 0; i < vars_; ++i) {
        const int e = t.exps[static_cast<std::size_t>(i)];
        if (e == 0 || u(i) == 0.0) continue;
        Term d{t.coef * e * u(i), t.exps};
        d.exps[static_cast<std::size_t>(i)] = e - 1;
        out.push_back(std::move(d));
      }
    }
    return Polynomial(vars_, std::move(out));
  }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    std::vector<Term> out = a.terms_;
    out.insert(out.end(), b.terms_.begin(), b.terms_.end());
    return Polynomial(std::max(a.vars_, b.vars_), std::move(out));
  }

  friend Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + b * -1.0; }

  friend Polynomial operator*(const Polynomial& a, double c) {
    std::vector<Term> out = a.terms_;
    for (auto& t : out) t.coef *= c;
    return Polynomial(a.vars_, std::move(out));
  }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    std::vector<Term> out;
    for (const auto& ta : a.terms_) {
      for (const auto& tb : b.terms_) {
        Term t{ta.coef * tb.coef, ta.exps};
        for (std::size_t i = 0; i < t.exps.size(); ++i) t.exps[i] += tb.exps[i];
        out.push_back(std::move(t));
      }
    }
    return Polynomial(a.vars_, std::move(out));
  }

  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    if (a.vars_ != b.vars_ || a.terms_.size() != b.terms_.size()) return false;
    for (std::size_t i = 0; i < a.terms_.size(); ++i) {
      if (a.terms_[i].coef != b.terms_[i].coef || a.terms_[i].exps != b.terms_[i].exps) return false;
    }
    return true;
  }

  /// Canonical text, e.g. "1.5*x0^2*x1 - 2*x2 + 3".
  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::string out;
    for (std::size_t k = 0; k < terms_.size(); ++k) {
      const auto& t = terms_[k];
      double c = t.coef;
      if (k == 0) {
        if (c < 0) {
          out += "-";
          c = -c;
        }
      } else {
        out += c < 0 ? " - " : " + ";
        c = std::abs(c);
      }
      const bool has_vars = total_degree(t.exps) > 0;
      bool need_star = false;
      if (!has_vars || c != 1.0) {
        out += format_double(c);
        need_star = true;
      }
      for (int i = 0; i < vars_; ++i) {
        const int e = t.exps[static_cast<std::size_t>(i)];
        if (e == 0) continue;
        if (need_star) out += "*";
        out += "x" + std::to_string(i);
        if (e > 1) out += "^" + std::to_string(e);
        need_star = true;
      }
    }
    return out;
  }

  /// Parses sums of monomials over x0..x{n-1}; x, y, z alias x0, x1, x2.
  static Polynomial parse(std::string_view text, int vars) {
    Parser p{text, 0, vars};
    return p.run();
  }

 private:
  static int total_degree(const std::vector<int>& e) {
    int d = 0;
    for (int v : e) d += v;
    return d;
  }

  void normalize() {
    for (auto& t : terms_) t.exps.resize(static_cast<std::size_t>(vars_), 0);
    std::sort(terms_.begin(), terms_.end(), [](const Term& a, const Term& b) {
      const int da = total_degree(a.exps), db = total_degree(b.exps);
      if (da != db) return da > db;
      return a.exps > b.exps;
    });
    std::vector<Term> merged;
    for (auto& t : terms_) {
      if (!merged.empty() && merged.back().exps == t.exps) {
        merged.back().coef += t.coef;
      } else {
        merged.push_back(std::move(t));
      }
    }
    std::erase_if(merged, [](const Term& t) { return t.coef == 0.0; });
    terms_ = std::move(merged);
  }

  struct Parser {
    std::string_view s;
    std::size_t pos;
    int vars;

    [[noreturn]] void fail(const std::string& msg) const {
      throw Error(ErrorKind::ParseError, "polynomial '" + std::string(s) + "' at column " +
                                             std::to_string(pos + 1) + ": " + msg);
    }

    void skip() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }

    bool eat(char c) {
      skip();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }

    double number() {
      skip();
      std::size_t start = pos;
      while (pos < s.size() && (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.' ||
                                s[pos] == 'e' || s[pos] == 'E' ||
                                ((s[pos] == '-' || s[pos] == '+') && pos > start &&
                                 (s[pos - 1] == 'e' || s[pos - 1] == 'E')))) {
        ++pos;
      }
      auto v = parse_double(s.substr(start, pos - start));
      if (!v) fail("bad number");
      return *v;
    }

    int variable() {
      skip();
      if (pos >= s.size()) fail("expected variable");
      const char c = s[pos];
      int idx = -1;
      if (c == 'x' && pos + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[pos + 1]))) {
        ++pos;
        std::size_t start = pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
        idx = std::stoi(std::string(s.substr(start, pos - start)));
      } else if (c == 'x' || c == 'y' || c == 'z') {
        idx = c == 'x' ? 0 : (c == 'y' ? 1 : 2);
        ++pos;
      } else {
        fail("expected variable");
      }
      if (idx >= vars) fail("variable index out of range");
      return idx;
    }

    bool at_factor_start() {
      skip();
      return pos < s.size() &&
             (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.' || s[pos] == 'x' ||
              s[pos] == 'y' || s[pos] == 'z');
    }

    Term term(double sign) {
      Term t{sign, std::vector<int>(static_cast<std::size_t>(vars), 0)};
      if (!at_factor_start()) fail("expected term");
      do {
        skip();
        if (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.') {
          t.coef *= number();
        } else {
          const int v = variable();
          int e = 1;
          if (eat('^')) {
            skip();
            std::size_t start = pos;
            while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
            if (start == pos) fail("expected exponent");
            e = std::stoi(std::string(s.substr(start, pos - start)));
          }
          t.exps[static_cast<std::size_t>(v)] += e;
        }
      } while (eat('*'));
      return t;
    }

    Polynomial run() {
      std::vector<Term> terms;
      double sign = 1.0;
      if (eat('-')) sign = -1.0;
      else eat('+');
      terms.push_back(term(sign));
      while (true) {
        skip();
        if (pos >= s.size()) break;
        if (eat('+')) {
          terms.push_back(term(1.0));
        } else if (eat('-')) {
          terms.push_back(term(-1.0));
        } else {
          fail("unexpected character");
        }
      }
      return Polynomial(vars, std::move(terms));
    }
  };

  int vars_ = 0;
  std::vector<Term> terms_;
};

/// Vector field whose components are polynomials; supports exact brackets.
class PolynomialField {
 public:
  PolynomialField() = default;
  explicit PolynomialField(std::vector<Polynomial> comps) : comps_(std::move(comps)) {
    for (const auto& c : comps_) {
      if (c.vars() != dim())
        throw Error(ErrorKind::DimensionMismatch, "polynomial field component arity differs from dimension");
    }
  }

  int dim() const noexcept { return static_cast<int>(comps_.size()); }
  const std::vector<Polynomial>& components() const noexcept { return comps_; }

  bool is_zero() const {
    return std::all_of(comps_.begin(), comps_.end(), [](const Polynomial& p) { return p.is_zero(); });
  }

  int degree() const {
    int d = 0;
    for (const auto& c : comps_) d = std::max(d, c.degree());
    return d;
  }

  Vector eval(const Vector& x) const {
    Vector v(dim());
    for (int i = 0; i < dim(); ++i) v(i) = comps_[static_cast<std::size_t>(i)](x);
    return v;
  }

  Matrix jacobian(const Vector& x) const {
    Matrix j(dim(), dim());
    for (int i = 0; i < dim(); ++i) {
      for (int k = 0; k < dim(); ++k) j(i, k) = comps_[static_cast<std::size_t>(i)].partial(k)(x);
    }
    return j;
  }

  /// D^m X(x)[u_1, ..., u_m], exact.
  Vector multilinear(const Vector& x, std::span<const Vector> dirs) const {
    Vector v(dim());
    for (int i = 0; i < dim(); ++i) {
      Polynomial p = comps_[static_cast<std::size_t>(i)];
      for (const auto& u : dirs) p = p.directional(u);
      v(i) = p(x);
    }
    return v;
  }

  /// Directional derivative of every component along the field `other`.
  PolynomialField derivative_along(const PolynomialField& other) const {
    std::vector<Polynomial> out;
    for (const auto& c : comps_) {
      Polynomial acc(dim());
      for (int k = 0; k < dim(); ++k) acc = acc + c.partial(k) * other.comps_[static_cast<std::size_t>(k)];
      out.push_back(acc);
    }
    return PolynomialField(std::move(out));
  }

  /// [X, Y] = DY·X - DX·Y.
  friend PolynomialField bracket(const PolynomialField& x, const PolynomialField& y) {
    const auto a = y.derivative_along(x);
    const auto b = x.derivative_along(y);
    std::vector<Polynomial> out;
    for (int i = 0; i < x.dim(); ++i)
      out.push_back(a.comps_[static_cast<std::size_t>(i)] - b.comps_[static_cast<std::size_t>(i)]);
    return PolynomialField(std::move(out));
  }

  PolynomialField scaled(double c) const {
    std::vector<Polynomial> out;
    for (const auto& p : comps_) out.push_back(p * c);
    return PolynomialField(std::move(out));
  }

  friend PolynomialField operator+(const PolynomialField& a, const PolynomialField& b) {
    std::vector<Polynomial> out;
    for (int i = 0; i < a.dim(); ++i) out.push_back(a.comps_[static_cast<std::size_t>(i)] + b.comps_[static_cast<std::size_t>(i)]);
    return PolynomialField(std::move(out));
  }

  friend bool operator==(const PolynomialField& a, const PolynomialField& b) { return a.comps_ == b.comps_; }

 private:
  std::vector<Polynomial> comps_;
};

}  // namespace orbitkit
