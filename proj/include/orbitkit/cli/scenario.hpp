#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "orbitkit/catalog.hpp"
#include "orbitkit/errors.hpp"
#include "orbitkit/fields.hpp"
#include "orbitkit/format.hpp"
#include "orbitkit/polynomial.hpp"
#include "orbitkit/space.hpp"

// Scenario files are line based:
//
//   format = orbitkit-scenario/1
//   seed = 7
//   [system]            builtin = heisenberg, plus its parameters
//   [space] + [field L] hand-written polynomial families
//   [lb]                jet order, sampling, optional declared bound
//   [command L]         op = flow | compose | ... and its parameters
//
// '#' starts a comment. Values are typed per key; emit() writes the
// canonical form, so emit(parse(emit(s))) == emit(s).

namespace orbitkit::cli {

inline constexpr std::string_view kScenarioFormat = "orbitkit-scenario/1";

enum class ValueType {
  boolean,
  integer,
  real,
  reals,     // space separated numbers
  word,      // single token
  words,     // space separated tokens
  texts,     // '|' separated free text (polynomials, control pieces)
  vectors,   // '|' separated groups of numbers
  point,     // numbers, or @label of an earlier command
  assigns,   // label=value tokens
};

struct Assign {
  std::string label;
  double value = 0.0;
  friend bool operator==(const Assign&, const Assign&) = default;
};

using Value = std::variant<bool, std::int64_t, double, std::vector<double>, std::string, std::vector<std::string>,
                           std::vector<std::vector<double>>, std::vector<Assign>>;

struct Param {
  std::string key;
  Value value;
  ValueType type = ValueType::real;
  int line = 0;
};

struct KeySpec {
  std::string_view key;
  ValueType type;
  bool required = false;
};

/// Ordered typed parameters; order follows the schema, not the input.
struct Params {
  std::vector<Param> items;

  const Param* find(std::string_view key) const {
    for (const auto& p : items) {
      if (p.key == key) return &p;
    }
    return nullptr;
  }
  bool has(std::string_view key) const { return find(key) != nullptr; }

  template <class T>
  const T* get(std::string_view key) const {
    const auto* p = find(key);
    return p ? &std::get<T>(p->value) : nullptr;
  }
  double real(std::string_view key, double fallback) const {
    const auto* p = find(key);
    if (!p) return fallback;
    if (const auto* i = std::get_if<std::int64_t>(&p->value)) return static_cast<double>(*i);
    return std::get<double>(p->value);
  }
  std::int64_t integer(std::string_view key, std::int64_t fallback) const {
    const auto* v = get<std::int64_t>(key);
    return v ? *v : fallback;
  }
  bool boolean(std::string_view key, bool fallback) const {
    const auto* v = get<bool>(key);
    return v ? *v : fallback;
  }
  void set(std::string key, Value v, ValueType type) {
    for (auto& p : items) {
      if (p.key == key) {
        p.value = std::move(v);
        p.type = type;
        return;
      }
    }
    items.push_back({std::move(key), std::move(v), type, 0});
  }
};

struct SystemSpec {
  std::string builtin;
  Params params;
  int line = 0;
};

struct SpaceSpec {
  int dimension = 0;
  NormKind norm = NormKind::euclidean;
  bool l1_truncation = false;
  double radius = 4.0;
};

struct FieldSpec {
  std::string label;
  std::vector<std::string> components;
  int line = 0;
};

struct LbSpec {
  int order = 2;
  int samples = 200;
  double safety = 1.25;
  std::uint64_t seed = 1;
  std::optional<double> declared_k;
  std::optional<double> region_radius;
  std::optional<std::vector<double>> region_center;
};

struct CommandSpec {
  std::string label;
  std::string op;
  Params params;
  int line = 0;
};

struct Scenario {
  std::uint64_t seed = 1;
  double tol = 1e-9;
  bool unsafe = false;
  std::optional<SystemSpec> system;
  std::optional<SpaceSpec> space;
  std::vector<FieldSpec> fields;
  LbSpec lb;
  std::vector<CommandSpec> commands;
};

inline const std::vector<std::string_view>& command_ops() {
  static const std::vector<std::string_view> ops{"flow",          "compose", "invert",       "slice",   "bracket-chain",
                                                 "certify-hprime", "orbit-sample", "verdict", "check-lb"};
  return ops;
}

inline const std::vector<KeySpec>& builtin_schema(std::string_view name) {
  static const std::map<std::string_view, std::vector<KeySpec>> table{
      {"heisenberg", {{"radius", ValueType::real}, {"with_x3", ValueType::boolean}}},
      {"grushin", {{"radius", ValueType::real}}},
      {"commuting-constants",
       {{"dim", ValueType::integer, true}, {"span", ValueType::integer, true}, {"radius", ValueType::real}}},
      {"affine-l1",
       {{"dim", ValueType::integer},
        {"count", ValueType::integer},
        {"linear", ValueType::real},
        {"scale", ValueType::real},
        {"t_diag", ValueType::reals},
        {"radius", ValueType::real}}},
      {"operator-family",
       {{"dim", ValueType::integer, true},
        {"cols", ValueType::integer, true},
        {"phi", ValueType::texts, true},
        {"a", ValueType::vectors, true},
        {"radius", ValueType::real}}},
  };
  const auto it = table.find(name);
  if (it == table.end()) throw Error(ErrorKind::UnknownBuiltin, "unknown builtin '" + std::string(name) + "'");
  return it->second;
}

inline const std::vector<KeySpec>& command_schema(std::string_view op) {
  using VT = ValueType;
  static const std::map<std::string_view, std::vector<KeySpec>> table{
      {"flow",
       {{"at", VT::point, true},
        {"control", VT::texts, true},
        {"variational", VT::boolean},
        {"tol", VT::real},
        {"unsafe", VT::boolean}}},
      {"compose",
       {{"at", VT::point, true},
        {"tau", VT::assigns, true},
        {"tail", VT::real},
        {"truncation", VT::integer},
        {"curve_samples", VT::integer},
        {"tol", VT::real},
        {"unsafe", VT::boolean}}},
      {"invert",
       {{"at", VT::point, true},
        {"tau", VT::assigns, true},
        {"tail", VT::real},
        {"truncation", VT::integer},
        {"tol", VT::real},
        {"unsafe", VT::boolean}}},
      {"slice",
       {{"at", VT::point, true},
        {"axes", VT::words, true},
        {"rho", VT::real, true},
        {"grid", VT::integer},
        {"tol", VT::real},
        {"unsafe", VT::boolean}}},
      {"bracket-chain", {{"at", VT::point, true}, {"k_max", VT::integer}}},
      {"certify-hprime",
       {{"grid", VT::integer}, {"tol", VT::real}, {"region_center", VT::reals}, {"region_radius", VT::real}}},
      {"orbit-sample",
       {{"at", VT::point, true},
        {"budget", VT::integer, true},
        {"max_word_len", VT::integer},
        {"min_word_len", VT::integer},
        {"seed", VT::integer},
        {"d_max", VT::real},
        {"tol", VT::real}}},
      {"verdict", {{"at", VT::point, true}, {"k_max", VT::integer}}},
      {"check-lb",
       {{"order", VT::integer}, {"samples", VT::integer}, {"region_center", VT::reals}, {"region_radius", VT::real}}},
  };
  const auto it = table.find(op);
  if (it == table.end()) throw Error(ErrorKind::ParseError, "unknown command op '" + std::string(op) + "'");
  return it->second;
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

inline std::vector<std::string> split_bar(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find('|', start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] inline void fail(int line, int col, const std::string& what) {
  throw Error(ErrorKind::ParseError, "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + what);
}

inline double number(const std::string& tok, int line, int col) {
  const auto v = parse_double(tok);
  if (!v) fail(line, col, "expected a number, got '" + tok + "'");
  return *v;
}

inline bool valid_label(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

inline std::vector<double> numbers(const std::string& text, int line, int col) {
  std::vector<double> out;
  for (const auto& t : split_ws(text)) out.push_back(number(t, line, col));
  return out;
}

inline Value convert(ValueType type, const std::string& text, int line, int col) {
  switch (type) {
    case ValueType::boolean:
      if (text == "true") return true;
      if (text == "false") return false;
      fail(line, col, "expected true or false, got '" + text + "'");
    case ValueType::integer: {
      std::int64_t v = 0;
      const auto* end = text.data() + text.size();
      const auto [p, ec] = std::from_chars(text.data(), end, v);
      if (ec != std::errc() || p != end) fail(line, col, "expected an integer, got '" + text + "'");
      return v;
    }
    case ValueType::real:
      return number(text, line, col);
    case ValueType::reals: {
      auto v = numbers(text, line, col);
      if (v.empty()) fail(line, col, "expected a list of numbers");
      return v;
    }
    case ValueType::word: {
      if (!valid_label(text)) fail(line, col, "expected a single name, got '" + text + "'");
      return text;
    }
    case ValueType::words: {
      auto v = split_ws(text);
      if (v.empty()) fail(line, col, "expected a list of names");
      for (const auto& w : v) {
        if (!valid_label(w)) fail(line, col, "bad name '" + w + "'");
      }
      return v;
    }
    case ValueType::texts: {
      auto v = split_bar(text);
      for (const auto& t : v) {
        if (t.empty()) fail(line, col, "empty entry in '|' list");
      }
      return v;
    }
    case ValueType::vectors: {
      std::vector<std::vector<double>> out;
      for (const auto& part : split_bar(text)) {
        auto v = numbers(part, line, col);
        if (v.empty()) fail(line, col, "empty vector in '|' list");
        out.push_back(std::move(v));
      }
      return out;
    }
    case ValueType::point: {
      if (!text.empty() && text[0] == '@') {
        if (!valid_label(std::string_view(text).substr(1))) fail(line, col, "bad reference '" + text + "'");
        return text;
      }
      auto v = numbers(text, line, col);
      if (v.empty()) fail(line, col, "expected a point or @label");
      return v;
    }
    case ValueType::assigns: {
      std::vector<Assign> out;
      for (const auto& tok : split_ws(text)) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos || eq == 0) fail(line, col, "expected label=value, got '" + tok + "'");
        out.push_back({tok.substr(0, eq), number(tok.substr(eq + 1), line, col)});
      }
      if (out.empty()) fail(line, col, "expected label=value entries");
      return out;
    }
  }
  fail(line, col, "unsupported value");
}

inline std::string join_numbers(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_double(v[i]);
  return s;
}

inline std::string render(const Param& p) {
  struct Visitor {
    bool bar;
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(double d) const { return format_double(d); }
    std::string operator()(const std::vector<double>& v) const { return join_numbers(v); }
    std::string operator()(const std::string& s) const { return s; }
    std::string operator()(const std::vector<std::string>& v) const {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? (bar ? " | " : " ") : "") + v[i];
      return s;
    }
    std::string operator()(const std::vector<std::vector<double>>& v) const {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " | " : "") + join_numbers(v[i]);
      return s;
    }
    std::string operator()(const std::vector<Assign>& v) const {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + v[i].label + "=" + format_double(v[i].value);
      return s;
    }
  };
  return std::visit(Visitor{p.type == ValueType::texts}, p.value);
}

struct RawEntry {
  std::string key;
  std::string value;
  int line;
  int col;
};

struct RawSection {
  std::string kind;
  std::string name;
  int line = 0;
  std::vector<RawEntry> entries;
};

inline std::vector<RawSection> lex(std::string_view text) {
  std::vector<RawSection> out{{"", "", 0, {}}};
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto hash = raw.find('#');
    if (hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const int indent = static_cast<int>(raw.find_first_not_of(" \t")) + 1;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, indent, "section header missing ']'");
      const auto parts = split_ws(std::string_view(line).substr(1, line.size() - 2));
      if (parts.empty() || parts.size() > 2) fail(line_no, indent + 1, "expected [kind] or [kind LABEL]");
      out.push_back({parts[0], parts.size() == 2 ? parts[1] : "", line_no, {}});
      continue;
    }
    const auto eq = raw.find('=');
    if (eq == std::string_view::npos) fail(line_no, indent, "expected key = value");
    const std::string key = trim(raw.substr(0, eq));
    if (key.empty() || key.find_first_of(" \t") != std::string::npos) fail(line_no, indent, "bad key");
    const std::string value = trim(raw.substr(eq + 1));
    const int vcol = static_cast<int>(eq) + 2;
    if (value.empty()) fail(line_no, vcol, "missing value for '" + key + "'");
    for (const auto& e : out.back().entries) {
      if (e.key == key) fail(line_no, indent, "duplicate key '" + key + "'");
    }
    out.back().entries.push_back({key, value, line_no, vcol});
  }
  return out;
}

inline Params typed(const RawSection& sec, const std::vector<KeySpec>& schema, std::set<std::string> skip = {}) {
  Params p;
  for (const auto& e : sec.entries) {
    if (skip.count(e.key)) continue;
    const auto it = std::find_if(schema.begin(), schema.end(), [&](const KeySpec& k) { return k.key == e.key; });
    if (it == schema.end()) fail(e.line, 1, "unknown key '" + e.key + "' in [" + sec.kind + "]");
  }
  for (const auto& spec : schema) {
    const auto it = std::find_if(sec.entries.begin(), sec.entries.end(), [&](const RawEntry& e) { return e.key == spec.key; });
    if (it == sec.entries.end()) {
      if (spec.required) fail(sec.line, 1, "[" + sec.kind + "] needs '" + std::string(spec.key) + "'");
      continue;
    }
    p.items.push_back({std::string(spec.key), convert(spec.type, it->value, it->line, it->col), spec.type, it->line});
  }
  return p;
}

inline const RawEntry* entry(const RawSection& sec, std::string_view key) {
  for (const auto& e : sec.entries) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

inline NormKind parse_norm(const RawEntry& e) {
  if (e.value == "sup") return NormKind::sup;
  if (e.value == "euclidean") return NormKind::euclidean;
  if (e.value == "l1") return NormKind::l1;
  fail(e.line, e.col, "norm must be sup, euclidean or l1");
}

}  // namespace detail

/// Builds the family a scenario describes.
inline FieldFamily build_family(const Scenario& sc) {
  if (sc.system) {
    const auto& p = sc.system->params;
    const auto& name = sc.system->builtin;
    if (name == "heisenberg") return catalog::heisenberg(p.real("radius", 4.0), p.boolean("with_x3", false));
    if (name == "grushin") return catalog::grushin(p.real("radius", 4.0));
    if (name == "commuting-constants")
      return catalog::commuting_constants(static_cast<int>(p.integer("dim", 3)), static_cast<int>(p.integer("span", 2)),
                                          p.real("radius", 4.0));
    if (name == "affine-l1") {
      catalog::AffineL1Spec spec;
      spec.dim = static_cast<int>(p.integer("dim", spec.dim));
      spec.count = static_cast<int>(p.integer("count", spec.dim));
      spec.linear = p.real("linear", spec.linear);
      spec.scale = p.real("scale", spec.scale);
      if (const auto* t = p.get<std::vector<double>>("t_diag")) spec.t_diag = *t;
      spec.radius = p.real("radius", spec.radius);
      return catalog::affine_l1(spec);
    }
    if (name == "operator-family") {
      catalog::OperatorFamilySpec spec;
      spec.dim = static_cast<int>(p.integer("dim", 2));
      spec.cols = static_cast<int>(p.integer("cols", 1));
      for (const auto& s : *p.get<std::vector<std::string>>("phi")) spec.phi.push_back(Polynomial::parse(s, spec.dim));
      for (const auto& v : *p.get<std::vector<std::vector<double>>>("a"))
        spec.a.push_back(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
      spec.radius = p.real("radius", spec.radius);
      return catalog::operator_family(spec);
    }
    throw Error(ErrorKind::UnknownBuiltin, "unknown builtin '" + name + "'");
  }
  if (!sc.space) throw Error(ErrorKind::ParseError, "scenario needs [system] or [space]");
  const ChartSpace space(sc.space->dimension, sc.space->norm, sc.space->l1_truncation);
  std::vector<std::pair<std::string, PolynomialField>> f;
  for (const auto& fs : sc.fields) {
    std::vector<Polynomial> comps;
    for (const auto& c : fs.components) comps.push_back(Polynomial::parse(c, space.dimension));
    f.emplace_back(fs.label, PolynomialField(std::move(comps)));
  }
  return catalog::from_polynomials(space, sc.space->radius, std::move(f));
}

namespace detail {

inline void validate(const Scenario& sc) {
  FieldFamily family;
  try {
    family = build_family(sc);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ParseError || e.kind() == ErrorKind::UnknownBuiltin ||
        e.kind() == ErrorKind::DimensionMismatch)
      throw;
    throw Error(ErrorKind::ParseError, std::string("invalid system: ") + e.what());
  }
  const int dim = family.space.dimension;
  std::set<std::string> labels;
  for (const auto& m : family.members) labels.insert(m.label());
  if (sc.lb.region_center && static_cast<int>(sc.lb.region_center->size()) != dim)
    throw Error(ErrorKind::DimensionMismatch, "[lb] region_center has the wrong dimension");

  std::set<std::string> seen;
  for (const auto& cmd : sc.commands) {
    const auto where = [&](int line) { return "line " + std::to_string(line ? line : cmd.line) + ": "; };
    if (labels.count(cmd.label) || !seen.insert(cmd.label).second)
      throw Error(ErrorKind::ParseError, where(cmd.line) + "duplicate label '" + cmd.label + "'");
    for (const auto& p : cmd.params.items) {
      if (const auto* ref = std::get_if<std::string>(&p.value); ref && p.key == "at") {
        const std::string target = ref->substr(1);
        const auto it = std::find_if(sc.commands.begin(), sc.commands.end(),
                                     [&](const CommandSpec& c) { return c.label == target; });
        if (!seen.count(target) || target == cmd.label)
          throw Error(ErrorKind::ParseError, where(p.line) + "reference '" + *ref + "' does not name an earlier command");
        static const std::set<std::string> producers{"flow", "compose", "invert"};
        if (!producers.count(it->op))
          throw Error(ErrorKind::ParseError, where(p.line) + "'" + *ref + "' has no endpoint");
      }
      if (const auto* v = std::get_if<std::vector<double>>(&p.value);
          v && (p.key == "at" || p.key == "region_center") && static_cast<int>(v->size()) != dim)
        throw Error(ErrorKind::DimensionMismatch, where(p.line) + "'" + p.key + "' has " + std::to_string(v->size()) +
                                                      " coordinates, chart has " + std::to_string(dim));
      if (const auto* a = std::get_if<std::vector<Assign>>(&p.value)) {
        std::set<std::string> used;
        for (const auto& e : *a) {
          if (!labels.count(e.label)) throw Error(ErrorKind::ParseError, where(p.line) + "unknown field '" + e.label + "'");
          if (!used.insert(e.label).second)
            throw Error(ErrorKind::ParseError, where(p.line) + "field '" + e.label + "' repeated");
        }
      }
      if (p.key == "axes") {
        for (const auto& w : std::get<std::vector<std::string>>(p.value)) {
          if (!labels.count(w)) throw Error(ErrorKind::ParseError, where(p.line) + "unknown field '" + w + "'");
        }
      }
      if (p.key == "control") {
        for (const auto& piece : std::get<std::vector<std::string>>(p.value)) {
          const auto toks = split_ws(piece);
          if (toks.size() < 3) throw Error(ErrorKind::ParseError, where(p.line) + "control piece needs 't0 t1 label=value'");
          for (std::size_t i = 2; i < toks.size(); ++i) {
            const auto eq = toks[i].find('=');
            if (eq == std::string::npos || !labels.count(toks[i].substr(0, eq)))
              throw Error(ErrorKind::ParseError, where(p.line) + "bad control entry '" + toks[i] + "'");
          }
        }
      }
    }
  }
}

}  // namespace detail

inline Scenario parse_scenario(std::string_view text) {
  using namespace detail;
  const auto sections = lex(text);
  Scenario sc;

  const auto& top = sections.front();
  const auto* fmt = entry(top, "format");
  if (!fmt) fail(1, 1, "missing 'format = " + std::string(kScenarioFormat) + "'");
  if (fmt->value != kScenarioFormat) fail(fmt->line, fmt->col, "unsupported format '" + fmt->value + "'");
  {
    const Params p = typed(top, {{"seed", ValueType::integer}, {"tol", ValueType::real}, {"unsafe", ValueType::boolean}},
                           {"format"});
    sc.seed = static_cast<std::uint64_t>(p.integer("seed", 1));
    sc.tol = p.real("tol", 1e-9);
    sc.unsafe = p.boolean("unsafe", false);
  }

  std::set<std::string> field_labels;
  bool have_lb = false;
  for (std::size_t i = 1; i < sections.size(); ++i) {
    const auto& sec = sections[i];
    if (sec.kind == "system") {
      if (sc.system) fail(sec.line, 1, "duplicate [system]");
      if (!sec.name.empty()) fail(sec.line, 1, "[system] takes no label");
      const auto* b = entry(sec, "builtin");
      if (!b) fail(sec.line, 1, "[system] needs 'builtin'");
      SystemSpec sys;
      sys.builtin = b->value;
      sys.line = sec.line;
      sys.params = typed(sec, builtin_schema(b->value), {"builtin"});
      sc.system = std::move(sys);
    } else if (sec.kind == "space") {
      if (sc.space) fail(sec.line, 1, "duplicate [space]");
      const Params p = typed(sec,
                             {{"dimension", ValueType::integer, true},
                              {"norm", ValueType::word},
                              {"l1_truncation", ValueType::boolean},
                              {"radius", ValueType::real}});
      SpaceSpec s;
      s.dimension = static_cast<int>(p.integer("dimension", 0));
      if (s.dimension < 1) fail(p.find("dimension")->line, 1, "dimension must be >= 1");
      s.l1_truncation = p.boolean("l1_truncation", false);
      s.norm = s.l1_truncation ? NormKind::l1 : NormKind::euclidean;
      if (const auto* n = entry(sec, "norm")) s.norm = parse_norm(*n);
      s.radius = p.real("radius", 4.0);
      if (!(s.radius > 0.0)) fail(p.find("radius")->line, 1, "radius must be positive");
      sc.space = s;
    } else if (sec.kind == "field") {
      if (!valid_label(sec.name)) fail(sec.line, 1, "[field] needs a label");
      if (!field_labels.insert(sec.name).second) fail(sec.line, 1, "duplicate label '" + sec.name + "'");
      const Params p = typed(sec, {{"components", ValueType::texts, true}});
      sc.fields.push_back({sec.name, *p.get<std::vector<std::string>>("components"), sec.line});
    } else if (sec.kind == "lb") {
      if (have_lb) fail(sec.line, 1, "duplicate [lb]");
      have_lb = true;
      const Params p = typed(sec,
                             {{"order", ValueType::integer},
                              {"samples", ValueType::integer},
                              {"safety", ValueType::real},
                              {"seed", ValueType::integer},
                              {"declared_k", ValueType::real},
                              {"region_center", ValueType::reals},
                              {"region_radius", ValueType::real}});
      sc.lb.order = static_cast<int>(p.integer("order", 2));
      sc.lb.samples = static_cast<int>(p.integer("samples", 200));
      sc.lb.safety = p.real("safety", 1.25);
      sc.lb.seed = static_cast<std::uint64_t>(p.integer("seed", 1));
      if (p.has("declared_k")) sc.lb.declared_k = p.real("declared_k", 0.0);
      if (p.has("region_radius")) sc.lb.region_radius = p.real("region_radius", 0.0);
      if (const auto* c = p.get<std::vector<double>>("region_center")) sc.lb.region_center = *c;
      if (sc.lb.order < 0 || sc.lb.samples < 1 || !(sc.lb.safety >= 1.0))
        fail(sec.line, 1, "[lb] needs order >= 0, samples >= 1, safety >= 1");
      if (sc.lb.declared_k && !(*sc.lb.declared_k > 0.0)) fail(sec.line, 1, "declared_k must be positive");
      if (sc.lb.region_radius && !(*sc.lb.region_radius > 0.0)) fail(sec.line, 1, "region_radius must be positive");
    } else if (sec.kind == "command") {
      if (!valid_label(sec.name)) fail(sec.line, 1, "[command] needs a label");
      const auto* op = entry(sec, "op");
      if (!op) fail(sec.line, 1, "[command " + sec.name + "] needs 'op'");
      if (std::find(command_ops().begin(), command_ops().end(), op->value) == command_ops().end())
        fail(op->line, op->col, "unknown op '" + op->value + "'");
      CommandSpec cmd;
      cmd.label = sec.name;
      cmd.op = op->value;
      cmd.line = sec.line;
      cmd.params = typed(sec, command_schema(op->value), {"op"});
      if (field_labels.count(cmd.label)) fail(sec.line, 1, "duplicate label '" + cmd.label + "'");
      sc.commands.push_back(std::move(cmd));
    } else {
      fail(sec.line, 1, "unknown section [" + sec.kind + "]");
    }
  }
  if (sc.system && (sc.space || !sc.fields.empty()))
    throw Error(ErrorKind::ParseError, "use either [system] or [space] with [field] sections, not both");
  if (!sc.system && !sc.space) throw Error(ErrorKind::ParseError, "scenario needs [system] or [space]");
  if (sc.space && sc.fields.empty()) throw Error(ErrorKind::ParseError, "[space] given without any [field]");
  for (const auto& f : sc.fields) {
    if (static_cast<int>(f.components.size()) != sc.space->dimension)
      throw Error(ErrorKind::DimensionMismatch, "line " + std::to_string(f.line) + ": field '" + f.label + "' has " +
                                                    std::to_string(f.components.size()) + " components, space has " +
                                                    std::to_string(sc.space->dimension));
  }
  // canonical polynomial text
  for (auto& f : sc.fields) {
    for (auto& c : f.components) {
      try {
        c = Polynomial::parse(c, sc.space->dimension).to_string();
      } catch (const Error& e) {
        throw Error(ErrorKind::ParseError, "line " + std::to_string(f.line) + ": field '" + f.label + "': " + e.what());
      }
    }
  }
  detail::validate(sc);
  return sc;
}

inline std::string emit_scenario(const Scenario& sc) {
  using detail::render;
  std::ostringstream out;
  out << "format = " << kScenarioFormat << "\n";
  out << "seed = " << sc.seed << "\n";
  out << "tol = " << format_double(sc.tol) << "\n";
  out << "unsafe = " << (sc.unsafe ? "true" : "false") << "\n";
  if (sc.system) {
    out << "\n[system]\nbuiltin = " << sc.system->builtin << "\n";
    for (const auto& p : sc.system->params.items) out << p.key << " = " << render(p) << "\n";
  }
  if (sc.space) {
    out << "\n[space]\ndimension = " << sc.space->dimension << "\n";
    out << "norm = " << to_string(sc.space->norm) << "\n";
    out << "l1_truncation = " << (sc.space->l1_truncation ? "true" : "false") << "\n";
    out << "radius = " << format_double(sc.space->radius) << "\n";
  }
  for (const auto& f : sc.fields) {
    out << "\n[field " << f.label << "]\ncomponents = ";
    for (std::size_t i = 0; i < f.components.size(); ++i) out << (i ? " | " : "") << f.components[i];
    out << "\n";
  }
  out << "\n[lb]\norder = " << sc.lb.order << "\nsamples = " << sc.lb.samples
      << "\nsafety = " << format_double(sc.lb.safety) << "\nseed = " << sc.lb.seed << "\n";
  if (sc.lb.declared_k) out << "declared_k = " << format_double(*sc.lb.declared_k) << "\n";
  if (sc.lb.region_center) out << "region_center = " << detail::join_numbers(*sc.lb.region_center) << "\n";
  if (sc.lb.region_radius) out << "region_radius = " << format_double(*sc.lb.region_radius) << "\n";
  for (const auto& c : sc.commands) {
    out << "\n[command " << c.label << "]\nop = " << c.op << "\n";
    for (const auto& p : c.params.items) out << p.key << " = " << render(p) << "\n";
  }
  return out.str();
}

}  // namespace orbitkit::cli
