#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "orbitkit/algebra.hpp"
#include "orbitkit/cli/report.hpp"
#include "orbitkit/cli/scenario.hpp"
#include "orbitkit/compose.hpp"
#include "orbitkit/flow.hpp"
#include "orbitkit/orbit.hpp"

namespace orbitkit::cli {

enum ExitCode : int { kExitOk = 0, kExitCommandError = 1, kExitParseError = 2 };

struct RunOptions {
  std::filesystem::path out_dir = "orbitkit-out";
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  bool unsafe = false;
  /// Fixed timestamp for reproducible files; empty means the current time.
  std::string timestamp;
};

struct RunResult {
  Report report;
  std::vector<std::string> files;
  int failed = 0;
  int exit_code = kExitOk;
};

namespace detail {

inline std::string matrix_text(const Matrix& m) {
  std::string s;
  for (Eigen::Index i = 0; i < m.rows(); ++i) s += (i ? " | " : "") + format_vector(m.row(i).transpose());
  return s;
}

inline std::string ints_text(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
  return s;
}

inline std::string word_text(const FieldFamily& family, const Word& w) {
  std::string s;
  for (const auto& l : w) s += (s.empty() ? "" : " ") + family.members.at(l.index).label() + "=" + format_double(l.duration);
  return s.empty() ? "-" : s;
}

inline void put_guard(ReportSection& sec, const std::optional<ExistenceCertificate>& cert) {
  if (!cert) {
    sec.put("guard", "unavailable");
    return;
  }
  sec.put("guard.r", cert->r);
  sec.put("guard.k", cert->k);
  sec.put("guard.c", cert->c);
  sec.put("guard.T0", cert->T0);
  sec.put("guard.T_prime", cert->T_prime);
  sec.put("guard.margin", cert->margin);
  sec.put("guard.satisfied", cert->satisfied);
}

/// Guard at a point for commands that only evaluate there (no flow time).
inline std::optional<ExistenceCertificate> pointwise_guard(const FieldFamily& family, const LbRecord& lb,
                                                           const Vector& x) {
  try {
    return check_existence(family, lb, Control(), x, 0.0);
  } catch (const Error&) {
    return std::nullopt;
  }
}

class Runner {
 public:
  Runner(const Scenario& sc, const RunOptions& opts) : sc_(sc), opts_(opts) {
    if (opts.seed) sc_.seed = *opts.seed;
    if (opts.tol) sc_.tol = *opts.tol;
    if (opts.unsafe) sc_.unsafe = true;
  }

  RunResult run() {
    RunResult res;
    auto& rep = res.report;
    rep.timestamp = opts_.timestamp.empty() ? utc_timestamp() : opts_.timestamp;
    rep.header.put("seed", sc_.seed);
    rep.header.put("tol", sc_.tol);
    rep.header.put("unsafe", sc_.unsafe);

    std::filesystem::create_directories(opts_.out_dir);
    auto& sys = rep.add("system");
    std::optional<LbRecord> lb;
    try {
      family_ = build_family(sc_);
      sys.put("source", sc_.system ? "builtin " + sc_.system->builtin : std::string("polynomial fields"));
      sys.put("dimension", family_.space.dimension);
      sys.put("norm", std::string(to_string(family_.space.norm_kind)));
      sys.put("l1_truncation", family_.space.truncation_of_l1);
      std::string labels;
      for (const auto& m : family_.members) labels += (labels.empty() ? "" : " ") + m.label();
      sys.put("fields", labels);
      sys.put("domain.center", family_.common_domain.center);
      sys.put("domain.radius", family_.common_domain.radius);
      lb = scenario_lb();
    } catch (const Error& e) {
      sys.put("status", "error");
      sys.put("error", std::string(e.what()));
      res.failed = static_cast<int>(sc_.commands.size()) + 1;
      res.exit_code = kExitCommandError;
      write_report(res);
      return res;
    }
    lb_ = *lb;
    auto& lbs = rep.add("lb");
    lbs.put("method", std::string(to_string(lb_.method)));
    lbs.put("order", lb_.order_s);
    lbs.put("k", lb_.bound_k);
    if (lb_.method == LbMethod::sampled) {
      lbs.put("safety", sc_.lb.safety);
      lbs.put("samples", sc_.lb.samples);
      lbs.put("seed", sc_.lb.seed);
    }
    lbs.put("region.center", lb_.region.center);
    lbs.put("region.radius", lb_.region.radius);
    lbs.put("norm", std::string(to_string(lb_.region.norm_kind)));

    for (const auto& cmd : sc_.commands) {
      auto& sec = rep.add("command", cmd.label);
      sec.put("op", cmd.op);
      try {
        dispatch(cmd, sec, res);
        sec.put("status", "ok");
      } catch (const Error& e) {
        sec.put("status", "error");
        sec.put("error", std::string(e.what()));
        ++res.failed;
      } catch (const std::exception& e) {
        sec.put("status", "error");
        sec.put("error", std::string("Internal: ") + e.what());
        ++res.failed;
      }
    }
    rep.header.put("commands", sc_.commands.size());
    rep.header.put("failed", res.failed);
    res.exit_code = res.failed ? kExitCommandError : kExitOk;
    write_report(res);
    return res;
  }

 private:
  Scenario sc_;
  RunOptions opts_;
  FieldFamily family_;
  LbRecord lb_;
  std::map<std::string, Vector> endpoints_;

  LbRecord scenario_lb() {
    Ball region = family_.common_domain;
    if (sc_.lb.region_center || sc_.lb.region_radius) {
      Vector c = region.center;
      if (sc_.lb.region_center)
        c = Eigen::Map<const Vector>(sc_.lb.region_center->data(), static_cast<Eigen::Index>(sc_.lb.region_center->size()));
      region = Ball(c, sc_.lb.region_radius.value_or(region.radius), region.norm_kind);
    }
    if (sc_.lb.declared_k) family_.declared_lb = LbRecord{sc_.lb.order, *sc_.lb.declared_k, region, LbMethod::declared};
    LbSampling cfg;
    cfg.seed = sc_.lb.seed;
    cfg.safety = sc_.lb.safety;
    return estimate_lb_bound(family_, region, sc_.lb.order, sc_.lb.samples, cfg);
  }

  void write_report(RunResult& res) {
    const auto path = opts_.out_dir / "report.txt";
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::InvalidArgument, "cannot write '" + path.string() + "'");
    f << res.report.emit();
    res.files.insert(res.files.begin(), path.string());
  }

  std::string write_csv(const CsvWriter& csv, const std::string& name, RunResult& res) {
    const auto path = opts_.out_dir / name;
    csv.write(path.string());
    res.files.push_back(path.string());
    return name;
  }

  Vector point(const Params& p) const {
    const auto* at = p.find("at");
    if (const auto* ref = std::get_if<std::string>(&at->value)) {
      const auto it = endpoints_.find(ref->substr(1));
      if (it == endpoints_.end())
        throw Error(ErrorKind::InvalidArgument, "'" + *ref + "' produced no endpoint (did it fail?)");
      return it->second;
    }
    const auto& v = std::get<std::vector<double>>(at->value);
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

  std::size_t member(const std::string& label) const {
    const auto idx = family_.index_of(label);
    if (!idx) throw Error(ErrorKind::InvalidArgument, "unknown field '" + label + "'");
    return *idx;
  }

  L1Coefficients tau_of(const Params& p) const {
    std::vector<L1Coefficients::Entry> e;
    for (const auto& a : *p.get<std::vector<Assign>>("tau")) {
      if (a.value != 0.0) e.push_back({member(a.label), a.value});
    }
    return L1Coefficients(std::move(e), p.real("tail", 0.0));
  }

  ComposeOptions compose_options(const Params& p) const {
    ComposeOptions o;
    o.tol = p.real("tol", sc_.tol);
    o.unsafe = p.boolean("unsafe", false) || sc_.unsafe;
    if (p.has("truncation")) {
      const auto n = p.integer("truncation", 0);
      if (n < 0) throw Error(ErrorKind::InvalidArgument, "truncation must be >= 0");
      o.truncation = static_cast<std::size_t>(n);
    }
    return o;
  }

  void dispatch(const CommandSpec& cmd, ReportSection& sec, RunResult& res) {
    const auto& p = cmd.params;
    const auto n = family_.space.dimension;
    if (cmd.op == "flow") {
      std::vector<Control::Piece> pieces;
      double t0 = HUGE_VAL, t1 = -HUGE_VAL;
      for (const auto& text : *p.get<std::vector<std::string>>("control")) {
        const auto toks = detail::split_ws(text);
        Control::Piece piece{*parse_double(toks[0]), *parse_double(toks[1]), {}};
        std::vector<L1Coefficients::Entry> e;
        for (std::size_t i = 2; i < toks.size(); ++i) {
          const auto eq = toks[i].find('=');
          const auto v = parse_double(toks[i].substr(eq + 1));
          if (!v) throw Error(ErrorKind::InvalidArgument, "bad control value '" + toks[i] + "'");
          e.push_back({member(toks[i].substr(0, eq)), *v});
        }
        std::sort(e.begin(), e.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
        piece.coeff = L1Coefficients(std::move(e));
        t0 = std::min(t0, piece.t_begin);
        t1 = std::max(t1, piece.t_end);
        pieces.push_back(std::move(piece));
      }
      const Control u(t0, t1, std::move(pieces));
      FlowOptions fo;
      fo.tol = p.real("tol", sc_.tol);
      fo.unsafe = p.boolean("unsafe", false) || sc_.unsafe;
      fo.with_variational = p.boolean("variational", false);
      const Vector x0 = point(p);
      sec.put("tol", fo.tol);
      sec.put("at", x0);
      sec.put("interval", format_double(t0) + " " + format_double(t1));
      sec.put("control.norm_inf", u.norm_inf());
      sec.put("control.norm_1", u.norm_1());
      const auto fr = flow_control(family_, lb_, u, x0, t0, t1, fo);
      put_guard(sec, fr.certificate);
      sec.put("unsafe_override", fr.unsafe_override);
      sec.put("endpoint", fr.endpoint);
      sec.put("steps_taken", fr.steps_taken);
      sec.put("steps_rejected", fr.steps_rejected);
      sec.put("est_local_error", fr.est_local_error);
      if (fo.with_variational) sec.put("variational", matrix_text(fr.endpoint_variational));
      CsvWriter csv(coordinate_header(n, {"t"}));
      for (std::size_t i = 0; i < fr.points.size(); ++i) csv.row(as_row(fr.points[i], {fr.times[i]}));
      sec.put("trajectory", write_csv(csv, cmd.label + ".csv", res));
      endpoints_[cmd.label] = fr.endpoint;
    } else if (cmd.op == "compose" || cmd.op == "invert") {
      const auto tau = tau_of(p);
      const auto co = compose_options(p);
      const Vector x = point(p);
      sec.put("tol", co.tol);
      sec.put("at", x);
      sec.put("tau.norm1", tau.norm1());
      sec.put("tau.tail_bound", tau.tail_bound());
      const auto cr = cmd.op == "compose" ? compose_flows(family_, lb_, tau, x, co) : compose_inverse(family_, lb_, tau, x, co);
      put_guard(sec, cr.certificate);
      sec.put("unsafe_override", cr.unsafe_override);
      sec.put("endpoint", cr.endpoint);
      sec.put("truncation_n", cr.truncation_n);
      sec.put("tail_mass", cr.tail_mass);
      sec.put("bound_constant", "k*exp(k*|tau|_1)");
      sec.put("bound_factor", cr.bound_factor);
      sec.put("tail_error_bound", cr.tail_error_bound);
      sec.put("word", word_text(family_, cr.word));
      sec.put("steps_taken", cr.steps_taken);
      const auto samples = p.integer("curve_samples", 0);
      if (samples > 0) {
        const auto curve = extract_l1_curve(family_, lb_, cr, static_cast<int>(samples), co.tol);
        CsvWriter csv(coordinate_header(n, {"s"}));
        for (std::size_t i = 0; i < curve.points.size(); ++i) csv.row(as_row(curve.points[i], {curve.s[i]}));
        sec.put("curve", write_csv(csv, cmd.label + ".csv", res));
        sec.put("curve.max_knot_gap", curve.max_knot_gap);
      }
      endpoints_[cmd.label] = cr.endpoint;
    } else if (cmd.op == "slice") {
      std::vector<std::size_t> axes;
      for (const auto& l : *p.get<std::vector<std::string>>("axes")) axes.push_back(member(l));
      ComposeOptions co = compose_options(p);
      const Vector x = point(p);
      const double rho = p.real("rho", 0.0);
      const int grid = static_cast<int>(p.integer("grid", 5));
      sec.put("tol", co.tol);
      sec.put("at", x);
      sec.put("rho", rho);
      sec.put("grid", grid);
      put_guard(sec, pointwise_guard(family_, lb_, x));
      const auto sr = slice(family_, lb_, x, rho, grid, axes, co);
      sec.put("guard.r_over_k", sr.guard_radius);
      sec.put("jacobian_rank_at_zero", sr.jacobian_rank_at_zero);
      sec.put("points", sr.points.size());
      sec.put("skipped", sr.skipped);
      std::vector<std::string> header;
      for (auto a : axes) header.push_back("w_" + family_.members[a].label());
      CsvWriter csv(coordinate_header(n, header));
      for (std::size_t i = 0; i < sr.points.size(); ++i) {
        std::vector<double> row(sr.params[i].data(), sr.params[i].data() + sr.params[i].size());
        csv.row(as_row(sr.points[i], row));
      }
      sec.put("cloud", write_csv(csv, cmd.label + ".csv", res));
    } else if (cmd.op == "bracket-chain" || cmd.op == "verdict") {
      const Vector x = point(p);
      const int k_max = static_cast<int>(p.integer("k_max", 3));
      sec.put("at", x);
      sec.put("k_max", k_max);
      sec.put("rank_tolerance", kRankTolerance);
      put_guard(sec, pointwise_guard(family_, lb_, x));
      if (cmd.op == "bracket-chain") {
        const auto chain = bracket_chain(family_, x, k_max);
        sec.put("rank_profile", ints_text(chain.rank_profile));
        sec.put("saturated_at", chain.saturated_at);
        sec.put("vectors", static_cast<std::size_t>(chain.generations.back().vectors.cols()));
      } else {
        const auto v = accessibility_verdict(family_, x, k_max);
        sec.put("kind", std::string(to_string(v.kind)));
        sec.put("k", v.k);
        sec.put("dimension", v.dimension);
        sec.put("rank_profile", ints_text(v.rank_profile));
        sec.put("limiting_rank", v.limiting_rank);
        if (!v.truncation_levels.empty()) {
          std::vector<int> levels(v.truncation_levels.begin(), v.truncation_levels.end());
          sec.put("truncation_levels", ints_text(levels));
          sec.put("truncation_ranks", ints_text(v.truncation_ranks));
        }
      }
    } else if (cmd.op == "certify-hprime" || cmd.op == "check-lb") {
      Ball region = lb_.region;
      if (const auto c = p.get<std::vector<double>>("region_center"))
        region.center = Eigen::Map<const Vector>(c->data(), static_cast<Eigen::Index>(c->size()));
      region.radius = p.real("region_radius", region.radius);
      sec.put("region.center", region.center);
      sec.put("region.radius", region.radius);
      put_guard(sec, pointwise_guard(family_, lb_, region.center));
      if (cmd.op == "certify-hprime") {
        const int grid = static_cast<int>(p.integer("grid", 3));
        const double tol = p.real("tol", 1e-8);
        sec.put("grid", grid);
        sec.put("tol", tol);
        sec.put("semantics", "sampled certification");
        const auto rep = certify_h_prime(family_, region, grid, tol);
        sec.put("certified", rep.certified);
        sec.put("bound_C", rep.bound_C);
        sec.put("max_residual", rep.max_residual);
        sec.put("grid_points", rep.grid.size());
        sec.put("rank_deficient_points",
                static_cast<std::size_t>(std::count(rep.rank_deficient.begin(), rep.rank_deficient.end(), true)));
        std::vector<std::string> header = coordinate_header(n);
        header.insert(header.end(), {"pair", "residual"});
        for (const auto& m : family_.members) header.push_back("C_" + m.label());
        CsvWriter csv(header);
        for (std::size_t i = 0; i < rep.grid.size(); ++i) {
          for (std::size_t q = 0; q < rep.pairs.size(); ++q) {
            std::vector<double> row = as_row(rep.grid[i]);
            std::vector<std::string> extra{"[" + family_.members[rep.pairs[q].lambda].label() + ";" +
                                           family_.members[rep.pairs[q].mu].label() + "]",
                                           format_double17(rep.residuals[i][q])};
            for (Eigen::Index c = 0; c < rep.coefficients[i][q].size(); ++c)
              extra.push_back(format_double17(rep.coefficients[i][q](c)));
            csv.row(row, extra);
          }
        }
        sec.put("coefficients", write_csv(csv, cmd.label + ".csv", res));
      } else {
        const int order = static_cast<int>(p.integer("order", lb_.order_s));
        const int samples = static_cast<int>(p.integer("samples", sc_.lb.samples));
        LbSampling cfg;
        cfg.seed = sc_.lb.seed;
        cfg.safety = sc_.lb.safety;
        const auto rec = estimate_lb_bound(family_, region, order, samples, cfg);
        sec.put("method", std::string(to_string(rec.method)));
        sec.put("order", rec.order_s);
        sec.put("k", rec.bound_k);
        sec.put("samples", samples);
        sec.put("safety", sc_.lb.safety);
        sec.put("seed", sc_.lb.seed);
      }
    } else if (cmd.op == "orbit-sample") {
      const Vector x = point(p);
      const auto budget = p.integer("budget", 1);
      if (budget < 1) throw Error(ErrorKind::InvalidArgument, "budget must be >= 1");
      const int len = static_cast<int>(p.integer("max_word_len", 4));
      const auto seed = static_cast<std::uint64_t>(p.integer("seed", static_cast<std::int64_t>(sc_.seed)));
      OrbitOptions oo;
      oo.tol = p.real("tol", sc_.tol);
      if (p.has("d_max")) oo.d_max = p.real("d_max", 0.0);
      oo.min_word_len = static_cast<int>(p.integer("min_word_len", 1));
      sec.put("at", x);
      sec.put("tol", oo.tol);
      sec.put("budget", budget);
      sec.put("max_word_len", len);
      sec.put("min_word_len", oo.min_word_len);
      sec.put("seed", seed);
      put_guard(sec, pointwise_guard(family_, lb_, x));
      const auto os = orbit_sample(family_, lb_, x, static_cast<std::size_t>(budget), len, seed, oo);
      sec.put("d_max", os.d_max);
      sec.put("budget_used", os.budget_used);
      std::size_t truncated = 0;
      std::vector<std::string> header = coordinate_header(n);
      header.insert(header.end(), {"truncated", "word"});
      CsvWriter csv(header);
      for (const auto& pt : os.cloud) {
        truncated += pt.truncated;
        csv.row(as_row(pt.point), {pt.truncated ? "1" : "0", word_text(family_, pt.word)});
      }
      sec.put("truncated_words", truncated);
      sec.put("cloud", write_csv(csv, cmd.label + ".csv", res));
    } else {
      throw Error(ErrorKind::InvalidArgument, "unsupported op '" + cmd.op + "'");
    }
  }
};

}  // namespace detail

inline RunResult run_scenario(const Scenario& sc, const RunOptions& opts = {}) {
  return detail::Runner(sc, opts).run();
}

inline std::string catalog_text() {
  std::string out;
  for (const auto& b : catalog::builtins()) out += b.name + "\t" + b.description + "\n";
  return out;
}

}  // namespace orbitkit::cli
