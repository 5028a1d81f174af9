#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "huapadic/experiments.hpp"
#include "huapadic/laws.hpp"
#include "huapadic/padic_matrix.hpp"
#include "huapadic/samplers.hpp"
#include "json.hpp"

namespace huapadic::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitGateFailure = 1;
inline constexpr int kExitUsage = 2;

/// A configuration problem: reported on stderr with exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string subcommand;
  std::string name;
  long p = 2;
  std::string t;
  std::string s;
  std::optional<long> n;
  long digits = 24;
  long guard = 8;
  long count = 1;
  std::optional<std::uint64_t> seed;
  std::string eps = "1/1000000000000";
  std::string out;
  unsigned workers = 0;
  long draws = 0;
  std::string k;
  std::string lambda;
  std::optional<long> x;
  std::optional<long> x2;
  std::string a;
  std::string q;
  std::optional<long> len;
  std::optional<long> s_int;
  std::string file;
};

inline std::vector<long> parse_long_list(const std::string& text, const char* what) {
  std::vector<long> v;
  std::string s = text;
  for (char& c : s) {
    if (c == ',' || c == '(' || c == ')' || c == '[' || c == ']') c = ' ';
  }
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    long x = 0;
    try {
      x = std::stol(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw UsageError(std::string("malformed integer '") + tok + "' in " + what);
    v.push_back(x);
  }
  return v;
}

/// eps as an exact rational: "num/den", an integer, or "1e-9" style powers of ten.
inline Rational parse_eps(const std::string& text) {
  const auto e = text.find_first_of("eE");
  Rational v;
  if (e == std::string::npos) {
    v = parse_rational(text);
  } else {
    const Rational mantissa = parse_rational(text.substr(0, e));
    std::size_t used = 0;
    const std::string exp_text = text.substr(e + 1);
    long exp = 0;
    try {
      exp = std::stol(exp_text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != exp_text.size() || exp_text.empty()) throw UsageError("malformed eps '" + text + "'");
    v = mantissa * rpow(Rational(10), exp);
  }
  if (v <= 0) throw UsageError("eps must be positive");
  return v;
}

/// t from --t (exact fraction) or --s (integer); decimals are refused.
inline HuaParams resolve_params(const RunConfig& c) {
  if (!c.t.empty() && !c.s.empty()) throw UsageError("give either --t or --s, not both");
  Rational t = 1;
  if (!c.s.empty()) {
    std::size_t used = 0;
    long s = 0;
    try {
      s = std::stol(c.s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != c.s.size()) {
      throw UsageError("--s takes an integer; for other exponents pass t = p^(-s) as an exact fraction with --t");
    }
    t = ppow(c.p, -s);
  } else if (!c.t.empty()) {
    try {
      t = parse_rational(c.t);
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--t: ") + e.what());
    }
  }
  try {
    return HuaParams::make(c.p, t);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

inline PrecisionBudget resolve_budget(const RunConfig& c) {
  const PrecisionBudget b{c.digits, c.guard};
  try {
    b.validate();
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  return b;
}

inline Json exact_json(const Rational& v) { return {{"exact", to_fraction_string(v)}, {"decimal", to_decimal_string(v)}}; }

inline Json bracket_json(const CertifiedValue& v) {
  return {{"lower", to_fraction_string(v.lower)},
          {"upper", to_fraction_string(v.upper)},
          {"lower_decimal", to_decimal_rounded(v.lower, 15, false)},
          {"upper_decimal", to_decimal_rounded(v.upper, 15, true)},
          {"terms", v.terms}};
}

inline Json tuple_json(const SingularTuple& k) {
  Json a = Json::array();
  for (const long x : k.parts) a.push_back(x);
  for (std::size_t i = 0; i < k.markers; ++i) a.push_back("<=" + std::to_string(k.floor));
  return a;
}

inline Json matrix_json(const PadicMatrix& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.size(); ++j) row.push_back(m.entry(i, j).to_string());
    rows.push_back(row);
  }
  return rows;
}

template <class T>
T require(const std::optional<T>& v, const char* flag) {
  if (!v) throw UsageError(std::string("missing ") + flag);
  return *v;
}

inline SingularTuple tuple_arg(const RunConfig& c) {
  if (c.k.empty()) throw UsageError("missing --k (comma-separated singular numbers)");
  const auto k = parse_long_list(c.k, "--k");
  if (k.empty()) throw UsageError("--k is empty");
  if (c.n && *c.n != static_cast<long>(k.size())) throw UsageError("--N does not match the length of --k");
  return SingularTuple::exact(k);
}

inline Partition partition_arg(const std::string& text) {
  const auto parts = parse_long_list(text, "partition");
  for (const long x : parts) {
    if (x < 1) throw UsageError("partition parts must be positive");
  }
  return Partition::from_parts(parts);
}

inline const std::vector<std::string>& law_names() {
  static const std::vector<std::string> names = {
      "pochhammer", "pochhammer_inf", "kernel",      "kernel0",       "pi_s",       "pi_N",      "tilde_pi_N",
      "normalization", "mN",         "mN_profile",  "chain_rep1",    "chain_rep2", "nu",        "nu_chain",
      "vol",        "haar_orbit",    "gamma",       "hua_density",   "rr",         "rr_sum",    "rewrite",
      "tv_boundary"};
  return names;
}

inline Json cmd_law(const RunConfig& c) {
  Json out;
  out["schema"] = "huapadic.law/1";
  out["law"] = c.name;
  const std::string& law = c.name;
  if (law == "pochhammer" || law == "pochhammer_inf") {
    if (c.a.empty() || c.q.empty()) throw UsageError("pochhammer needs --a and --q");
    const Rational a = parse_rational(c.a), q = parse_rational(c.q);
    out["a"] = to_fraction_string(a);
    out["q"] = to_fraction_string(q);
    if (law == "pochhammer") {
      const long n = require(c.len, "--n");
      if (n < 0) throw UsageError("--n must be non-negative");
      out["n"] = n;
      out.update(exact_json(pochhammer(a, q, n)));
    } else {
      if (q <= 0 || q >= 1) throw UsageError("--q must lie in (0, 1)");
      out["eps"] = c.eps;
      try {
        out.update(bracket_json(pochhammer_inf(a, q, parse_eps(c.eps))));
      } catch (const std::domain_error& e) {
        throw UsageError(e.what());
      }
    }
    return out;
  }
  if (law == "vol" || law == "haar_orbit") {
    require_prime(c.p);
    const SingularTuple k = tuple_arg(c);
    out["p"] = c.p;
    out["k"] = tuple_json(k);
    out.update(exact_json(law == "vol" ? vol_singular_law(c.p, k) : haar_orbit_mass(c.p, k)));
    return out;
  }
  if (law == "gamma") {
    const SingularTuple k = tuple_arg(c);
    out["k"] = tuple_json(k);
    out["exponent"] = gamma_weight(k);
    return out;
  }
  if (law == "rewrite") {
    const SingularTuple k = tuple_arg(c);
    const auto r = rewrite_identity_check(k);
    out["k"] = tuple_json(k);
    out["item1"] = {{"lhs", r.item1_lhs}, {"upper_tails", r.item1_upper_tails}, {"complements", r.item1_complements},
                    {"holds", r.item1()}};
    out["item2"] = {{"lhs", r.item2_lhs}, {"rhs", r.item2_rhs}, {"holds", r.item2()}};
    out["item3"] = {{"lhs", r.item3_lhs}, {"from_zero", r.item3_from_zero}, {"from_one", r.item3_from_one},
                    {"holds", r.item3()}};
    return out;
  }
  if (law == "rr") {
    require_prime(c.p);
    const long s = require(c.s_int, "--s");
    const long x = require(c.x, "--x");
    if (s != 0 && s != 1) throw UsageError("rr is available for --s 0 and --s 1");
    if (x < 2) throw UsageError("rr needs --x >= 2");
    out["p"] = c.p;
    out["s"] = s;
    out["x"] = x;
    out["eps"] = c.eps;
    out.update(bracket_json(rr_cdf(c.p, static_cast<int>(s), x, parse_eps(c.eps))));
    return out;
  }

  const HuaParams hp = resolve_params(c);
  out["p"] = hp.p;
  out["t"] = to_fraction_string(hp.t);
  HuaLaws laws(hp);
  if (law == "kernel" || law == "kernel0") {
    const long x1 = require(c.x, "--x"), x2 = require(c.x2, "--x2");
    if (x1 < 0 || x2 < 0) throw UsageError("kernel states must be non-negative");
    out["x1"] = x1;
    out["x2"] = x2;
    out.update(exact_json(laws.kernel(x1, x2, law == "kernel")));
  } else if (law == "pi_s") {
    const long x = require(c.x, "--x");
    out["x"] = x;
    out["eps"] = c.eps;
    out.update(bracket_json(laws.pi_s(x, parse_eps(c.eps))));
  } else if (law == "pi_N" || law == "tilde_pi_N") {
    const long n = require(c.n, "--N"), x = require(c.x, "--x");
    out["N"] = n;
    out["x"] = x;
    out.update(exact_json(law == "pi_N" ? laws.pi_N(n, x) : laws.tilde_pi_N(n, x)));
  } else if (law == "normalization") {
    const long n = require(c.n, "--N");
    out["N"] = n;
    out.update(exact_json(laws.normalization(n)));
  } else if (law == "mN" || law == "mN_profile" || law == "chain_rep1" || law == "chain_rep2") {
    const SingularTuple k = tuple_arg(c);
    out["N"] = k.size();
    out["k"] = tuple_json(k);
    const LProfile prof = LProfile::from_tuple(k.parts);
    Rational v;
    if (law == "mN") v = laws.m_N_direct(k.parts);
    if (law == "mN_profile") v = laws.m_N_profile(prof);
    if (law == "chain_rep1") v = laws.chain_product_rep1(prof);
    if (law == "chain_rep2") v = laws.chain_product_rep2(prof);
    out.update(exact_json(v));
  } else if (law == "hua_density") {
    const SingularTuple k = tuple_arg(c);
    const HuaDensity d = hua_log_density(hp.p, k, hp.t);
    out["k"] = tuple_json(k);
    out["p_exponent"] = d.exponent;
    out["coefficient"] = to_fraction_string(d.coefficient);
    out.update(exact_json(d.value()));
  } else if (law == "nu" || law == "nu_chain") {
    const Partition lam = partition_arg(c.lambda.empty() ? c.k : c.lambda);
    out["partition"] = lam.label();
    out["eps"] = c.eps;
    const Rational eps = parse_eps(c.eps);
    out.update(bracket_json(law == "nu" ? laws.nu_s(lam, eps) : laws.nu_s_chain(lam, eps)));
  } else if (law == "rr_sum") {
    const long x = require(c.x, "--x");
    if (x < 1) throw UsageError("rr_sum needs --x >= 1");
    out["x"] = x;
    out["eps"] = c.eps;
    out.update(bracket_json(rr_partition_sum(hp, x, parse_eps(c.eps))));
  } else if (law == "tv_boundary") {
    const long n = require(c.n, "--N");
    out["N"] = n;
    out["eps"] = c.eps;
    out.update(bracket_json(tv_pi_boundary(hp, n, parse_eps(c.eps))));
  } else {
    throw UsageError("unknown law '" + law + "'");
  }
  return out;
}

inline const std::vector<std::string>& sample_kinds() {
  static const std::vector<std::string> kinds = {"nu", "singulars", "hua", "ergodic", "kernel", "haar_gl", "haar_zp"};
  return kinds;
}

/// One JSON record per draw; draw i uses the child stream split(i) of the seed.
inline void cmd_sample(const RunConfig& c, std::ostream& out) {
  if (!c.seed) throw UsageError("sampling requires --seed");
  if (c.count < 0) throw UsageError("--count must be non-negative");
  const std::string& kind = c.name;
  const PrecisionBudget budget = resolve_budget(c);
  const RngStream root(*c.seed);
  const bool needs_hua = kind == "nu" || kind == "singulars" || kind == "hua" || kind == "kernel";
  std::optional<HuaSampler> sampler;
  if (needs_hua) sampler.emplace(resolve_params(c));
  std::optional<Partition> ergodic_k;
  if (kind == "ergodic") ergodic_k = partition_arg(c.lambda.empty() ? c.k : c.lambda);
  if (kind == "singulars" || kind == "hua" || kind == "ergodic" || kind == "haar_gl") {
    if (require(c.n, "--N") < 1) throw UsageError("--N must be positive");
  }
  if (kind == "kernel" && require(c.x, "--x") < 0) throw UsageError("--x must be non-negative");
  if (kind != "nu" && kind != "singulars" && kind != "hua" && kind != "ergodic" && kind != "kernel" &&
      kind != "haar_gl" && kind != "haar_zp") {
    throw UsageError("unknown sample kind '" + kind + "'");
  }
  require_prime(c.p);
  for (long i = 0; i < c.count; ++i) {
    RngStream rng = root.split(static_cast<std::uint64_t>(i));
    Json rec;
    rec["schema"] = "huapadic.sample/1";
    rec["kind"] = kind;
    rec["seed"] = *c.seed;
    rec["index"] = i;
    try {
      if (kind == "nu") {
        const Partition lam = sampler->nu(rng);
        rec["k"] = lam.parts();
      } else if (kind == "singulars") {
        rec["k"] = tuple_json(sampler->hua_singulars(*c.n, rng));
      } else if (kind == "kernel") {
        rec["x"] = *c.x;
        rec["next"] = sampler->kernel_step(*c.x, true, rng);
      } else if (kind == "hua") {
        rec["matrix"] = matrix_json(sample_hua_matrix(*sampler, *c.n, budget, rng));
      } else if (kind == "ergodic") {
        rec["parameter"] = ergodic_k->label();
        rec["matrix"] = matrix_json(sample_ergodic_matrix(*ergodic_k, c.p, *c.n, budget, rng));
      } else if (kind == "haar_gl") {
        rec["matrix"] = matrix_json(sample_haar_gl(static_cast<std::size_t>(*c.n), c.p, budget, rng));
      } else {
        rec["value"] = sample_haar_zp(c.p, budget.digits, rng).to_string();
      }
    } catch (const PrecisionExhausted& e) {
      rec["error"] = e.what();
    }
    out << rec.dump() << '\n';
  }
}

inline Json cmd_sing(const RunConfig& c, std::istream& in) {
  std::string text;
  if (c.file.empty() || c.file == "-") {
    text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  } else {
    std::ifstream f(c.file);
    if (!f) throw UsageError("cannot read matrix file '" + c.file + "'");
    text.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
  }
  const PrecisionBudget budget = resolve_budget(c);
  PadicMatrix m = PadicMatrix::zero(2, 1, budget);
  try {
    m = parse_matrix_text(text, c.p, budget);
  } catch (const std::exception& e) {
    throw UsageError(std::string("matrix file: ") + e.what());
  }
  const SingularTuple k = singular_numbers(m);
  Json out;
  out["schema"] = "huapadic.sing/1";
  out["p"] = c.p;
  out["N"] = m.size();
  out["E"] = budget.digits;
  out["guard"] = budget.guard;
  out["shift"] = m.shift();
  out["floor"] = m.singular_floor();
  out["k"] = tuple_json(k);
  out["label"] = k.label();
  out["complete"] = k.complete();
  return out;
}

inline int cmd_verify(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const std::string& suite = c.name;
  if (suite != "all" && std::find(suite_names().begin(), suite_names().end(), suite) == suite_names().end()) {
    throw UsageError("unknown suite '" + suite + "'");
  }
  VerifyOptions opt;
  opt.seed = c.seed.value_or(42);
  opt.workers = c.workers > 0 ? c.workers : default_workers();
  opt.draws = c.draws;
  const std::filesystem::path dir = c.out.empty() ? std::filesystem::path("reports") : std::filesystem::path(c.out);
  std::filesystem::create_directories(dir);
  const auto reports = run_suite(suite, opt);
  Json summary;
  summary["schema"] = "huapadic.verify/1";
  summary["suite"] = suite;
  summary["seed"] = opt.seed;
  summary["draws_override"] = opt.draws;
  Json list = Json::array();
  bool all_pass = true;
  for (const auto& r : reports) {
    std::ofstream(dir / (r.name + ".json")) << r.to_json().dump(2) << '\n';
    std::ofstream(dir / (r.name + ".csv")) << r.to_csv();
    list.push_back({{"name", r.name}, {"pass", r.pass()}, {"report", r.name + ".json"}, {"table", r.name + ".csv"}});
    all_pass = all_pass && r.pass();
    err << r.name << ": " << (r.pass() ? "pass" : "FAIL") << " (" << r.runtime_seconds << " s)\n";
  }
  summary["experiments"] = list;
  summary["pass"] = all_pass;
  std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';
  out << summary.dump(2) << '\n';
  return all_pass ? kExitPass : kExitGateFailure;
}

/// Entry point shared by the executable and the tests.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err, std::istream& in) {
  CLI::App app{"Exact laws, samplers and verification experiments for p-adic Hua measures"};
  app.require_subcommand(1);
  RunConfig c;

  auto add_hua = [&](CLI::App* sub) {
    sub->add_option("--p", c.p, "prime p");
    sub->add_option("--t", c.t, "t = p^(-s) as an exact fraction, e.g. 1/2");
    sub->add_option("--s", c.s, "integer s (sets t = p^(-s))");
  };

  auto* law = app.add_subcommand("law", "evaluate an exact law or a certified bracket");
  law->add_option("name", c.name, "law name")->required();
  add_hua(law);
  law->add_option("--N", c.n, "matrix size");
  law->add_option("--k", c.k, "singular numbers, comma-separated");
  law->add_option("--lambda", c.lambda, "partition parts, comma-separated");
  law->add_option("--x", c.x, "state / argument");
  law->add_option("--x2", c.x2, "second kernel state");
  law->add_option("--a", c.a, "Pochhammer a (fraction)");
  law->add_option("--q", c.q, "Pochhammer q (fraction)");
  law->add_option("--n", c.len, "Pochhammer length");
  law->add_option("--eps", c.eps, "bracket width, e.g. 1e-9 or 1/1000");

  auto* sample = app.add_subcommand("sample", "draw samples as JSON lines");
  sample->add_option("kind", c.name, "nu | singulars | hua | ergodic | kernel | haar_gl | haar_zp")->required();
  add_hua(sample);
  sample->add_option("--N", c.n, "matrix size");
  sample->add_option("--E", c.digits, "precision digits");
  sample->add_option("--guard", c.guard, "guard digits");
  sample->add_option("--count", c.count, "number of draws");
  sample->add_option("--seed", c.seed, "root seed (required)");
  sample->add_option("--k", c.k, "ergodic parameter (partition parts)");
  sample->add_option("--x", c.x, "kernel start state");

  auto* sing = app.add_subcommand("sing", "singular numbers of a matrix file");
  sing->add_option("file", c.file, "matrix file, '-' for stdin");
  sing->add_option("--p", c.p, "prime p");
  sing->add_option("--E", c.digits, "precision digits");
  sing->add_option("--guard", c.guard, "guard digits");

  auto* verify = app.add_subcommand("verify", "run verification suites and write reports");
  verify->add_option("suite", c.name, "oracle | identities | chains | corners | ergodic | nulimit | all")->required();
  verify->add_option("--seed", c.seed, "root seed (default 42)");
  verify->add_option("--workers", c.workers, "worker threads (default: HUAPADIC_WORKERS or all cores)");
  verify->add_option("--draws", c.draws, "override every Monte Carlo draw count");
  verify->add_option("--out", c.out, "report directory (default: reports)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (law->parsed()) {
      // --s for the rr law is the integer s, not a parameter for t.
      if (c.name == "rr") {
        if (c.s.empty()) throw UsageError("rr needs --s 0 or --s 1");
        c.s_int = parse_long_list(c.s, "--s").at(0);
        c.s.clear();
      }
      out << cmd_law(c).dump() << '\n';
      return kExitPass;
    }
    if (sample->parsed()) {
      cmd_sample(c, out);
      return kExitPass;
    }
    if (sing->parsed()) {
      out << cmd_sing(c, in).dump() << '\n';
      return kExitPass;
    }
    return cmd_verify(c, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << '\n';
  }
  return kExitUsage;
}

}  // namespace huapadic::cli
