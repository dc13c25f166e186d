#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gw/cli.hpp"
#include "gw/errors.hpp"
#include "gw/second_order.hpp"
#include "gw/type_method.hpp"

namespace gw::cli {

namespace {

std::string num(double v, int prec = 9) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

std::string fixed(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

struct SolverFlags {
  double tol = 1e-10;
  int max_iter = 5000;
  int restarts = 16;
  std::uint64_t seed = 20240917;
  long w_size = 0;

  void add(CLI::App* app, bool with_seed = true) {
    app->add_option("--tol", tol, "alternation tolerance")->check(CLI::PositiveNumber);
    app->add_option("--max-iter", max_iter, "alternation iteration cap")->check(CLI::PositiveNumber);
    app->add_option("--restarts", restarts, "random restarts at the optimum")->check(CLI::NonNegativeNumber);
    if (with_seed) app->add_option("--seed", seed, "solver seed");
    app->add_option("--w-size", w_size, "auxiliary alphabet size (default |X||Y|+2)");
  }
  SolverConfig config() const {
    SolverConfig c;
    c.tol = tol;
    c.max_iter = max_iter;
    c.restarts = restarts;
    c.seed = seed;
    if (w_size > 0) c.w_size_override = static_cast<Index>(w_size);
    c.validate();
    return c;
  }
  void echo(Manifest& m) const {
    m.config.emplace_back("tol", num(tol));
    m.config.emplace_back("max_iter", std::to_string(max_iter));
    m.config.emplace_back("restarts", std::to_string(restarts));
    if (w_size > 0) m.config.emplace_back("w_size", std::to_string(w_size));
  }
};

std::optional<std::string> stamp(bool on) {
  if (!on) return std::nullopt;
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return std::string(buf);
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write " + path);
  f << body;
}

int workers_from_env(int flag) {
  if (flag > 0) return flag;
  if (const char* e = std::getenv("GW_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(e, &end, 10);
    if (end == e || *end != '\0' || v < 1 || v > 256) throw ValidationError("GW_WORKERS must be an integer in [1, 256]");
    return static_cast<int>(v);
  }
  return 1;
}

std::array<double, 3> parse_triple(const std::string& s) {
  std::array<double, 3> a{};
  std::stringstream ss(s);
  std::string part;
  int k = 0;
  while (std::getline(ss, part, ',')) {
    if (k == 3) throw ValidationError("expected three comma-separated numbers: " + s);
    try {
      std::size_t used = 0;
      a[k] = std::stod(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw ValidationError("not a number: " + part);
    }
    ++k;
  }
  if (k != 3) throw ValidationError("expected three comma-separated numbers: " + s);
  return a;
}

// ---- rate

struct RateArgs {
  std::string input;
  double r1 = 0, r2 = 0;
  bool json = false;
  bool stamp = false;
  SolverFlags solver;
};

int cmd_rate(const RateArgs& a, std::ostream& out) {
  const InputDoc doc = load_input(a.input);
  if (a.r1 < 0 || a.r2 < 0) throw ValidationError("rate: r1 and r2 must be >= 0");
  const RateResult r = rate_function(doc.dist, a.r1, a.r2, a.solver.config());
  if (a.json) {
    nlohmann::json j = nlohmann::json::parse(input_json(doc));
    j["command"] = "rate";
    j["r1"] = a.r1;
    j["r2"] = a.r2;
    j["R"] = r.value;
    j["rates"] = {{"r0", r.solution.rates.r0}, {"r1", r.solution.rates.r1}, {"r2", r.solution.rates.r2}};
    j["lambda"] = {r.lambdas.lambda1, r.lambdas.lambda2};
    j["certified"] = r.certified;
    j["primal_gap"] = r.primal_gap;
    j["seed"] = a.solver.seed;
    j["input_digest"] = doc.digest;
    out << j.dump(2) << '\n';
    return 0;
  }
  Manifest m{"rate", doc.digest, a.solver.seed, {}, stamp(a.stamp)};
  m.config.emplace_back("r1", num(a.r1));
  m.config.emplace_back("r2", num(a.r2));
  a.solver.echo(m);
  out << manifest_header(m);
  out << "R = " << fixed(r.value) << '\n';
  out << "rate triple (I, H(X|W), H(Y|W)) = (" << fixed(r.solution.rates.r0) << ", " << fixed(r.solution.rates.r1)
      << ", " << fixed(r.solution.rates.r2) << ")\n";
  out << "lambda* = (" << fixed(r.lambdas.lambda1) << ", " << fixed(r.lambdas.lambda2) << ")\n";
  out << "certified = " << (r.certified ? "yes" : "no") << '\n';
  return 0;
}

// ---- second-order

struct SecondArgs {
  std::string input;
  double r1 = 0, r2 = 0, eps = 0.1, h = 1e-3;
  bool pangloss = false;
  std::string csv;
  bool stamp = false;
  SolverFlags solver;
};

SecondOrderPlane plane_for(const JointDist& src, double r1, double r2, double eps, bool pangloss, double h,
                           const SolverConfig& cfg, RatePoint& r_star) {
  qinv(eps);  // domain check before any solve
  if (pangloss) {
    r_star = {entropy(src) - r1 - r2, r1, r2};
    return pangloss_plane(src, r_star, eps, cfg);
  }
  r_star = {rate_function(src, r1, r2, cfg).value, r1, r2};
  return second_order_region(src, r_star, eps, cfg, h);
}

int cmd_second_order(const SecondArgs& a, std::ostream& out) {
  const InputDoc doc = load_input(a.input);
  if (!(a.eps > 0.0 && a.eps < 1.0)) throw ValidationError("second-order: eps must lie in (0,1)");
  RatePoint rs;
  const SecondOrderPlane p = plane_for(doc.dist, a.r1, a.r2, a.eps, a.pangloss, a.h, a.solver.config(), rs);
  Manifest m{"second-order", doc.digest, a.solver.seed, {}, stamp(a.stamp)};
  m.config.emplace_back("r1", num(a.r1));
  m.config.emplace_back("r2", num(a.r2));
  m.config.emplace_back("eps", num(a.eps));
  m.config.emplace_back("pangloss", a.pangloss ? "true" : "false");
  a.solver.echo(m);
  std::ostringstream body;
  body << "L1,L2,L0_boundary\n";
  for (int i = -2; i <= 2; ++i)
    for (int k = -2; k <= 2; ++k) {
      const double l1 = 0.5 * i, l2 = 0.5 * k;
      body << num(l1) << ',' << num(l2) << ',' << num(p.threshold - p.lambda1 * l1 - p.lambda2 * l2) << '\n';
    }
  out << manifest_header(m);
  out << "r0* = " << fixed(rs.r0) << '\n';
  out << "lambda1* = " << fixed(p.lambda1) << '\n';
  out << "lambda2* = " << fixed(p.lambda2) << '\n';
  out << "V = " << fixed(p.variance) << '\n';
  out << "threshold = " << fixed(p.threshold) << '\n';
  if (a.csv.empty())
    out << body.str();
  else
    write_file(a.csv, manifest_header(m) + body.str());
  return 0;
}

// ---- region

struct RegionArgs {
  std::string input;
  std::string grid = "-4:4:9";
  std::string csv, svg;
  bool stamp = false;
  SolverFlags solver;
};

std::vector<double> parse_grid(const std::string& g) {
  std::stringstream ss(g);
  std::string a, b, c;
  if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c) )
    throw ValidationError("region: grid must be lo:hi:count in log2(lambda)");
  double lo, hi;
  long n;
  try {
    lo = std::stod(a);
    hi = std::stod(b);
    n = std::stol(c);
  } catch (const std::exception&) {
    throw ValidationError("region: grid must be lo:hi:count in log2(lambda)");
  }
  if (n < 1 || n > 200 || hi < lo) throw ValidationError("region: grid count must be in [1, 200] with lo <= hi");
  std::vector<double> out;
  for (long i = 0; i < n; ++i) out.push_back(n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (n - 1));
  return out;
}

std::string svg_plot(const std::vector<RateTriple>& pts) {
  double xmax = 1e-9, ymax = 1e-9, zmax = 1e-9;
  for (const auto& t : pts) {
    xmax = std::max(xmax, t.r1);
    ymax = std::max(ymax, t.r2);
    zmax = std::max(zmax, t.r0);
  }
  const double W = 400, H = 400, pad = 40;
  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << ' ' << H << "\">\n";
  s << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  s << "<line x1=\"" << pad << "\" y1=\"" << H - pad << "\" x2=\"" << W - pad << "\" y2=\"" << H - pad
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << pad << "\" y1=\"" << H - pad << "\" x2=\"" << pad << "\" y2=\"" << pad
    << "\" stroke=\"black\"/>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"" << H - 8 << "\" font-size=\"12\">r1</text>\n";
  s << "<text x=\"8\" y=\"" << H / 2 << "\" font-size=\"12\">r2</text>\n";
  for (const auto& t : pts) {
    const double x = pad + (W - 2 * pad) * t.r1 / xmax, y = H - pad - (H - 2 * pad) * t.r2 / ymax;
    const int shade = static_cast<int>(std::lround(200.0 * (1.0 - t.r0 / zmax)));
    s << "<circle class=\"pt\" cx=\"" << fixed(x, 2) << "\" cy=\"" << fixed(y, 2) << "\" r=\"4\" fill=\"rgb("
      << shade << ',' << shade << ",255)\"><title>r0=" << fixed(t.r0) << "</title></circle>\n";
  }
  s << "</svg>\n";
  return s.str();
}

int cmd_region(const RegionArgs& a, std::ostream& out) {
  const InputDoc doc = load_input(a.input);
  const auto g = parse_grid(a.grid);
  std::vector<LagrangePair> grid;
  for (double u : g)
    for (double v : g) grid.emplace_back(std::exp2(u), std::exp2(v));
  const auto pts = trace_region(doc.dist, grid, a.solver.config());
  // boundary triples, duplicates within 1e-9 folded
  std::vector<RateTriple> rows;
  std::vector<LagrangePair> at;
  std::set<std::array<long long, 3>> seen;
  for (const auto& p : pts) {
    if (!p.ok) continue;
    const std::array<long long, 3> key{std::llround(p.rates.r0 * 1e9), std::llround(p.rates.r1 * 1e9),
                                       std::llround(p.rates.r2 * 1e9)};
    if (!seen.insert(key).second) continue;
    RateTriple t = p.rates;
    for (double* v : {&t.r0, &t.r1, &t.r2})
      if (std::abs(*v) < 1e-12) *v = 0.0;
    rows.push_back(t);
    at.push_back(p.lambdas);
  }
  if (rows.empty()) throw NumericalError("region: every grid point failed");
  Manifest m{"region", doc.digest, a.solver.seed, {}, stamp(a.stamp)};
  m.config.emplace_back("grid", a.grid);
  a.solver.echo(m);
  std::ostringstream body;
  body << "lambda1,lambda2,r0,r1,r2\n";
  for (std::size_t i = 0; i < rows.size(); ++i)
    body << num(at[i].lambda1) << ',' << num(at[i].lambda2) << ',' << num(rows[i].r0) << ',' << num(rows[i].r1)
         << ',' << num(rows[i].r2) << '\n';
  const std::string csv = manifest_header(m) + body.str();
  if (a.csv.empty())
    out << csv;
  else
    write_file(a.csv, csv);
  if (!a.svg.empty()) {
    std::string header;
    std::istringstream hs(manifest_header(m));
    for (std::string line; std::getline(hs, line);) header += "<!-- " + line.substr(2) + " -->\n";
    std::string svg = svg_plot(rows);
    const auto pos = svg.find("<svg");
    svg.insert(pos, header);
    write_file(a.svg, svg);
  }
  return 0;
}

// ---- simulate

struct SimArgs {
  std::string input;
  long n = 200;
  long samples = 20000;
  double eps = 0.1;
  double r1 = 0.5, r2 = 0.5;
  std::string direction = "achievability";
  std::string split;
  bool pangloss = false;
  int workers = 0;
  std::uint64_t seed = 1;
  std::string csv;
  bool stamp = false;
  SolverFlags solver;
};

int cmd_simulate(const SimArgs& a, std::ostream& out) {
  const InputDoc doc = load_input(a.input);
  if (a.direction != "achievability" && a.direction != "converse")
    throw ValidationError("simulate: direction must be achievability or converse");
  if (!(a.eps > 0.0 && a.eps < 1.0)) throw ValidationError("simulate: eps must lie in (0,1)");
  const Direction dir = a.direction == "converse" ? Direction::Converse : Direction::Achievability;
  SolverConfig base = a.solver.config();
  RatePoint rs;
  const SecondOrderPlane plane = plane_for(doc.dist, a.r1, a.r2, a.eps, a.pangloss, 1e-3, base, rs);
  std::array<double, 3> split{plane.threshold, 0.0, 0.0};
  if (!a.split.empty()) split = parse_triple(a.split);
  const auto logm = finite_n_rates(plane, rs, a.n, split);
  McConfig mc;
  mc.seed = a.seed;
  mc.workers = workers_from_env(a.workers);
  mc.solver.tol = base.tol;
  mc.solver.max_iter = base.max_iter;
  mc.solver.w_size_override = base.w_size_override;
  const McEstimate e = error_bound_mc(doc.dist, dir, a.n, {logm[0], logm[1], logm[2]}, a.samples, mc);
  const double clt = clt_approx(plane, split);

  Manifest m{"simulate", doc.digest, a.seed, {}, stamp(a.stamp)};
  m.config.emplace_back("n", std::to_string(a.n));
  m.config.emplace_back("samples", std::to_string(a.samples));
  m.config.emplace_back("eps", num(a.eps));
  m.config.emplace_back("r1", num(a.r1));
  m.config.emplace_back("r2", num(a.r2));
  m.config.emplace_back("direction", a.direction);
  m.config.emplace_back("pangloss", a.pangloss ? "true" : "false");
  m.config.emplace_back("split", num(split[0]) + ";" + num(split[1]) + ";" + num(split[2]));
  std::ostringstream body;
  body << "n,direction,samples,probability,stderr,seed,cache_hits,cache_misses,distinct_types,solver_calls,"
          "failures,clt_approx\n";
  body << a.n << ',' << a.direction << ',' << e.samples << ',' << num(e.probability) << ',' << num(e.stderr_) << ','
       << e.seed << ',' << e.cache_hits << ',' << e.cache_misses << ',' << e.distinct_types << ','
       << e.solver_calls << ',' << e.failures << ',' << num(clt) << '\n';
  const std::string csv = manifest_header(m) + body.str();
  if (a.csv.empty())
    out << csv;
  else
    write_file(a.csv, csv);
  return 0;
}

// ---- cover

struct CoverArgs {
  std::string input;
  long n = 8;
  long w_size = 2;
  std::uint64_t seed = 1;
  std::uint64_t max_draws = 200000;
  bool stamp = false;
};

// w = x on the diagonal cells, uniform elsewhere
Matrix default_cond(const JointDist& t, Index W) {
  Matrix m = Matrix::Constant(t.cells(), W, 1.0 / static_cast<double>(W));
  if (W == 1) return m;
  for (Index x = 0; x < t.x_size(); ++x)
    for (Index y = 0; y < t.y_size(); ++y)
      if (x == y) {
        m.row(x * t.y_size() + y).setZero();
        m(x * t.y_size() + y, x % W) = 1.0;
      }
  return m;
}

int cmd_cover(const CoverArgs& a, std::ostream& out) {
  const InputDoc doc = load_input(a.input);
  if (a.n < 1 || a.n > kCoverMaxN) throw PreconditionError("cover: n must be in [1, 16] (limit 16)");
  if (a.w_size < 1 || a.w_size > kCoverMaxW) throw PreconditionError("cover: w-size must be in [1, 3] (limit 3)");
  const CondChannel cond(doc.cond ? *doc.cond : default_cond(doc.dist, static_cast<Index>(a.w_size)));
  if (cond.out_size() != a.w_size) throw ValidationError("cover: cond width differs from --w-size");
  const double budget = covering_budget_log(doc.dist, cond, a.n);
  const Codebook book = covering_build(doc.dist, cond, a.n, budget, {a.seed, a.max_draws});
  Manifest m{"cover", doc.digest, a.seed, {}, stamp(a.stamp)};
  m.config.emplace_back("n", std::to_string(a.n));
  m.config.emplace_back("w_size", std::to_string(a.w_size));
  out << manifest_header(m);
  out << "w_type =";
  for (long k : book.w_type) out << ' ' << k;
  out << '\n';
  for (const auto& w : book.words) {
    for (int s : w) out << s;
    out << '\n';
  }
  out << "words = " << book.words.size() << '\n';
  out << "draws = " << book.draws << '\n';
  out << "coverage = " << book.pairs_covered << '/' << book.pairs_total << " ("
      << fixed(100.0 * static_cast<double>(book.pairs_covered) / static_cast<double>(book.pairs_total), 1) << "%)\n";
  out << "budget_log2 = " << fixed(book.budget_log) << " (size log2 = "
      << fixed(std::log2(static_cast<double>(book.words.size()))) << ")\n";
  return 0;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gray-Wyner rate region and second-order toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  RateArgs ra;
  auto* rate = app.add_subcommand("rate", "R(r1, r2 | P) with the optimal test channel");
  rate->add_option("input", ra.input, "distribution file")->required();
  rate->add_option("--r1", ra.r1)->required();
  rate->add_option("--r2", ra.r2)->required();
  rate->add_flag("--json", ra.json, "machine-readable output");
  rate->add_flag("--stamp", ra.stamp, "add wall-clock to the manifest");
  ra.solver.add(rate);

  SecondArgs sa;
  auto* so = app.add_subcommand("second-order", "slopes, dispersion and the second-order plane");
  so->add_option("input", sa.input)->required();
  so->add_option("--r1", sa.r1)->required();
  so->add_option("--r2", sa.r2)->required();
  so->add_option("--eps", sa.eps)->required();
  so->add_option("--step", sa.h, "finite-difference step");
  so->add_flag("--pangloss", sa.pangloss, "point on the face r0 + r1 + r2 = H(X,Y)");
  so->add_option("--csv", sa.csv, "plane CSV path (stdout if absent)");
  so->add_flag("--stamp", sa.stamp);
  sa.solver.add(so);

  RegionArgs ga;
  auto* reg = app.add_subcommand("region", "trace boundary triples over a lambda grid");
  reg->add_option("input", ga.input)->required();
  reg->add_option("--grid", ga.grid, "lo:hi:count in log2(lambda), both axes");
  reg->add_option("--csv", ga.csv);
  reg->add_option("--svg", ga.svg);
  reg->add_flag("--stamp", ga.stamp);
  ga.solver.add(reg);

  SimArgs ma;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo error bound against the CLT value");
  sim->add_option("input", ma.input)->required();
  sim->add_option("--n", ma.n)->required();
  sim->add_option("--samples", ma.samples);
  sim->add_option("--eps", ma.eps);
  sim->add_option("--r1", ma.r1);
  sim->add_option("--r2", ma.r2);
  sim->add_option("--direction", ma.direction);
  sim->add_option("--split", ma.split, "a0,a1,a2 on the plane (default threshold,0,0)");
  sim->add_flag("--pangloss", ma.pangloss);
  sim->add_option("--workers", ma.workers, "worker threads (default GW_WORKERS or 1)");
  sim->add_option("--seed", ma.seed, "sampling seed");
  sim->add_option("--csv", ma.csv);
  sim->add_flag("--stamp", ma.stamp);
  ma.solver.add(sim, false);

  CoverArgs ca;
  auto* cov = app.add_subcommand("cover", "type covering codebook with exhaustive verification");
  cov->add_option("input", ca.input, "type file (pxy or counts, optional cond)")->required();
  cov->add_option("--n", ca.n)->required();
  cov->add_option("--w-size", ca.w_size);
  cov->add_option("--seed", ca.seed);
  cov->add_option("--max-draws", ca.max_draws);
  cov->add_flag("--stamp", ca.stamp);

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      out << app.help();
      return 0;
    } catch (const CLI::CallForVersion&) {
      out << kToolVersion << '\n';
      return 0;
    } catch (const CLI::ParseError& e) {
      err << "error: " << e.what() << '\n';
      return 2;
    }
    if (*rate) return cmd_rate(ra, out);
    if (*so) return cmd_second_order(sa, out);
    if (*reg) return cmd_region(ga, out);
    if (*sim) return cmd_simulate(ma, out);
    if (*cov) return cmd_cover(ca, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const CoveringFailure& e) {
    err << "covering failed: " << e.what() << '\n';
    return 3;
  } catch (const ResourceError& e) {
    err << "resource limit: " << e.what() << '\n';
    return 4;
  }
  return 2;
}

}  // namespace gw::cli
