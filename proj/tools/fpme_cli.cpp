// fpme: command-line front end over libfpme.
//
// Exit codes: 0 pass, 1 verification failure, 2 usage or domain error,
// 3 numerical failure (instability, non-convergence).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fpme/fpme.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { pass = 0, verification_failed = 1, usage = 2, numerical = 3 };

struct Failure {
  int code;
  std::string message;
};

int exit_code(fpme_status s) {
  switch (s) {
    case FPME_OK: return pass;
    case FPME_E_INSTABILITY:
    case FPME_E_CONVERGENCE:
    case FPME_E_INTERNAL: return numerical;
    default: return usage;
  }
}

void check(fpme_status s) {
  if (s != FPME_OK) throw Failure{exit_code(s), std::string(fpme_status_string(s)) + ": " + fpme_last_error()};
}

template <class T, void (*Destroy)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Destroy(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};

using Solution = Handle<fpme_solution, fpme_solution_destroy>;
using Report = Handle<fpme_report, fpme_report_destroy>;
using Run = Handle<fpme_run, fpme_run_destroy>;

std::string num(double x) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(16) << x;
  return os.str();
}

std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Collects what a subcommand wrote and emits <command>.manifest.json next to it.
class Manifest {
public:
  Manifest(std::string command, const CLI::App& app, const std::string& dir) : command_(std::move(command)), dir_(dir) {
    for (const CLI::Option* o : app.get_options()) {
      if (o->get_name() == "--help" || o->get_name() == "--config" || o->get_lnames().empty()) continue;
      const std::string key = o->get_lnames().front();
      if (key == "out") continue;
      auto res = o->results();
      if (res.empty() && !o->get_default_str().empty()) res.push_back(o->get_default_str());
      if (res.empty()) continue;
      if (o->get_expected_max() > 1 || res.size() > 1) {
        params_[key] = res;
      } else if (o->get_type_size() == 0) {
        params_[key] = o->as<bool>();
      } else {
        params_[key] = scalar(res.front());
      }
    }
  }

  std::string path(const std::string& name) {
    outputs_.push_back(name);
    return (fs::path(dir_) / name).string();
  }

  void set(const std::string& key, json value) { extra_[key] = std::move(value); }

  void write(std::uint64_t seed) {
    const std::string name = command_ + ".manifest.json";
    json j;
    j["command"] = command_;
    j["parameters"] = params_;
    j["seed"] = seed;
    j["tool_version"] = fpme_version();
    j["timestamp"] = timestamp();
    j["outputs"] = outputs_;
    for (auto& [k, v] : extra_.items()) j[k] = v;
    std::ofstream os(fs::path(dir_) / name);
    os << j.dump(2) << "\n";
    if (!os) throw Failure{usage, "cannot write manifest in " + dir_};
  }

private:
  static json scalar(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end && *end == '\0' && end != s.c_str()) {
      if (s.find_first_of(".eE") == std::string::npos && std::abs(v) < 9e15) return static_cast<long long>(v);
      return v;
    }
    return s;
  }

  std::string command_, dir_;
  json params_ = json::object();
  json extra_ = json::object();
  std::vector<std::string> outputs_;
};

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Failure{usage, "cannot create output directory " + dir + ": " + ec.message()};
}

// ----------------------------------------------------------------------------
// catalog

struct CatalogArgs {
  std::string family = "fpme1-mc";
  int N = 1;
  double s = 0.5;
  double mass = 0, radius = 0, lambda = 0;
  double T = 1.0;
  double m = 0.0;
  int samples = 201;
  double ymax = 5.0;
  std::string out = "fpme_out";
};

void fix_constants(fpme_solution* sol, const CLI::App& app, const CatalogArgs& a) {
  const double* mass = app.count("--mass") ? &a.mass : nullptr;
  const double* lambda = app.count("--lambda") ? &a.lambda : nullptr;
  double radius = app.count("--radius") ? a.radius : 1.0;
  const double* rp = (mass || lambda) && !app.count("--radius") ? nullptr : &radius;
  check(fpme_solution_fix(sol, mass, rp, lambda, a.T));
}

int cmd_catalog(const CLI::App& app, const CatalogArgs& a) {
  Solution sol;
  const bool vss = a.family.rfind("vss-", 0) == 0;
  if (vss) {
    if (!app.count("--m")) throw Failure{usage, "--m is required for " + a.family};
    check(fpme_solution_create_vss(a.family.c_str(), a.N, a.s, a.m, a.T, sol.out()));
  } else {
    check(fpme_solution_create(a.family.c_str(), a.N, a.s, sol.out()));
    fix_constants(sol.get(), app, a);
  }
  fpme_solution_info info{};
  check(fpme_solution_info_get(sol.get(), &info));

  ensure_dir(a.out);
  Manifest man("catalog", app, a.out);
  char* doc = nullptr;
  check(fpme_solution_to_json(sol.get(), &doc));
  const std::string text = doc;
  fpme_free_string(doc);
  {
    std::ofstream os(man.path("solution.json"));
    os << text << "\n";
  }
  {
    std::ofstream os(man.path("profile.csv"));
    os << "y,phi\n" << std::scientific << std::setprecision(16);
    const double scale = vss ? 1.0 : info.R;
    for (int i = 0; i < a.samples; ++i) {
      // a VSS is singular at the origin, so its samples start at the first positive node
      const double y = a.ymax * scale * (vss ? (i + 1.0) / a.samples : double(i) / std::max(1, a.samples - 1));
      double phi = 0;
      if (vss) {
        phi = info.C * std::pow(y, -2.0 * info.q);
      } else {
        check(fpme_solution_profile(sol.get(), y, &phi));
      }
      os << y << "," << phi << "\n";
    }
    if (!os) throw Failure{usage, "cannot write profile.csv"};
  }
  man.write(0);
  std::cout << text << "\n";
  return pass;
}

// ----------------------------------------------------------------------------
// verify

struct VerifyArgs {
  std::string family = "fpme1-mc";
  int N = 2;
  double s = 0.5;
  double m = 0.0;
  double T = 1.0;
  int grid = 60;
  double lo = 1e-2, hi = 1e2;
  double tol = 1e-8;
  std::vector<std::string> perturb;
  std::string mode = "profile";
  std::uint64_t seed = 1;
  int random = 0;
  std::string out = "fpme_out";
};

void apply_perturbations(fpme_solution* sol, const std::vector<std::string>& specs) {
  if (specs.empty()) return;
  fpme_solution_info info{};
  check(fpme_solution_info_get(sol, &info));
  std::map<std::string, double*> target{{"m", &info.m}, {"q", &info.q}, {"alpha", &info.alpha}, {"beta", &info.beta}};
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw Failure{usage, "--perturb expects name=delta, got " + spec};
    const auto it = target.find(spec.substr(0, eq));
    if (it == target.end()) throw Failure{usage, "--perturb name must be m, q, alpha or beta, got " + spec};
    double delta = 0;
    try {
      delta = std::stod(spec.substr(eq + 1));
    } catch (const std::exception&) {
      throw Failure{usage, "--perturb delta is not a number: " + spec};
    }
    double& v = *it->second;
    v = v != 0.0 ? v * (1.0 + delta) : delta;
  }
  check(fpme_solution_set_exponents(sol, info.m, info.q, info.alpha, info.beta));
}

struct Residual {
  double norm = 0;
  std::vector<double> t, r, res, normalization;
};

Residual profile_residual(const fpme_solution* sol, const VerifyArgs& a, double R) {
  std::vector<double> grid(a.grid);
  check(fpme_log_grid(R, grid.size(), a.lo, a.hi, grid.data()));
  Report rep;
  check(fpme_residual_profile(sol, grid.data(), grid.size(), rep.out()));
  Residual out;
  const size_t n = fpme_report_size(rep.get());
  out.r.resize(n);
  out.res.resize(n);
  out.normalization.resize(n);
  check(fpme_report_values(rep.get(), out.r.data(), out.res.data(), out.normalization.data()));
  check(fpme_report_norm(rep.get(), &out.norm));
  out.t.assign(n, NAN);
  return out;
}

// Three time levels, the self-similar radii of the profile grid at each.
Residual spacetime_residual(const fpme_solution* sol, const VerifyArgs& a) {
  fpme_solution_info info{};
  check(fpme_solution_info_get(sol, &info));
  const double R = std::isfinite(info.R) ? info.R : 1.0;
  std::vector<double> y(a.grid);
  check(fpme_log_grid(R, y.size(), a.lo, a.hi, y.data()));
  Residual out;
  for (double frac : info.extinction_anchor ? std::vector<double>{0.25, 0.5, 0.75} : std::vector<double>{0.5, 1, 2}) {
    const double t = info.extinction_anchor ? frac * info.T : frac;
    const double span = info.extinction_anchor ? info.T - t : t;
    const double scale = info.extinction_anchor ? std::pow(span, -info.beta) : std::pow(t, info.beta);
    std::vector<double> r(y.size()), tt(y.size(), t);
    for (size_t i = 0; i < y.size(); ++i) r[i] = y[i] * scale;
    Report rep;
    check(fpme_residual_spacetime(sol, r.data(), tt.data(), r.size(), 2.5e-4 * span, rep.out()));
    std::vector<double> rr(r.size()), res(r.size()), nn(r.size());
    check(fpme_report_values(rep.get(), rr.data(), res.data(), nn.data()));
    double norm = 0;
    check(fpme_report_norm(rep.get(), &norm));
    out.norm = std::max(out.norm, norm);
    out.t.insert(out.t.end(), tt.begin(), tt.end());
    out.r.insert(out.r.end(), rr.begin(), rr.end());
    out.res.insert(out.res.end(), res.begin(), res.end());
    out.normalization.insert(out.normalization.end(), nn.begin(), nn.end());
  }
  return out;
}

void write_residual_csv(const std::string& path, const Residual& r, bool with_time) {
  std::ofstream os(path);
  os << (with_time ? "t,radius,residual,normalization\n" : "radius,residual,normalization\n");
  os << std::scientific << std::setprecision(16);
  for (size_t i = 0; i < r.r.size(); ++i) {
    if (with_time) os << r.t[i] << ",";
    os << r.r[i] << "," << r.res[i] << "," << r.normalization[i] << "\n";
  }
  if (!os) throw Failure{usage, "cannot write " + path};
}

Residual verify_one(const std::string& family, int N, double s, const VerifyArgs& a, bool spacetime) {
  Solution sol;
  if (family.rfind("vss-", 0) == 0) {
    check(fpme_solution_create_vss(family.c_str(), N, s, a.m, a.T, sol.out()));
  } else {
    check(fpme_solution_create(family.c_str(), N, s, sol.out()));
    const double radius = 1.0;
    check(fpme_solution_fix(sol.get(), nullptr, &radius, nullptr, a.T));
  }
  apply_perturbations(sol.get(), a.perturb);
  return spacetime ? spacetime_residual(sol.get(), a) : profile_residual(sol.get(), a, 1.0);
}

int verify_compact(const CLI::App& app, const VerifyArgs& a) {
  if (!app.count("--m")) throw Failure{usage, "--m is required for fpme3-compact"};
  const double r_lo = 0.01, r_hi = 0.5;
  double min_norm = 0, q = 0, lambda = 0;
  check(fpme_nonexistence_search(a.N, a.s, a.m, r_lo, r_hi, &min_norm, &q, &lambda));
  const double beta = 1.0 / (a.N * (a.m - 1.0) + 2.0 - 2.0 * a.s);
  std::vector<double> grid(40);
  check(fpme_log_grid(1.0, grid.size(), r_lo, r_hi, grid.data()));
  Report rep;
  check(fpme_residual_fpme3(a.N, a.s, a.m, beta, 1, q, 1.0, lambda, grid.data(), grid.size(), rep.out()));

  ensure_dir(a.out);
  Manifest man("verify", app, a.out);
  check(fpme_report_write_csv(rep.get(), man.path("residual.csv").c_str()));
  const bool found = min_norm <= a.tol;
  std::ostringstream note;
  note << "fpme3 compact profile, N = " << a.N << ", s = " << a.s << ", m = " << a.m
       << ": smallest normalized residual over the (q, lambda) search is " << num(min_norm) << " at q = " << num(q)
       << ", lambda = " << num(lambda);
  note << (found ? "; a compact profile satisfies the equation within tolerance"
                 : "; no compact self-similar profile exists for these parameters");
  man.set("norm", min_norm);
  man.set("tolerance", a.tol);
  man.set("note", note.str());
  man.write(a.seed);
  std::cout << note.str() << "\n";
  return found ? pass : verification_failed;
}

// Uniform N in {1, 2, 3} and s in (0.05, 0.95), redrawn until the family exists.
std::pair<int, double> draw_case(const std::string& family, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim(1, 3);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int tries = 0; tries < 10000; ++tries) {
    const int N = dim(rng);
    const double s = u(rng);
    Solution sol;
    if (fpme_solution_create(family.c_str(), N, s, sol.out()) == FPME_OK) return {N, s};
  }
  throw Failure{usage, "no admissible (N, s) drawn for " + family};
}

int cmd_verify(const CLI::App& app, VerifyArgs a) {
  if (a.family == "fpme3-compact") return verify_compact(app, a);
  const bool vss = a.family.rfind("vss-", 0) == 0;
  if (vss && !app.count("--m")) throw Failure{usage, "--m is required for " + a.family};
  const bool spacetime = vss || a.mode == "spacetime";

  ensure_dir(a.out);
  Manifest man("verify", app, a.out);
  if (a.random <= 0) {
    const Residual r = verify_one(a.family, a.N, a.s, a, spacetime);
    write_residual_csv(man.path("residual.csv"), r, spacetime);
    man.set("norm", r.norm);
    man.set("tolerance", a.tol);
    man.write(a.seed);
    std::cout << "residual norm " << num(r.norm) << " (tolerance " << num(a.tol) << ")\n";
    return r.norm <= a.tol ? pass : verification_failed;
  }

  if (vss) throw Failure{usage, "--random applies to the four explicit families"};
  std::mt19937_64 rng(a.seed);
  double worst = 0;
  std::ofstream cases(man.path("cases.csv"));
  cases << "case,N,s,norm\n" << std::scientific << std::setprecision(16);
  for (int k = 0; k < a.random; ++k) {
    const auto [N, s] = draw_case(a.family, rng);
    const Residual r = verify_one(a.family, N, s, a, spacetime);
    write_residual_csv(man.path("residual_" + std::to_string(k) + ".csv"), r, spacetime);
    cases << k << "," << N << "," << s << "," << r.norm << "\n";
    worst = std::max(worst, r.norm);
  }
  cases.close();
  man.set("norm", worst);
  man.set("tolerance", a.tol);
  man.write(a.seed);
  std::cout << "largest residual norm over " << a.random << " cases " << num(worst) << " (tolerance " << num(a.tol)
            << ")\n";
  return worst <= a.tol ? pass : verification_failed;
}

// ----------------------------------------------------------------------------
// derive

struct DeriveArgs {
  int N = 1;
  double s = 0.5;
  double gtol = 1e-11;
  std::string out = "fpme_out";
};

int cmd_derive(const CLI::App& app, const DeriveArgs& a) {
  char* doc = nullptr;
  check(fpme_derive(a.N, a.s, &doc));
  const json j = json::parse(doc);
  fpme_free_string(doc);

  ensure_dir(a.out);
  Manifest man("derive", app, a.out);
  {
    std::ofstream os(man.path("derivation.json"));
    os << j.dump(2) << "\n";
  }
  double worst = 0;
  int surviving = 0;
  for (const auto& c : j.at("cases")) {
    const bool ok = c.value("admissible", false);
    std::cout << std::left << std::setw(14) << c.value("kind", "") << " ";
    if (c.at("beta_tilde").is_null()) {
      std::cout << "absent   " << c.value("reason", "") << "\n";
      continue;
    }
    std::cout << "bt = " << num(c.at("beta_tilde").get<double>()) << "  "
              << (ok ? "admissible " + c.value("family", "") : "rejected: " + c.value("reason", "")) << "\n";
    if (ok && c.contains("max_abs_g2_to_g6")) {
      ++surviving;
      worst = std::max(worst, c.at("max_abs_g2_to_g6").get<double>());
    }
  }
  man.set("surviving_cases", surviving);
  man.set("max_abs_g", worst);
  man.write(0);
  std::cout << "largest |g2|, |g4|, |g6| over surviving cases " << num(worst) << "\n";
  return worst <= a.gtol ? pass : verification_failed;
}

// ----------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string experiment = "decay";
  std::string equation = "fpme1";
  int N = 1;
  double s = 0.5;
  int n = 1024;
  int dim = 1;
  double L = 0.0;
  double t_end = 10.0;
  double T = 1.0;
  double R = 1.0;
  double amplitude = 1.0;
  double eps = 0.1;
  std::string stepper = "auto";
  double rtol = 1e-8;
  double dt = 1e-3;
  int samples = 41;
  double tail_tol = 1e-2;
  double stop_fraction = 0.5;
  bool dealias = false;
  int snapshots = 0;
  double tol = -1.0;
  std::string out = "fpme_out";
};

struct SnapshotWriter {
  Manifest* man = nullptr;
  std::vector<int> wanted;
  std::string error;
};

void write_snapshot_cb(void* user, int sample, double t, int dim, int n, double L, const double* values) {
  auto* w = static_cast<SnapshotWriter*>(user);
  if (!std::binary_search(w->wanted.begin(), w->wanted.end(), sample) || !w->error.empty()) return;
  char name[32];
  std::snprintf(name, sizeof name, "snapshot_%03d.bin", sample);
  if (fpme_write_snapshot(w->man->path(name).c_str(), dim, n, L, t, values) != FPME_OK) w->error = fpme_last_error();
}

int cmd_simulate(const CLI::App& app, SimulateArgs a) {
  const bool extinction = a.experiment == "extinction";
  if (extinction && !app.count("--s")) a.s = 0.25;
  if (extinction && !app.count("--n")) a.n = 16384;
  if (a.experiment == "convergence" && !app.count("--n")) a.n = 8192;
  if (extinction && a.equation != "fpme1") throw Failure{usage, "the extinction experiment runs FPME1"};

  fpme_experiment_options o;
  fpme_experiment_options_default(&o);
  o.dim = a.dim;
  o.n = a.n;
  o.L = a.L;
  o.dealias = a.dealias;
  static const std::map<std::string, fpme_stepper> steppers{{"auto", FPME_STEPPER_AUTO},
                                                            {"if", FPME_STEPPER_INTEGRATING_FACTOR},
                                                            {"dopri45", FPME_STEPPER_DOPRI45},
                                                            {"rk4", FPME_STEPPER_RK4}};
  o.stepper = steppers.at(a.stepper);
  o.dt = a.dt;
  o.t_end = a.t_end;
  o.rtol = a.rtol;
  o.tail_tolerance = a.tail_tol;
  o.samples = a.samples;
  o.stop_fraction = a.stop_fraction;

  ensure_dir(a.out);
  Manifest man("simulate", app, a.out);
  SnapshotWriter writer{&man, {}, {}};
  if (a.snapshots > 0) {
    const int k = std::min(a.snapshots, a.samples);
    for (int j = 0; j < k; ++j)
      writer.wanted.push_back(k == 1 ? a.samples - 1 : static_cast<int>(std::lround(j * (a.samples - 1.0) / (k - 1))));
    writer.wanted.erase(std::unique(writer.wanted.begin(), writer.wanted.end()), writer.wanted.end());
    o.on_sample = write_snapshot_cb;
    o.user = &writer;
  }

  Run run;
  const std::string family = a.equation == "fpme3" ? "fpme3-mc" : "fpme1-mc";
  if (extinction) {
    check(fpme_run_extinction(a.N, a.s, a.T, a.R, a.amplitude, &o, run.out()));
  } else {
    if (a.equation != "fpme1" && a.equation != "fpme3") throw Failure{usage, "--equation must be fpme1 or fpme3"};
    Solution sol;
    check(fpme_solution_create(family.c_str(), a.N, a.s, sol.out()));
    check(fpme_solution_fix(sol.get(), nullptr, &a.R, nullptr, a.T));
    if (a.experiment == "decay") {
      check(fpme_run_decay(sol.get(), &o, run.out()));
    } else {
      check(fpme_run_profile_convergence(sol.get(), a.eps, &o, run.out()));
    }
  }
  if (!writer.error.empty()) throw Failure{usage, "snapshot: " + writer.error};
  check(fpme_run_write_csv(run.get(), man.path("timeseries.csv").c_str()));

  fpme_run_summary sum{};
  check(fpme_run_summary_get(run.get(), &sum));
  std::vector<std::string> log;
  for (size_t i = 0; i < fpme_run_log_size(run.get()); ++i) log.emplace_back(fpme_run_log_line(run.get(), i));
  const long warnings = sum.tail_warnings + (sum.clipped_points > 0 ? 1 : 0);
  man.set("measured", sum.measured);
  man.set("reference", sum.reference);
  man.set("relative_error", sum.relative_error);
  man.set("mass_drift", sum.mass_drift);
  man.set("shape_deviation", sum.shape_deviation);
  man.set("error_tail_nonincreasing", sum.error_tail_nonincreasing != 0);
  man.set("grid", json{{"dim", sum.dim}, {"n", sum.n}, {"L", sum.L}});
  man.set("steps", sum.steps);
  man.set("rejected_steps", sum.rejected);
  man.set("instabilities", sum.instabilities);
  man.set("clipped_points", sum.clipped_points);
  man.set("tail_warnings", sum.tail_warnings);
  man.set("warnings", warnings);
  man.set("log", log);
  man.set("note", fpme_run_note(run.get()));
  man.write(0);

  const char* what = a.experiment == "decay"        ? "decay exponent"
                     : a.experiment == "extinction" ? "extinction time"
                                                    : "final profile error";
  std::cout << what << ": measured " << num(sum.measured) << ", reference " << num(sum.reference)
            << ", relative error " << num(sum.relative_error) << "\n";
  if (a.experiment == "convergence")
    std::cout << "profile error tail " << (sum.error_tail_nonincreasing ? "non-increasing" : "increasing") << "\n";
  std::cout << "mass drift " << num(sum.mass_drift) << ", box L = " << sum.L << ", n = " << sum.n << ", warnings "
            << warnings << "\n";
  for (const auto& line : log) std::cerr << "warning: " << line << "\n";
  if (a.tol >= 0 && !(sum.relative_error <= a.tol)) return verification_failed;
  return pass;
}

// ----------------------------------------------------------------------------
// JSON config: keys become "--key value" tokens placed right after the
// subcommand, so explicit flags on the command line take precedence.

std::vector<std::string> config_tokens(const json& value, const std::string& flag) {
  std::vector<std::string> out;
  auto scalar = [](const json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) return num(v.get<double>());
    throw Failure{usage, "config values must be strings, numbers, booleans or arrays of these"};
  };
  if (value.is_boolean()) {
    if (value.get<bool>()) out.push_back(flag);
  } else if (value.is_array()) {
    for (const auto& v : value) {
      out.push_back(flag);
      out.push_back(scalar(v));
    }
  } else {
    out.push_back(flag);
    out.push_back(scalar(value));
  }
  return out;
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(),
                     [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

std::vector<std::string> apply_config(std::vector<std::string> args, CLI::App& app) {
  std::string path;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + i, args.begin() + i + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + i);
      break;
    }
  }
  if (path.empty()) return args;

  std::ifstream is(path);
  if (!is) throw Failure{usage, "cannot open config file " + path};
  json cfg;
  try {
    cfg = json::parse(is);
  } catch (const json::exception& e) {
    throw Failure{usage, "config file " + path + ": " + e.what()};
  }
  if (!cfg.is_object()) throw Failure{usage, "config file must hold a JSON object"};

  size_t at = 0;
  CLI::App* sub = nullptr;
  for (; at < args.size(); ++at) {
    if (app.get_subcommand_no_throw(args[at])) {
      sub = app.get_subcommand(args[at]);
      break;
    }
  }
  if (!sub) return args;

  auto flag_of = [](std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    return "--" + key;
  };
  std::vector<std::string> inserted;
  auto add = [&](const std::string& key, const json& v, bool strict) {
    const std::string flag = flag_of(key);
    if (!sub->get_option_no_throw(flag)) {
      if (strict) throw Failure{usage, "config: " + sub->get_name() + " has no option " + flag};
      return;
    }
    if (given_on_command_line(args, flag)) return;
    for (auto& t : config_tokens(v, flag)) inserted.push_back(t);
  };
  for (auto& [key, v] : cfg.items()) {
    if (v.is_object()) continue;
    add(key, v, false);
  }
  if (cfg.contains(sub->get_name())) {
    const json& section = cfg.at(sub->get_name());
    if (!section.is_object()) throw Failure{usage, "config: section " + sub->get_name() + " must be an object"};
    for (auto& [key, v] : section.items()) add(key, v, true);
  }
  args.insert(args.begin() + at + 1, inserted.begin(), inserted.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explicit self-similar solutions of fractional porous medium equations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", fpme_version());
  app.add_option("--config", "JSON file with option values; command-line flags take precedence");
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  const std::vector<std::string> families{"fpme1-mc", "fpme1-ext", "fpme1-im", "fpme3-mc", "vss-ext", "vss-grow"};

  CatalogArgs ca;
  auto* catalog = app.add_subcommand("catalog", "Exponents, constants and sampled profile of one family");
  catalog->add_option("--family", ca.family)->check(CLI::IsMember(families))->capture_default_str();
  catalog->add_option("--N", ca.N, "dimension")->check(CLI::PositiveNumber)->capture_default_str();
  catalog->add_option("--s", ca.s, "fractional order")->capture_default_str();
  auto* mass = catalog->add_option("--mass", ca.mass, "total mass (mass-conserving families; M0 for fpme1-ext)");
  auto* radius = catalog->add_option("--radius", ca.radius, "profile radius R (default 1)");
  auto* lambda = catalog->add_option("--lambda", ca.lambda, "profile amplitude");
  mass->excludes(radius);
  radius->excludes(mass);
  lambda->excludes(mass);
  mass->excludes(lambda);
  catalog->add_option("--T", ca.T, "extinction time")->capture_default_str();
  catalog->add_option("--m", ca.m, "diffusion exponent of a very singular solution");
  catalog->add_option("--samples", ca.samples, "profile samples")->check(CLI::Range(2, 1000000))->capture_default_str();
  catalog->add_option("--ymax", ca.ymax, "largest sampled |y| in units of R")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  catalog->add_option("--out", ca.out, "output directory")->capture_default_str();

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Residual of an exact family (exit 0 iff norm <= tol)");
  std::vector<std::string> vfamilies = families;
  vfamilies.push_back("fpme3-compact");
  verify->add_option("--family", va.family)->check(CLI::IsMember(vfamilies))->capture_default_str();
  verify->add_option("--N", va.N)->check(CLI::PositiveNumber)->capture_default_str();
  verify->add_option("--s", va.s)->capture_default_str();
  verify->add_option("--m", va.m, "m of a very singular solution or of the compact FPME3 profile");
  verify->add_option("--T", va.T, "extinction time")->capture_default_str();
  verify->add_option("--grid", va.grid, "log-spaced radii")->check(CLI::Range(2, 100000))->capture_default_str();
  verify->add_option("--lo", va.lo, "smallest radius / R")->check(CLI::PositiveNumber)->capture_default_str();
  verify->add_option("--hi", va.hi, "largest radius / R")->check(CLI::PositiveNumber)->capture_default_str();
  verify->add_option("--tol", va.tol)->capture_default_str();
  verify->add_option("--perturb", va.perturb, "name=delta: scale m, q, alpha or beta by (1 + delta)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  verify->add_option("--mode", va.mode)->check(CLI::IsMember({"profile", "spacetime"}))->capture_default_str();
  verify->add_option("--seed", va.seed)->capture_default_str();
  verify->add_option("--random", va.random, "check this many random (N, s) draws instead of one")
      ->check(CLI::NonNegativeNumber);
  verify->add_option("--out", va.out, "output directory")->capture_default_str();

  DeriveArgs da;
  auto* derive = app.add_subcommand("derive", "Series re-derivation of the exponents");
  derive->add_option("--N", da.N)->check(CLI::PositiveNumber)->capture_default_str();
  derive->add_option("--s", da.s)->capture_default_str();
  derive->add_option("--gtol", da.gtol, "bound on |g2|, |g4|, |g6| of surviving cases")->capture_default_str();
  derive->add_option("--out", da.out, "output directory")->capture_default_str();

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Periodic spectral solver experiments");
  simulate->add_option("--experiment", sa.experiment)
      ->check(CLI::IsMember({"decay", "extinction", "convergence"}))
      ->capture_default_str();
  simulate->add_option("--equation", sa.equation)->check(CLI::IsMember({"fpme1", "fpme3"}))->capture_default_str();
  simulate->add_option("--N", sa.N)->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--s", sa.s, "fractional order (0.25 for extinction runs)")->capture_default_str();
  simulate->add_option("--n", sa.n, "modes per dimension (16384 for extinction, 8192 for convergence runs)")->capture_default_str();
  simulate->add_option("--dim", sa.dim, "grid dimension")->check(CLI::IsMember({1, 2}))->capture_default_str();
  simulate->add_option("--L", sa.L, "box half-width; 0 picks one from the solution")->capture_default_str();
  simulate->add_option("--t-end", sa.t_end, "final time of decay and convergence runs")->capture_default_str();
  simulate->add_option("--T", sa.T, "extinction time")->capture_default_str();
  simulate->add_option("--R", sa.R, "profile radius")->capture_default_str();
  simulate->add_option("--amplitude", sa.amplitude, "initial data multiplier (extinction)")->capture_default_str();
  simulate->add_option("--eps", sa.eps, "perturbation size (convergence)")->capture_default_str();
  simulate->add_option("--stepper", sa.stepper)
      ->check(CLI::IsMember({"auto", "if", "dopri45", "rk4"}))
      ->capture_default_str();
  simulate->add_option("--rtol", sa.rtol)->capture_default_str();
  simulate->add_option("--dt", sa.dt, "initial step (rk4: fixed step)")->capture_default_str();
  simulate->add_option("--samples", sa.samples, "time-series rows")->capture_default_str();
  simulate->add_option("--tail-tol", sa.tail_tol, "tail monitor threshold")->capture_default_str();
  simulate->add_option("--stop-fraction", sa.stop_fraction, "extinction fit window")->capture_default_str();
  simulate->add_flag("--dealias", sa.dealias, "2/3-rule dealiasing");
  simulate->add_option("--snapshots", sa.snapshots, "binary field snapshots to write")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  simulate->add_option("--tol", sa.tol, "fail (exit 1) when the relative error exceeds this");
  simulate->add_option("--out", sa.out, "output directory")->capture_default_str();

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = apply_config(std::move(args), app);
    std::reverse(args.begin(), args.end());
    app.parse(args);
    if (catalog->parsed()) return cmd_catalog(*catalog, ca);
    if (verify->parsed()) return cmd_verify(*verify, va);
    if (derive->parsed()) return cmd_derive(*derive, da);
    if (simulate->parsed()) return cmd_simulate(*simulate, sa);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return usage;
  } catch (const Failure& f) {
    std::cerr << "fpme: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "fpme: " << e.what() << "\n";
    return numerical;
  }
  return usage;
}
