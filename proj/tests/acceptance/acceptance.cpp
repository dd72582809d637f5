#include "dollard/dynamics.hpp"
#include "dollard/expcli/runner.hpp"
#include "dollard/moller.hpp"
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <thread>

using namespace dollard;
using namespace dollard::expcli;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::size_t workers() {
  if (const char *env = std::getenv("DOLLARD_WORKERS"))
    if (const long v = std::atol(env); v > 0)
      return static_cast<std::size_t>(v);
  return std::max(1u, std::thread::hardware_concurrency());
}

class Runs {
public:
  explicit Runs(fs::path out) : m_out(std::move(out)) {}

  // Experiments run once and are shared between criteria.
  const std::pair<RunManifest, ExperimentResult> &get(const std::string &name) {
    auto it = m_cache.find(name);
    if (it != m_cache.end())
      return it->second;
    const auto config =
        parse_config(read_text_file(fs::path(DOLLARD_CONFIG_DIR) / (name + ".conf")));
    ExperimentResult result;
    auto manifest = run(config, m_out / name, workers(), &result);
    return m_cache.emplace(name, std::make_pair(std::move(manifest), std::move(result)))
        .first->second;
  }

private:
  fs::path m_out;
  std::map<std::string, std::pair<RunManifest, ExperimentResult>> m_cache;
};

char buf[512];

Outcome judge(Runs &runs, const std::string &name,
              const std::function<bool(const Row &)> &select = {},
              double budget_seconds = 0.0) {
  const auto &[m, r] = runs.get(name);
  if (m.status != "passed" && m.status != "failed")
    return {false, name + " " + m.status + ": " + m.error};
  std::size_t total = 0, failed = 0;
  std::string first_failure;
  for (const auto &row : r.checks) {
    if (!row.pass || (select && !select(row)))
      continue;
    ++total;
    if (!*row.pass) {
      ++failed;
      if (first_failure.empty()) {
        std::snprintf(buf, sizeof buf, "; first failure %s %s = %.4g (tol %.4g)",
                      row.probe_id.c_str(), row.param.c_str(), row.value, *row.tolerance);
        first_failure = buf;
      }
    }
  }
  std::snprintf(buf, sizeof buf, "%s: %zu/%zu checks, %.0f s", name.c_str(), total - failed,
                total, m.wall_clock_seconds);
  std::string detail = buf + first_failure;
  bool ok = total > 0 && failed == 0;
  if (budget_seconds > 0.0 && m.wall_clock_seconds > budget_seconds) {
    ok = false;
    detail += "; over the time budget";
  }
  return {ok, detail};
}

bool starts_with(const Row &r, const char *prefix) { return r.param.rfind(prefix, 0) == 0; }

Outcome unitarity() {
  auto g = make_grid(4096, 2048.0);
  auto psi = gaussian_packet(g, {0, 1, 10});
  StepperConfig cfg;
  cfg.dt = 0.02;
  cfg.monitor_support = false;
  const std::size_t steps = 1'000'000, chunk = 100'000;
  const PotentialSpec pot{PotentialKind::coulomb_reg, 0.5, 1.0, 0.5};
  double worst = 0.0;
  for (const SwitchingSpec sw : {SwitchingSpec{}, SwitchingSpec{1e-4, 5.0}}) {
    SplitStepPropagator prop(g, pot, sw, cfg);
    auto s = psi;
    double t = -0.5 * steps * cfg.dt;
    for (std::size_t done = 0; done < steps; done += chunk) {
      s = prop.propagate(s, t, t + chunk * cfg.dt);
      t += chunk * cfg.dt;
      worst = std::max(worst, std::abs(s.norm() - psi.norm()));
    }
  }
  // The momentum-diagonal families are exact phases.
  for (auto ref : {ReferenceKind::free, ReferenceKind::dollard, ReferenceKind::adiabatic_dollard})
    worst = std::max(worst, std::abs(reference_propagate(psi, 1e4, ref, 0.5, {}).norm() - psi.norm()));
  std::snprintf(buf, sizeof buf, "max norm drift %.3g over 1e6 steps (n=4096, static and switched)",
                worst);
  return {worst < 1e-10, buf};
}

struct Criterion {
  const char *name;
  std::function<Outcome(Runs &)> check;
};

} // namespace

int main(int argc, char **argv) {
  std::set<std::string> only(argv + 1, argv + argc);
  Runs runs(fs::current_path() / "acceptance_out");

  const std::vector<Criterion> criteria{
      {"unitarity", [](Runs &) { return unitarity(); }},
      {"oracle-equivalence", [](Runs &r) { return judge(r, "oracle-crosscheck"); }},
      {"dichotomy",
       [](Runs &r) {
         auto a = judge(r, "dollard-vs-free", {}, 1800.0);
         auto b = judge(r, "short-range-control", {}, 1800.0);
         return Outcome{a.pass && b.pass, a.detail + " | " + b.detail};
       }},
      {"asymptotic-dynamics", [](Runs &r) { return judge(r, "group-law"); }},
      {"interpolation", [](Runs &r) { return judge(r, "interpolation"); }},
      {"energy-identity", [](Runs &r) { return judge(r, "energy-identity"); }},
      {"asymptotic-observables", [](Runs &r) { return judge(r, "asymptotic-observables"); }},
      {"ir-factorization", [](Runs &r) { return judge(r, "adiabatic-ir", {}, 3600.0); }},
      {"switching-origin", [](Runs &r) { return judge(r, "switching-shift"); }},
      {"time-reversal",
       [](Runs &r) {
         return judge(r, "time-reversal", [](const Row &row) {
           return !starts_with(row, "elastic_unitarity");
         });
       }},
      {"elastic-unitarity",
       [](Runs &r) {
         return judge(r, "time-reversal",
                      [](const Row &row) { return starts_with(row, "elastic_unitarity"); });
       }},
  };

  int failures = 0;
  for (const auto &c : criteria) {
    if (!only.empty() && !only.contains(c.name))
      continue;
    Outcome o;
    try {
      o = c.check(runs);
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %-24s %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
