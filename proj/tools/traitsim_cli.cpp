// traitsim command line: generate | survey | bfi | simulate | analyze | report | pipeline

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "traitsim/traitsim.hpp"

namespace fs = std::filesystem;
using namespace traitsim;

namespace {

// Flag values as given; unset flags leave lower-precedence sources alone.
struct Flags {
  std::optional<std::string> backend, endpoint, model, api_key_env, out, catalog, config;
  std::optional<std::uint64_t> seed;
  std::optional<int> concurrency, replicates, repair_limit;
  std::optional<double> alpha;
  std::optional<std::size_t> max_requests, persona_limit;
  bool resume = false;
};

void add_run_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--backend", f.backend, "mock or http")->check(CLI::IsMember({"mock", "http"}));
  cmd->add_option("--endpoint", f.endpoint, "chat-completions URL for the http backend");
  cmd->add_option("--model", f.model, "model name sent to the http backend");
  cmd->add_option("--api-key-env", f.api_key_env, "environment variable holding the API key");
  cmd->add_option("--seed", f.seed, "mock backend seed");
  cmd->add_option("--concurrency", f.concurrency, "personas processed in parallel");
  cmd->add_option("--repair-limit", f.repair_limit, "re-asks allowed per malformed answer");
  cmd->add_option("--replicates", f.replicates, "independent runs per persona");
  cmd->add_option("--max-requests", f.max_requests, "cap on backend calls over the whole run, resumes included");
  cmd->add_option("--persona-limit", f.persona_limit, "stop after this many personas (0 = all)");
  cmd->add_option("--catalog", f.catalog, "company catalog CSV replacing the built-in one");
  cmd->add_flag("--resume", f.resume, "continue a run already present in --out");
}

void add_common_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--out", f.out, "run directory");
  cmd->add_option("--alpha", f.alpha, "significance level");
  cmd->add_option("--config", f.config, "JSON config file");
}

// Precedence: flags > environment > config file > defaults.
RunConfig resolve(const Flags& f) {
  RunConfig c;
  if (f.config) c.merge_file(*f.config);
  c.merge_env();
  if (f.backend) c.backend = *f.backend;
  if (f.endpoint) c.http.endpoint = *f.endpoint;
  if (f.model) c.http.model = *f.model;
  if (f.api_key_env) c.http.api_key_env = *f.api_key_env;
  if (f.seed) c.seed = *f.seed;
  if (f.concurrency) c.concurrency = *f.concurrency;
  if (f.repair_limit) c.repair_limit = *f.repair_limit;
  if (f.replicates) c.replicates = *f.replicates;
  if (f.max_requests) c.max_requests = *f.max_requests;
  if (f.persona_limit) c.persona_limit = *f.persona_limit;
  if (f.catalog) c.catalog_path = *f.catalog;
  if (f.out) c.out_dir = *f.out;
  if (f.alpha) c.alpha = *f.alpha;
  if (f.resume) c.resume = true;
  c.validate();
  return c;
}

int report_run(const RunSummary& s) {
  std::printf("run directory: %s\n", s.dir.string().c_str());
  std::printf("personas worked: %zu, backend requests: %zu\n", s.personas_worked, s.requests);
  for (const auto& f : s.failures) std::printf("  failed %s\n", f.c_str());
  for (const auto& e : s.analysis.errors) std::printf("  analysis %s\n", e.c_str());
  if (s.budget_exhausted) {
    std::printf("request cap reached; rerun with --resume to continue\n");
    return 3;
  }
  if (!s.complete) {
    std::printf("run incomplete; rerun with --resume to continue\n");
    return 2;
  }
  return 0;
}

int generate(const Flags& f) {
  RunConfig c = resolve(f);
  fs::create_directories(c.out_dir);
  std::string out = csv::format_row({"persona_id", "O", "C", "E", "A", "N"});
  for (const auto& p : generate_grid()) {
    csv::Row row{p.id()};
    for (Trait t : kAllTraits) row.push_back(std::to_string(p.encoded(t)));
    out += csv::format_row(row);
  }
  write_file(fs::path(c.out_dir) / "personas.csv", out);
  std::printf("wrote %zu personas to %s\n", kGridSize, (fs::path(c.out_dir) / "personas.csv").string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Big Five persona behavior workbench"};
  app.require_subcommand(1);
  Flags f;

  auto* gen = app.add_subcommand("generate", "write the 243-persona grid to personas.csv");
  auto* survey = app.add_subcommand("survey", "administer the behavioral survey");
  auto* bfi = app.add_subcommand("bfi", "administer the personality inventory");
  auto* simulate = app.add_subcommand("simulate", "run the investment simulation");
  auto* pipeline = app.add_subcommand("pipeline", "survey, inventory, simulation, analysis and report");
  auto* analyze = app.add_subcommand("analyze", "recompute regressions and sign reports from a run directory");
  auto* report = app.add_subcommand("report", "write and print the human-readable summary");

  for (auto* cmd : {gen, survey, bfi, simulate, pipeline, analyze, report}) add_common_flags(cmd, f);
  for (auto* cmd : {survey, bfi, simulate, pipeline}) add_run_flags(cmd, f);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return generate(f);

    if (analyze->parsed() || report->parsed()) {
      RunConfig c = resolve(f);
      const fs::path dir = c.out_dir;
      if (analyze->parsed()) {
        auto outcome = analyze_run(dir, c.alpha);
        if (fs::exists(dir / artifact::kCoefficients) && fs::exists(dir / artifact::kBehaviors)) {
          emit_plot_data(dir / artifact::kCoefficients, c.alpha);
        }
        for (const auto& e : outcome.errors) std::printf("%s\n", e.c_str());
        std::printf("analyzed %zu regressions in %s\n", outcome.reports.size(), dir.string().c_str());
        return 0;
      }
      write_report(dir, c.alpha);
      std::fputs(format_report(dir, c.alpha).c_str(), stdout);
      return 0;
    }

    RunConfig c = resolve(f);
    if (!pipeline->parsed()) {
      // A phase command adds its records to whatever the directory holds.
      c.resume = true;
      if (survey->parsed()) c.phases = {Phase::Survey};
      if (bfi->parsed()) c.phases = {Phase::Bfi};
      if (simulate->parsed()) c.phases = {Phase::Simulation};
    }
    return report_run(run_pipeline(c));
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 64;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
