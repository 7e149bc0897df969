#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "traitsim/behavior.hpp"
#include "traitsim/catalog.hpp"
#include "traitsim/csv.hpp"
#include "traitsim/embedded_data.hpp"
#include "traitsim/error.hpp"
#include "traitsim/expectations.hpp"
#include "traitsim/gateway.hpp"
#include "traitsim/invest_sim.hpp"
#include "traitsim/mock_policy.hpp"
#include "traitsim/persona.hpp"
#include "traitsim/run_config.hpp"
#include "traitsim/stats.hpp"
#include "traitsim/survey.hpp"
#include "traitsim/text.hpp"

namespace traitsim {

namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;

// Artifact names inside a run directory.
namespace artifact {
inline constexpr const char* kConfig = "config.json";
inline constexpr const char* kTranscripts = "transcripts.jsonl";
inline constexpr const char* kBehaviors = "behaviors.csv";
inline constexpr const char* kBfiScores = "bfi_scores.csv";
inline constexpr const char* kBfiSummary = "bfi_summary.csv";
inline constexpr const char* kBfiCorrelations = "bfi_correlations.csv";
inline constexpr const char* kCoefficients = "coefficients.csv";
inline constexpr const char* kSignReport = "signreport.csv";
inline constexpr const char* kSummary = "summary.txt";
inline constexpr const char* kPlotDir = "plots";
inline constexpr const char* kFixtureCoefficients = "fixture_coefficients.csv";
}  // namespace artifact

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw MissingArtifact("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& p, const std::string& content) {
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, p, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// Transcript log

inline std::string utc_timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Append-only JSONL writer; one record per line, flushed per record. A
// partial final line left by a crash is cut off before appending.
class TranscriptWriter {
 public:
  explicit TranscriptWriter(const fs::path& path) : path_(path) {
    truncate_partial_line(path);
    out_.open(path, std::ios::binary | std::ios::app);
    if (!out_) throw IoError("cannot open " + path.string());
  }

  void append(const nlohmann::json& record) {
    std::string line = record.dump() + "\n";
    std::lock_guard lock(mu_);
    out_ << line;
    out_.flush();
    if (!out_) throw IoError("write failed for " + path_.string());
  }

  static void truncate_partial_line(const fs::path& path) {
    if (!fs::exists(path)) return;
    std::string content = read_file(path);
    if (content.empty() || content.back() == '\n') return;
    auto last_nl = content.rfind('\n');
    fs::resize_file(path, last_nl == std::string::npos ? 0 : last_nl + 1);
  }

 private:
  fs::path path_;
  std::ofstream out_;
  std::mutex mu_;
};

// Every well-formed record of a transcript file; a torn final line is skipped.
inline std::vector<nlohmann::json> load_records(const fs::path& path) {
  std::vector<nlohmann::json> out;
  if (!fs::exists(path)) return out;
  std::string content = read_file(path);
  for (auto line : text::split_lines(content)) {
    if (text::trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) continue;
    out.push_back(std::move(j));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Work units

struct PersonaKey {
  PersonaProfile profile;
  int replicate = 0;

  // Plain persona id for single-replicate runs, "<id>#<n>" otherwise.
  std::string str(int replicates) const {
    return replicates > 1 ? profile.id() + "#" + std::to_string(replicate + 1) : profile.id();
  }

  static PersonaKey parse(std::string_view s) {
    PersonaKey k;
    auto hash = s.find('#');
    k.profile = PersonaProfile::from_id(s.substr(0, hash));
    if (hash != std::string_view::npos) k.replicate = static_cast<int>(text::parse_int(s.substr(hash + 1))) - 1;
    return k;
  }
};

inline std::vector<PersonaKey> work_keys(int replicates) {
  std::vector<PersonaKey> keys;
  for (const auto& p : generate_grid()) {
    for (int r = 0; r < replicates; ++r) keys.push_back({p, r});
  }
  return keys;
}

// Serialized form of a finished simulation, stored in its sim_final record.
inline nlohmann::json transcript_to_json(const SimulationTranscript& t) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : t.steps) {
    steps.push_back({{"company", s.action.company},
                     {"method", method_token(s.action.method)},
                     {"raw", s.raw}});
  }
  return {{"status", "ok"},
          {"invested", t.invested_company},
          {"forced", t.forced_decision},
          {"steps", steps}};
}

// Rebuilds snapshots by replaying the stored actions; throws InvalidAction
// if the stored record does not satisfy the transcript invariants.
inline SimulationTranscript transcript_from_json(const std::string& persona_id,
                                                 const nlohmann::json& j, const Catalog& catalog) {
  SimulationTranscript t;
  t.persona_id = persona_id;
  SimulationState state(catalog);
  for (const auto& s : j.at("steps")) {
    auto method = parse_method(s.at("method").get<std::string>());
    if (!method) throw InvalidAction("stored transcript has an unknown method");
    SimulationAction action{s.at("company").get<std::string>(), *method};
    t.steps.push_back({state, action, s.value("raw", "")});
    state = apply_action(state, action);
  }
  t.invested_company = j.at("invested").get<std::string>();
  t.forced_decision = j.at("forced").get<bool>();
  if (auto problem = verify_transcript(t, catalog); !problem.empty()) {
    throw InvalidAction("stored transcript for " + persona_id + " is inconsistent: " + problem);
  }
  return t;
}

enum class PhaseStatus { Missing, Ok, Failed };

struct PersonaRecords {
  PhaseStatus survey = PhaseStatus::Missing;
  PhaseStatus bfi = PhaseStatus::Missing;
  PhaseStatus sim = PhaseStatus::Missing;
  std::optional<SurveyResponse> survey_response;
  std::vector<int> bfi_answers;
  std::optional<SimulationTranscript> transcript;
};

inline bool has_flag(const nlohmann::json& rec, std::string_view flag) {
  if (!rec.contains("flags")) return false;
  for (const auto& f : rec["flags"]) {
    if (f.is_string() && f.get<std::string>() == flag) return true;
  }
  return false;
}

// Folds the transcript log into per-persona terminal outcomes. Only
// terminal records count: an accepted survey/bfi attempt, a failure marker,
// or a sim_final record.
inline std::map<std::string, PersonaRecords> fold_records(const std::vector<nlohmann::json>& records,
                                                          const Catalog& catalog) {
  std::map<std::string, PersonaRecords> out;
  for (const auto& rec : records) {
    const std::string key = rec.value("persona_id", "");
    const std::string phase = rec.value("phase", "");
    if (key.empty() || !has_flag(rec, "final")) continue;
    auto& pr = out[key];
    const bool failed = has_flag(rec, "failed");
    if (phase == "survey") {
      pr.survey = failed ? PhaseStatus::Failed : PhaseStatus::Ok;
      if (!failed) {
        SurveyResponse r;
        r.persona_id = key;
        auto answers = rec.at("parsed").at("answers");
        if (answers.size() != kSurveyQuestionCount) throw ParseError("stored survey record is malformed");
        for (std::size_t i = 0; i < kSurveyQuestionCount; ++i) r.answers[i] = answers[i].get<int>();
        pr.survey_response = r;
      }
    } else if (phase == "bfi") {
      pr.bfi = failed ? PhaseStatus::Failed : PhaseStatus::Ok;
      if (!failed) pr.bfi_answers = rec.at("parsed").at("answers").get<std::vector<int>>();
    } else if (phase == "sim_final") {
      pr.sim = failed ? PhaseStatus::Failed : PhaseStatus::Ok;
      if (!failed) pr.transcript = transcript_from_json(key, rec.at("parsed"), catalog);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Behaviors table

struct BehaviorRow {
  PersonaKey key;
  std::string persona_id;
  std::optional<SurveyResponse> survey;
  std::optional<SimMetrics> sim;
  std::optional<std::array<double, kTraitCount>> bfi_means;
  std::vector<std::string> flags;
};

inline std::vector<BehaviorRow> build_behavior_rows(const RunConfig& config, const Catalog& catalog,
                                                    const std::map<std::string, PersonaRecords>& folded) {
  std::vector<BehaviorRow> rows;
  for (const auto& key : work_keys(config.replicates)) {
    BehaviorRow row;
    row.key = key;
    row.persona_id = key.str(config.replicates);
    auto it = folded.find(row.persona_id);
    PersonaRecords pr = it == folded.end() ? PersonaRecords{} : it->second;
    auto flag_phase = [&](PhaseStatus st, std::string_view name) {
      if (st == PhaseStatus::Failed) row.flags.push_back(std::string(name) + "_failed");
      else if (st == PhaseStatus::Missing) row.flags.push_back(std::string(name) + "_missing");
    };
    flag_phase(pr.survey, "survey");
    flag_phase(pr.bfi, "bfi");
    flag_phase(pr.sim, "sim");
    row.survey = pr.survey_response;
    if (pr.transcript) {
      row.sim = sim_behaviors(*pr.transcript, catalog);
      if (row.sim->total_research == 0) row.flags.push_back("no_research");
    }
    if (pr.bfi == PhaseStatus::Ok) row.bfi_means = score_bfi(pr.bfi_answers, default_bfi_inventory());
    rows.push_back(std::move(row));
  }
  return rows;
}

inline const std::vector<std::string>& behaviors_header() {
  static const std::vector<std::string> h = {
      "persona_id", "O", "C", "E", "A", "N",
      "q1", "q2", "q3", "q4", "q5", "q6", "q7", "q8", "q9",
      "survey_independent", "survey_impulsivity", "survey_risk", "survey_env_interest",
      "sim_total_research", "sim_independent_share", "sim_impulsivity", "sim_risk_factor",
      "sim_risky_flag", "sim_env_interest", "sim_env_invest", "flags", "schema_version"};
  return h;
}

inline std::string format_behaviors_csv(const std::vector<BehaviorRow>& rows) {
  auto fmt = [](std::optional<double> v) { return v ? text::format_double(*v) : std::string(); };
  std::string out = csv::format_row(behaviors_header());
  for (const auto& r : rows) {
    csv::Row cells{r.persona_id};
    for (Trait t : kAllTraits) cells.push_back(std::to_string(r.key.profile.encoded(t)));
    for (std::size_t q = 0; q < kSurveyQuestionCount; ++q) {
      cells.push_back(r.survey ? std::to_string(r.survey->answers[q]) : "");
    }
    if (r.survey) {
      auto b = survey_behaviors(*r.survey);
      cells.push_back(fmt(b.independent_learning));
      cells.push_back(fmt(b.impulsivity));
      cells.push_back(fmt(b.risk_appetite));
      cells.push_back(fmt(b.env_interest));
    } else {
      cells.insert(cells.end(), 4, "");
    }
    if (r.sim) {
      const auto& b = r.sim->behaviors;
      cells.push_back(std::to_string(r.sim->total_research));
      cells.push_back(fmt(b.independent_learning));
      cells.push_back(fmt(b.impulsivity));
      cells.push_back(fmt(b.risk_appetite));
      cells.push_back(r.sim->risky_investment ? "1" : "0");
      cells.push_back(fmt(b.env_interest));
      cells.push_back(fmt(b.env_investment));
    } else {
      cells.insert(cells.end(), 7, "");
    }
    cells.push_back(text::join(r.flags, ";"));
    cells.push_back(std::to_string(kSchemaVersion));
    out += csv::format_row(cells);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Inventory summaries

struct HumanNorm {
  double mean = 0.0, sd = 0.0;
};

inline std::array<HumanNorm, kTraitCount> human_bfi_norms() {
  auto table = csv::Table::from_string(embedded::kHumanBfiNorms);
  std::array<HumanNorm, kTraitCount> out{};
  for (std::size_t r = 0; r < table.size(); ++r) {
    Trait t = parse_trait_symbol(table.at(r, "trait"));
    out[index_of(t)] = {text::parse_double(table.at(r, "mean")), text::parse_double(table.at(r, "sd"))};
  }
  return out;
}

struct BfiSummary {
  std::array<double, kTraitCount> mean{};
  std::array<double, kTraitCount> sd{};
  std::size_t n = 0;
  std::optional<stats::TraitMatrix> correlations;
};

inline BfiSummary summarize_bfi(const std::vector<std::array<double, kTraitCount>>& scores) {
  BfiSummary s;
  s.n = scores.size();
  for (std::size_t t = 0; t < kTraitCount; ++t) {
    std::vector<double> col;
    for (const auto& sc : scores) col.push_back(sc[t]);
    s.mean[t] = col.empty() ? std::nan("") : stats::mean(col);
    s.sd[t] = col.size() < 2 ? std::nan("") : stats::sample_sd(col);
  }
  try {
    if (scores.size() >= 2) s.correlations = stats::pearson_matrix(scores);
  } catch (const DegenerateColumn&) {
  }
  return s;
}

// Trait table with human population and model columns side by side.
inline std::string format_bfi_summary_csv(const BfiSummary& s) {
  auto human = human_bfi_norms();
  std::string out = csv::format_row({"trait", "human_mean", "human_sd", "model_mean", "model_sd", "n"});
  for (Trait t : kAllTraits) {
    auto i = index_of(t);
    out += csv::format_row({std::string(trait_name(t)), text::format_double(human[i].mean),
                            text::format_double(human[i].sd), text::format_double(s.mean[i]),
                            text::format_double(s.sd[i]), std::to_string(s.n)});
  }
  return out;
}

inline std::string format_bfi_correlations_csv(const BfiSummary& s) {
  csv::Row header{"trait"};
  for (Trait t : kAllTraits) header.push_back(std::string(trait_name(t)));
  std::string out = csv::format_row(header);
  for (Trait a : kAllTraits) {
    csv::Row row{std::string(trait_name(a))};
    for (Trait b : kAllTraits) {
      row.push_back(s.correlations ? text::format_double((*s.correlations)[index_of(a)][index_of(b)]) : "");
    }
    out += csv::format_row(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Analysis

// One regression: a behaviors.csv column and the expectation row it is judged
// against.
struct RegressionSpec {
  std::string name;
  std::string column;
  Behavior expectation;
};

inline const std::vector<RegressionSpec>& regression_specs() {
  static const std::vector<RegressionSpec> specs = {
      {"survey.independent_learning", "survey_independent", Behavior::IndependentLearning},
      {"survey.impulsivity", "survey_impulsivity", Behavior::Impulsivity},
      {"survey.risk_appetite", "survey_risk", Behavior::RiskAppetite},
      {"survey.env_interest", "survey_env_interest", Behavior::EnvInterest},
      {"sim.independent_learning", "sim_independent_share", Behavior::IndependentLearning},
      {"sim.impulsivity", "sim_impulsivity", Behavior::Impulsivity},
      {"sim.risk_appetite", "sim_risk_factor", Behavior::RiskAppetite},
      {"sim.risky_flag", "sim_risky_flag", Behavior::RiskAppetite},
      {"sim.env_interest", "sim_env_interest", Behavior::EnvInterest},
      {"sim.env_investment", "sim_env_invest", Behavior::EnvInvestment},
  };
  return specs;
}

struct AnalysisOutcome {
  std::vector<stats::RegressionResult> regressions;
  std::vector<SignReport> reports;
  std::vector<std::string> errors;  // "<behavior>: <reason>" for regressions that could not be fit
};

inline const std::vector<std::string>& coefficients_header() {
  static const std::vector<std::string> h = {"behavior", "trait", "beta_std", "beta_raw", "stderr", "t",
                                             "p", "expected_sign", "verdict", "n_used", "schema_version"};
  return h;
}

inline const std::vector<std::string>& signreport_header() {
  static const std::vector<std::string> h = {"behavior", "trait", "observed_sign", "expected_sign",
                                             "significant", "verdict"};
  return h;
}

inline std::string format_signreport_rows(const SignReport& rep) {
  std::string out;
  for (const auto& c : rep.cells) {
    out += csv::format_row({rep.behavior, std::string(trait_symbol(c.trait)), c.observed_sign,
                            std::string(sign_token(c.expected)), c.significant,
                            std::string(verdict_name(c.verdict))});
  }
  return out;
}

// Recomputes every regression and sign report from the persisted artifacts
// of `dir`. A directory holding only published coefficients
// (fixture_coefficients.csv) gets a sign-level report without regressions.
inline AnalysisOutcome analyze_run(const fs::path& dir, double alpha = 0.05,
                                   const ExpectedSignTable& expected = default_expected_signs()) {
  AnalysisOutcome outcome;
  const fs::path behaviors = dir / artifact::kBehaviors;
  std::string coeffs = csv::format_row(coefficients_header());
  std::string signs = csv::format_row(signreport_header());

  if (!fs::exists(behaviors)) {
    const fs::path fixture = dir / artifact::kFixtureCoefficients;
    if (!fs::exists(fixture)) {
      throw MissingArtifact("no " + std::string(artifact::kBehaviors) + " or " +
                            artifact::kFixtureCoefficients + " in " + dir.string());
    }
    for (auto& [b, res] : parse_coefficient_fixture(read_file(fixture))) {
      auto rep = compare_signs(res, b, expected, alpha);
      signs += format_signreport_rows(rep);
      outcome.reports.push_back(std::move(rep));
      outcome.regressions.push_back(std::move(res));
    }
    write_file(dir / artifact::kSignReport, signs);
    return outcome;
  }

  auto table = csv::Table::from_file(behaviors.string());
  std::vector<PersonaProfile> personas;
  for (std::size_t r = 0; r < table.size(); ++r) {
    personas.push_back(PersonaKey::parse(table.at(r, "persona_id")).profile);
  }
  for (const auto& spec : regression_specs()) {
    std::vector<std::optional<double>> y;
    for (std::size_t r = 0; r < table.size(); ++r) {
      const auto& cell = table.at(r, spec.column);
      y.push_back(cell.empty() ? std::nullopt : std::optional<double>(text::parse_double(cell)));
    }
    try {
      auto res = stats::regress_behavior(spec.name, personas, y);
      auto rep = compare_signs(res, spec.expectation, expected, alpha);
      for (Trait t : kAllTraits) {
        const auto& c = res[t];
        coeffs += csv::format_row({spec.name, std::string(trait_symbol(t)), text::format_double(c.beta),
                                   text::format_double(c.beta_raw), text::format_double(c.std_error),
                                   text::format_double(c.t), text::format_double(c.p),
                                   std::string(sign_token(rep[t].expected)),
                                   std::string(verdict_name(rep[t].verdict)), std::to_string(res.n_used),
                                   std::to_string(kSchemaVersion)});
      }
      signs += format_signreport_rows(rep);
      outcome.regressions.push_back(std::move(res));
      outcome.reports.push_back(std::move(rep));
    } catch (const InsufficientData& e) {
      outcome.errors.push_back(spec.name + ": InsufficientData: " + e.what());
    } catch (const RankDeficient& e) {
      outcome.errors.push_back(spec.name + ": RankDeficient: " + e.what());
    }
  }
  write_file(dir / artifact::kCoefficients, coeffs);
  write_file(dir / artifact::kSignReport, signs);
  return outcome;
}

// One bar-chart data file per regression in coefficients.csv: trait,
// standardized coefficient and a significance marker (p < alpha).
inline std::vector<fs::path> emit_plot_data(const fs::path& coefficients_csv, double alpha = 0.05) {
  if (!fs::exists(coefficients_csv)) throw MissingArtifact("missing " + coefficients_csv.string());
  auto table = csv::Table::from_file(coefficients_csv.string());
  std::map<std::string, std::map<Trait, std::pair<double, double>>> by_behavior;
  std::vector<std::string> order;
  for (std::size_t r = 0; r < table.size(); ++r) {
    const auto& b = table.at(r, "behavior");
    if (!by_behavior.count(b)) order.push_back(b);
    by_behavior[b][parse_trait_symbol(table.at(r, "trait"))] = {text::parse_double(table.at(r, "beta_std")),
                                                                text::parse_double(table.at(r, "p"))};
  }
  const fs::path dir = coefficients_csv.parent_path() / artifact::kPlotDir;
  fs::create_directories(dir);
  std::vector<fs::path> written;
  for (const auto& b : order) {
    std::string out = csv::format_row({"trait", "beta_std", "significant"});
    for (Trait t : kAllTraits) {
      auto it = by_behavior[b].find(t);
      if (it == by_behavior[b].end()) throw ParseError("coefficients for " + b + " lack a trait row");
      out += csv::format_row({std::string(trait_symbol(t)), text::format_double(it->second.first),
                              it->second.second < alpha ? "1" : "0"});
    }
    fs::path p = dir / (b + ".csv");
    write_file(p, out);
    written.push_back(p);
  }
  return written;
}

// ---------------------------------------------------------------------------
// Human-readable report

inline std::string format_report(const fs::path& dir, double alpha) {
  std::ostringstream os;
  os << "Run directory: " << dir.string() << "\n\n";
  const fs::path behaviors = dir / artifact::kBehaviors;
  if (fs::exists(behaviors)) {
    auto table = csv::Table::from_file(behaviors.string());
    std::map<std::string, int> flag_counts;
    for (std::size_t r = 0; r < table.size(); ++r) {
      const auto& flags = table.at(r, "flags");
      std::size_t start = 0;
      while (start < flags.size()) {
        auto semi = flags.find(';', start);
        flag_counts[flags.substr(start, semi == std::string::npos ? std::string::npos : semi - start)]++;
        if (semi == std::string::npos) break;
        start = semi + 1;
      }
    }
    os << "Personas: " << table.size() << "\n";
    for (const auto& [f, n] : flag_counts) os << "  flagged " << f << ": " << n << "\n";
    os << "\n";
  }

  const fs::path summary = dir / artifact::kBfiSummary;
  if (fs::exists(summary)) {
    auto t = csv::Table::from_file(summary.string());
    char line[160];
    os << "Means and standard deviations of personality traits\n";
    std::snprintf(line, sizeof line, "%-24s %17s %17s\n", "", "Human Population", "Model Results");
    os << line;
    std::snprintf(line, sizeof line, "%-24s %8s %8s %8s %8s\n", "Trait", "Mean", "SD", "Mean", "SD");
    os << line;
    for (std::size_t r = 0; r < t.size(); ++r) {
      auto num = [&](const char* col) {
        double v = text::parse_double(t.at(r, col));
        return v;
      };
      std::snprintf(line, sizeof line, "%-24s %8.2f %8.2f %8.2f %8.2f\n", t.at(r, "trait").c_str(),
                    num("human_mean"), num("human_sd"), num("model_mean"), num("model_sd"));
      os << line;
    }
    os << "\n";
  }

  const fs::path corr = dir / artifact::kBfiCorrelations;
  if (fs::exists(corr)) {
    auto t = csv::Table::from_file(corr.string());
    os << "Inter-trait correlations\n";
    char line[200];
    std::snprintf(line, sizeof line, "%-24s", "");
    os << line;
    for (Trait tr : kAllTraits) {
      std::snprintf(line, sizeof line, " %9s", std::string(trait_symbol(tr)).c_str());
      os << line;
    }
    os << "\n";
    for (std::size_t r = 0; r < t.size(); ++r) {
      std::snprintf(line, sizeof line, "%-24s", t.rows()[r][0].c_str());
      os << line;
      for (std::size_t c = 1; c < t.header().size(); ++c) {
        if (c - 1 < r || t.rows()[r][c].empty()) {
          os << std::string(10, ' ');
          continue;
        }
        std::snprintf(line, sizeof line, " %9.4f", text::parse_double(t.rows()[r][c]));
        os << line;
      }
      os << "\n";
    }
    os << "\n";
  }

  const fs::path signs = dir / artifact::kSignReport;
  if (fs::exists(signs)) {
    auto t = csv::Table::from_file(signs.string());
    std::map<std::string, std::map<std::string, int>> tally;
    std::vector<std::string> order;
    for (std::size_t r = 0; r < t.size(); ++r) {
      const auto& b = t.at(r, "behavior");
      if (!tally.count(b)) order.push_back(b);
      tally[b][t.at(r, "verdict")]++;
    }
    os << "Sign agreement with human-research expectations (alpha = " << text::format_double(alpha) << ")\n";
    for (const auto& b : order) {
      char line[200];
      std::snprintf(line, sizeof line, "  %-30s match %d  mismatch %d  not significant %d  no benchmark %d\n",
                    b.c_str(), tally[b]["Match"], tally[b]["Mismatch"], tally[b]["NotSignificant"],
                    tally[b]["NoBenchmark"]);
      os << line;
    }
  }
  return os.str();
}

inline void write_report(const fs::path& dir, double alpha) {
  write_file(dir / artifact::kSummary, format_report(dir, alpha));
}

// ---------------------------------------------------------------------------
// Orchestration

struct RunSummary {
  fs::path dir;
  std::size_t personas_worked = 0;   // personas with at least one phase run in this invocation
  std::size_t requests = 0;          // backend calls made in this invocation
  std::vector<std::string> failures; // "<persona>: <phase>: <reason>" for this invocation
  bool budget_exhausted = false;
  bool complete = false;             // every selected phase has a terminal record for every persona
  AnalysisOutcome analysis;
};

// Produces the backend for one replicate. Replicates of a mock run use
// distinct derived seeds.
using BackendFactory = std::function<std::shared_ptr<ChatBackend>(int replicate)>;

inline BackendFactory default_backend_factory(const RunConfig& config) {
  return [config](int replicate) {
    if (config.backend == "mock") {
      std::uint64_t seed = replicate == 0 ? config.seed
                                          : mock::derive_seed(config.seed, "replicate", std::to_string(replicate));
      return make_backend(MockPolicyConfig{seed});
    }
    return make_backend(config.http);
  };
}

// Rebuilds every derived artifact from transcripts.jsonl alone.
inline AnalysisOutcome rebuild_artifacts(const RunConfig& config, const Catalog& catalog) {
  const fs::path dir = config.out_dir;
  auto folded = fold_records(load_records(dir / artifact::kTranscripts), catalog);
  auto rows = build_behavior_rows(config, catalog, folded);
  write_file(dir / artifact::kBehaviors, format_behaviors_csv(rows));

  std::vector<std::array<double, kTraitCount>> scores;
  std::string bfi_csv = csv::format_row({"persona_id", "O", "C", "E", "A", "N"});
  for (const auto& r : rows) {
    if (!r.bfi_means) continue;
    scores.push_back(*r.bfi_means);
    csv::Row row{r.persona_id};
    for (double m : *r.bfi_means) row.push_back(text::format_double(m));
    bfi_csv += csv::format_row(row);
  }
  write_file(dir / artifact::kBfiScores, bfi_csv);
  auto summary = summarize_bfi(scores);
  write_file(dir / artifact::kBfiSummary, format_bfi_summary_csv(summary));
  write_file(dir / artifact::kBfiCorrelations, format_bfi_correlations_csv(summary));

  auto outcome = analyze_run(dir, config.alpha);
  emit_plot_data(dir / artifact::kCoefficients, config.alpha);
  write_report(dir, config.alpha);
  return outcome;
}

inline Catalog resolve_catalog(const RunConfig& config) {
  return config.catalog_path.empty() ? default_catalog() : load_catalog(config.catalog_path);
}

inline RunSummary run_pipeline(const RunConfig& config, BackendFactory factory = {}) {
  config.validate();
  const Catalog catalog = resolve_catalog(config);
  const fs::path dir = config.out_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  const fs::path config_path = dir / artifact::kConfig;
  const fs::path transcripts = dir / artifact::kTranscripts;
  const bool has_records = fs::exists(transcripts) && fs::file_size(transcripts) > 0;
  if (has_records) {
    if (!config.resume) {
      throw ConfigError(dir.string() + " already holds a run; pass --resume to continue it");
    }
    if (fs::exists(config_path)) {
      auto previous = nlohmann::json::parse(read_file(config_path), nullptr, false);
      if (previous.is_discarded() || !previous.contains("identity") ||
          previous["identity"] != config.identity()) {
        throw ConfigError("configuration differs from the run stored in " + dir.string());
      }
    }
  }
  nlohmann::json snapshot = config.to_json();
  snapshot["identity"] = config.identity();
  snapshot["run_id"] = config.run_id();
  write_file(config_path, snapshot.dump(2) + "\n");

  if (!factory) factory = default_backend_factory(config);
  const auto existing = load_records(transcripts);
  // The cap covers the whole run: every recorded attempt was one request.
  std::size_t prior_requests = 0;
  for (const auto& rec : existing) prior_requests += rec.value("attempt", 0) >= 1;
  auto budget = std::make_shared<RequestBudget>(config.max_requests, prior_requests);
  std::vector<std::shared_ptr<ChatBackend>> backends;
  for (int r = 0; r < config.replicates; ++r) {
    backends.push_back(std::make_shared<BudgetedBackend>(factory(r), budget));
  }

  auto folded = fold_records(existing, catalog);
  TranscriptWriter writer(transcripts);
  const std::string run_id = config.run_id();
  AskOptions opts;
  opts.repair_limit = config.repair_limit;
  opts.temperature = config.http.temperature;
  opts.max_output_tokens = config.http.max_output_tokens;

  struct Job {
    PersonaKey key;
    std::string id;
    bool survey, bfi, sim;
  };
  std::vector<Job> jobs;
  for (const auto& key : work_keys(config.replicates)) {
    Job job{key, key.str(config.replicates), false, false, false};
    auto it = folded.find(job.id);
    auto missing = [&](PhaseStatus PersonaRecords::*field) {
      return it == folded.end() || it->second.*field == PhaseStatus::Missing;
    };
    job.survey = config.phases.count(Phase::Survey) && missing(&PersonaRecords::survey);
    job.bfi = config.phases.count(Phase::Bfi) && missing(&PersonaRecords::bfi);
    job.sim = config.phases.count(Phase::Simulation) && missing(&PersonaRecords::sim);
    if (job.survey || job.bfi || job.sim) jobs.push_back(std::move(job));
  }
  if (config.persona_limit > 0 && jobs.size() > config.persona_limit) jobs.resize(config.persona_limit);

  RunSummary summary;
  summary.dir = dir;
  std::mutex summary_mu;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};

  auto record = [&](const std::string& id, const std::string& phase, int step, int attempt,
                    const std::string& prompt, const std::string& raw, const nlohmann::json& parsed,
                    std::vector<std::string> flags) {
    writer.append({{"schema_version", kSchemaVersion},
                   {"run_id", run_id},
                   {"persona_id", id},
                   {"phase", phase},
                   {"step", step},
                   {"attempt", attempt},
                   {"prompt", prompt},
                   {"raw_response", raw},
                   {"parsed", parsed},
                   {"flags", flags},
                   {"timestamp", utc_timestamp()}});
  };
  auto observer_for = [&](const std::string& id) {
    return [&, id](const AttemptLog& log) {
      std::vector<std::string> flags;
      if (log.error.empty()) {
        flags.push_back("accepted");
        // Survey and inventory attempts are terminal once accepted; a
        // simulation is terminal only at its sim_final record.
        if (log.phase != "sim_step") flags.push_back("final");
      } else {
        flags.push_back("rejected");
      }
      nlohmann::json parsed = log.parsed;
      if (!log.error.empty()) parsed = {{"error", log.error}, {"payload", log.parsed}};
      record(id, log.phase, log.step, log.attempt, log.prompt, log.raw, parsed, flags);
    };
  };
  auto fail = [&](const std::string& id, const std::string& phase, const std::string& why) {
    std::lock_guard lock(summary_mu);
    summary.failures.push_back(id + ": " + phase + ": " + why);
  };

  auto worker = [&] {
    while (!stop.load()) {
      std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const Job& job = jobs[i];
      ChatBackend& backend = *backends[static_cast<std::size_t>(job.key.replicate)];
      auto observer = observer_for(job.id);
      {
        std::lock_guard lock(summary_mu);
        ++summary.personas_worked;
      }
      try {
        if (job.survey) {
          try {
            run_survey(job.key.profile, backend, opts, observer);
          } catch (const MalformedAnswer& e) {
            record(job.id, "survey", 0, 0, "", "", {{"error", e.what()}}, {"failed", "final"});
            fail(job.id, "survey", e.what());
          }
        }
        if (job.bfi) {
          try {
            run_bfi(job.key.profile, backend, opts, observer);
          } catch (const MalformedAnswer& e) {
            record(job.id, "bfi", 0, 0, "", "", {{"error", e.what()}}, {"failed", "final"});
            fail(job.id, "bfi", e.what());
          }
        }
        if (job.sim) {
          try {
            auto t = run_simulation(job.key.profile, backend, catalog, opts, observer);
            record(job.id, "sim_final", static_cast<int>(t.steps.size()), 0, "", "", transcript_to_json(t),
                   {"final"});
          } catch (const MalformedAction& e) {
            record(job.id, "sim_final", 0, 0, "", "", {{"status", "failed"}, {"error", e.what()}},
                   {"failed", "final"});
            fail(job.id, "sim", e.what());
          }
        }
      } catch (const BudgetExceeded& e) {
        stop.store(true);
        std::lock_guard lock(summary_mu);
        summary.budget_exhausted = true;
        summary.failures.push_back(job.id + ": budget: " + e.what());
      } catch (const Error& e) {
        // Transport, credential and protocol errors leave the phase without a
        // terminal record, so a resumed run retries it.
        fail(job.id, "backend", e.what());
      }
    }
  };

  {
    const int n_threads = std::max(1, std::min<int>(config.concurrency, static_cast<int>(jobs.size())));
    std::vector<std::jthread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  summary.requests = budget->used() - prior_requests;

  summary.analysis = rebuild_artifacts(config, catalog);
  auto final_state = fold_records(load_records(transcripts), catalog);
  summary.complete = true;
  for (const auto& key : work_keys(config.replicates)) {
    auto it = final_state.find(key.str(config.replicates));
    auto done = [&](PhaseStatus PersonaRecords::*f) {
      return it != final_state.end() && it->second.*f != PhaseStatus::Missing;
    };
    if ((config.phases.count(Phase::Survey) && !done(&PersonaRecords::survey)) ||
        (config.phases.count(Phase::Bfi) && !done(&PersonaRecords::bfi)) ||
        (config.phases.count(Phase::Simulation) && !done(&PersonaRecords::sim))) {
      summary.complete = false;
      break;
    }
  }
  return summary;
}

// Loads the configuration snapshot stored in a run directory.
inline RunConfig load_run_config(const fs::path& dir) {
  RunConfig config;
  auto j = nlohmann::json::parse(read_file(dir / artifact::kConfig), nullptr, false);
  if (j.is_discarded()) throw ConfigError("unreadable config snapshot in " + dir.string());
  config.merge_json(j);
  config.out_dir = dir.string();
  return config;
}

}  // namespace traitsim
