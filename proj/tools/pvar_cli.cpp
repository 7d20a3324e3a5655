// Command-line front end: dataset validation, PVar estimation, prompt selection,
// preference-pair construction, toy DPO training and bound sweeps.
//
// Exit codes: 0 success, 1 data error, 2 usage error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pvar/pvar.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string input;
  std::string output;
  std::string manifest;
  std::string strategy = "pvar_top";
  double fraction = 0.5;
  std::uint64_t seed = 0;
  double beta = 1.0;
  double lr = 0.1;
  std::size_t steps = 200;
  std::size_t vocab = 8;
  std::size_t horizon = 1;
  std::size_t prompts = 40;
  std::size_t sweep = 1000;
  int theorem = 1;
};

pvar::io::IngestResult load(const std::string& path) {
  auto result = pvar::io::ingest(path);
  for (const auto& v : result.violations) {
    std::cerr << path << ":" << v.line << ": " << v.message << "\n";
  }
  return result;
}

void require_fraction(double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw UsageError("--fraction must lie in (0, 1]");
}

void report_skips(const std::vector<pvar::SkippedPrompt>& skipped) {
  for (const auto& s : skipped) {
    std::cerr << "skipped prompt '" << s.prompt_id << "' (record " << s.index + 1 << "): " << s.reason << "\n";
  }
}

int cmd_validate(const Options& o) {
  const auto data = load(o.input);
  std::size_t bad = data.violations.size();
  for (const auto& rec : data.records) {
    const auto check = pvar::validate_record(rec);
    for (const auto& v : check.violations) {
      std::cout << rec.prompt_id << ": " << v << "\n";
      ++bad;
    }
  }
  for (const auto& id : pvar::duplicate_prompt_ids(data.records)) {
    std::cout << id << ": duplicate prompt_id\n";
    ++bad;
  }
  std::cout << data.records.size() << " records, " << bad << " violations\n";
  return bad == 0 ? kExitOk : kExitData;
}

int cmd_estimate(const Options& o) {
  const auto data = load(o.input);
  const auto batch = pvar::batch_estimate(data.records);
  report_skips(batch.skipped);
  if (batch.estimates.empty()) {
    std::cerr << "no eligible prompts\n";
    return kExitData;
  }
  pvar::io::write_text(pvar::io::render_estimates(batch.estimates), o.output);
  std::cout << batch.estimates.size() << " estimates written to " << o.output << "\n";
  return kExitOk;
}

int cmd_select(const Options& o) {
  const auto kind = pvar::parse_strategy(o.strategy);
  if (!kind) throw UsageError("unknown strategy '" + o.strategy + "'");
  require_fraction(o.fraction);
  const auto data = load(o.input);

  std::vector<pvar::ScoredPrompt> scores;
  if (*kind == pvar::StrategyKind::kRewardGapTop) {
    for (const auto& rec : data.records) {
      if (!pvar::validate_record(rec).ok()) continue;
      scores.push_back({rec.prompt_id, pvar::reward_gap(rec)});
    }
  } else {
    const auto batch = pvar::batch_estimate(data.records);
    report_skips(batch.skipped);
    scores = pvar::synthetic::pvar_scores(batch.estimates);
  }
  if (scores.empty()) {
    std::cerr << "no eligible prompts\n";
    return kExitData;
  }
  const auto manifest = pvar::select(scores, {*kind, o.fraction, o.seed}, scores.size());
  pvar::io::emit_manifest(manifest, o.output);
  std::cout << manifest.selected.size() << " of " << scores.size() << " prompts selected ("
            << pvar::to_string(*kind) << ") -> " << o.output << "\n";
  return kExitOk;
}

int cmd_pair(const Options& o) {
  const auto data = load(o.input);
  std::set<std::string> keep;
  if (!o.manifest.empty()) {
    for (auto& id : pvar::io::read_manifest(o.manifest).selected_ids()) keep.insert(std::move(id));
  }
  std::vector<pvar::PreferencePair> pairs;
  for (const auto& rec : data.records) {
    if (!keep.empty() && !keep.contains(rec.prompt_id)) continue;
    if (const auto check = pvar::validate_record(rec); !check.ok()) {
      std::cerr << "skipped prompt '" << rec.prompt_id << "': " << check.violations.front() << "\n";
      continue;
    }
    try {
      pairs.push_back(pvar::build_preference_pair(rec));
    } catch (const pvar::DegeneratePairError& e) {
      std::cerr << "skipped: " << e.what() << "\n";
    }
  }
  if (pairs.empty()) {
    std::cerr << "no preference pairs could be built\n";
    return kExitData;
  }
  pvar::io::write_pairs(pairs, o.output);
  std::cout << pairs.size() << " pairs written to " << o.output << "\n";
  return kExitOk;
}

int cmd_train_toy(const Options& o) {
  const auto kind = pvar::parse_strategy(o.strategy);
  if (!kind) throw UsageError("unknown strategy '" + o.strategy + "'");
  require_fraction(o.fraction);
  pvar::synthetic::ToyDatasetConfig dcfg;
  dcfg.prompts = o.prompts;
  dcfg.vocab = o.vocab;
  dcfg.horizon = o.horizon;
  dcfg.seed = o.seed;
  const auto ds = pvar::synthetic::make_toy_dataset(dcfg);

  std::vector<pvar::ScoredPrompt> scores;
  if (*kind == pvar::StrategyKind::kRewardGapTop) {
    for (const auto& rec : ds.records) scores.push_back({rec.prompt_id, pvar::reward_gap(rec)});
  } else {
    scores = pvar::synthetic::pvar_scores(pvar::batch_estimate(ds.records).estimates);
  }
  const auto manifest = pvar::select(scores, {*kind, o.fraction, o.seed}, scores.size());
  const auto ids = manifest.selected_ids();
  const auto pairs = pvar::synthetic::pairs_for(ds, ids);

  const pvar::DpoConfig cfg{o.beta, o.lr, o.steps, o.seed};
  const auto [policy, trace] = pvar::train(ds.ref, ds.ref, pairs, cfg);
  std::cout << "prompts " << ids.size() << ", pairs " << pairs.size() << ", final loss "
            << pvar::dpo_loss(policy, ds.ref, pairs, o.beta) << ", final margin "
            << pvar::mean_margin(policy, ds.ref, pairs, o.beta) << "\n";
  if (!o.output.empty() && trace.size() > 0) pvar::io::emit_report(trace, o.output);
  return kExitOk;
}

int cmd_verify_bounds(const Options& o) {
  if (o.vocab < 2 || o.vocab > 5 || o.horizon < 1 || o.horizon > 3) {
    throw UsageError("verify-bounds expects --vocab in [2, 5] and --horizon in [1, 3]");
  }
  if (o.theorem != 1 && o.theorem != 2) throw UsageError("--theorem must be 1 or 2");
  std::vector<pvar::io::BoundSweepRow> rows;
  std::size_t failures = 0;
  for (std::size_t i = 0; i < o.sweep; ++i) {
    const std::uint64_t seed = o.seed + i;
    pvar::BoundCheck c;
    if (o.theorem == 1) {
      const auto inst = pvar::synthetic::make_policy_instance(seed, o.vocab, o.horizon);
      c = pvar::theorem1_check(inst.policy, inst.ref, inst.context, inst.beta);
    } else {
      const auto inst = pvar::synthetic::make_offline_instance(seed, o.steps, o.vocab, o.horizon);
      c = pvar::theorem2_check(inst.theta, inst.theta0, inst.reward_phi, inst.reward_star, inst.ref, inst.context,
                               inst.beta);
    }
    const bool ok = c.holds && c.intermediate_holds;
    failures += ok ? 0 : 1;
    rows.push_back({seed, c.grad_norm, c.pvar, c.bound_value, c.slack, ok});
  }
  if (!o.output.empty() && !rows.empty()) pvar::io::emit_report(rows, o.output);
  std::cout << rows.size() - failures << "/" << rows.size() << " instances satisfy the bound\n";
  return failures == 0 ? kExitOk : kExitData;
}

int cmd_report(const Options& o) {
  const auto data = load(o.input);
  const auto batch = pvar::batch_estimate(data.records);
  report_skips(batch.skipped);
  std::vector<double> values;
  for (const auto& e : batch.estimates) values.push_back(e.pvar);
  if (values.empty()) {
    std::cerr << "no eligible prompts\n";
    return kExitData;
  }
  pvar::io::emit_report(values, o.output);
  std::cout << "histogram of " << values.size() << " estimates written to " << o.output << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preference-variance data selection toolkit"};
  app.require_subcommand(1);
  Options o;

  auto input = [&](CLI::App* sub) {
    sub->add_option("--input", o.input, "JSONL dataset")->required()->check(CLI::ExistingFile);
  };
  auto output = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("--output", o.output, "output path");
    if (required) opt->required();
  };

  auto* validate = app.add_subcommand("validate", "check a JSONL dataset");
  input(validate);

  auto* estimate = app.add_subcommand("estimate", "per-prompt PVar estimates as CSV");
  input(estimate);
  output(estimate, true);

  auto* select = app.add_subcommand("select", "select prompts and write a manifest");
  input(select);
  output(select, true);
  select->add_option("--strategy", o.strategy, "pvar_top | pvar_bottom | random | reward_gap_top");
  select->add_option("--fraction", o.fraction, "fraction of prompts in (0, 1]");
  select->add_option("--seed", o.seed, "seed for the random strategy");

  auto* pair = app.add_subcommand("pair", "build chosen/rejected pairs");
  input(pair);
  output(pair, true);
  pair->add_option("--manifest", o.manifest, "restrict to prompts in this manifest")->check(CLI::ExistingFile);

  auto* train = app.add_subcommand("train-toy", "DPO on a synthetic tabular dataset");
  output(train, false);
  train->add_option("--strategy", o.strategy, "prompt selection strategy");
  train->add_option("--fraction", o.fraction, "fraction of prompts to train on");
  train->add_option("--seed", o.seed, "dataset seed");
  train->add_option("--beta", o.beta, "DPO beta");
  train->add_option("--lr", o.lr, "learning rate");
  train->add_option("--steps", o.steps, "gradient steps");
  train->add_option("--vocab", o.vocab, "vocabulary size (<= 10)");
  train->add_option("--horizon", o.horizon, "response length (<= 3)");
  train->add_option("--prompts", o.prompts, "number of synthetic prompts");

  auto* verify = app.add_subcommand("verify-bounds", "randomized gradient-bound sweep");
  output(verify, false);
  verify->add_option("--sweep", o.sweep, "number of instances");
  verify->add_option("--seed", o.seed, "first instance seed");
  verify->add_option("--vocab", o.vocab, "maximum vocabulary size");
  verify->add_option("--horizon", o.horizon, "maximum response length");
  verify->add_option("--steps", o.steps, "maximum training steps (theorem 2)");
  verify->add_option("--theorem", o.theorem, "1 (online) or 2 (offline-to-online)");

  auto* report = app.add_subcommand("report", "PVar histogram (25 bins over [0, 0.25])");
  input(report);
  output(report, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  // verify-bounds has smaller size defaults than train-toy.
  if (verify->parsed()) {
    if (verify->count("--vocab") == 0) o.vocab = 5;
    if (verify->count("--horizon") == 0) o.horizon = 2;
    if (verify->count("--steps") == 0) o.steps = 50;
  }

  try {
    if (validate->parsed()) return cmd_validate(o);
    if (estimate->parsed()) return cmd_estimate(o);
    if (select->parsed()) return cmd_select(o);
    if (pair->parsed()) return cmd_pair(o);
    if (train->parsed()) return cmd_train_toy(o);
    if (verify->parsed()) return cmd_verify_bounds(o);
    if (report->parsed()) return cmd_report(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const pvar::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
