#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"
#include "pvar/dpo.hpp"
#include "pvar/errors.hpp"
#include "pvar/selection.hpp"
#include "pvar/types.hpp"

namespace pvar::io {

using nlohmann::json;

struct LineViolation {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct IngestResult {
  std::vector<PromptRecord> records;
  std::vector<LineViolation> violations;
};

// Shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline PromptRecord record_from_json(const json& j) {
  if (!j.is_object()) throw InvalidInputError("record is not a JSON object");
  PromptRecord rec;
  const auto pid = j.find("prompt_id");
  if (pid == j.end() || !pid->is_string()) throw InvalidInputError("missing string field 'prompt_id'");
  rec.prompt_id = pid->get<std::string>();
  if (const auto t = j.find("prompt_text"); t != j.end() && !t->is_null()) {
    if (!t->is_string()) throw InvalidInputError("'prompt_text' must be a string");
    rec.prompt_text = t->get<std::string>();
  }
  const auto rs = j.find("responses");
  if (rs == j.end() || !rs->is_array()) throw InvalidInputError("missing array field 'responses'");
  for (std::size_t k = 0; k < rs->size(); ++k) {
    const auto& r = (*rs)[k];
    const std::string where = "responses[" + std::to_string(k) + "]";
    if (!r.is_object()) throw InvalidInputError(where + " is not an object");
    ScoredResponse sr;
    const auto rid = r.find("response_id");
    if (rid == r.end() || !rid->is_string()) throw InvalidInputError(where + ": missing string 'response_id'");
    sr.response_id = rid->get<std::string>();
    if (const auto t = r.find("text"); t != r.end() && !t->is_null()) {
      if (!t->is_string()) throw InvalidInputError(where + ": 'text' must be a string");
      sr.text = t->get<std::string>();
    }
    const auto rw = r.find("reward");
    if (rw == r.end() || !rw->is_number()) throw InvalidInputError(where + ": missing numeric 'reward'");
    sr.reward = rw->get<double>();
    rec.responses.push_back(std::move(sr));
  }
  return rec;
}

inline json record_to_json(const PromptRecord& rec) {
  json responses = json::array();
  for (const auto& r : rec.responses) {
    json jr = {{"response_id", r.response_id}};
    if (!r.text.empty()) jr["text"] = r.text;
    jr["reward"] = r.reward;
    responses.push_back(std::move(jr));
  }
  json j = {{"prompt_id", rec.prompt_id}};
  if (!rec.prompt_text.empty()) j["prompt_text"] = rec.prompt_text;
  j["responses"] = std::move(responses);
  return j;
}

// Parses JSONL from a stream. Blank lines are skipped; malformed lines become
// violations and never stop the scan.
inline IngestResult parse_jsonl(std::istream& in) {
  IngestResult out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.records.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      out.violations.push_back({lineno, std::string("malformed JSON: ") + e.what()});
    } catch (const InvalidInputError& e) {
      out.violations.push_back({lineno, e.what()});
    }
  }
  return out;
}

inline IngestResult ingest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  auto result = parse_jsonl(in);
  if (result.records.empty()) throw EmptyDatasetError("no valid records in " + path.string());
  return result;
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

inline void finish_write(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

inline void write_dataset(std::span<const PromptRecord> records, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  for (const auto& rec : records) out << record_to_json(rec).dump() << '\n';
  finish_write(out, path);
}

// ---- manifests ----

inline json manifest_to_json(const SelectionManifest& m) {
  json selected = json::array();
  for (const auto& s : m.selected) selected.push_back({{"prompt_id", s.prompt_id}, {"score", s.score}});
  return json{{"strategy", std::string(to_string(m.strategy))},
              {"fraction", m.fraction},
              {"seed", m.seed},
              {"generator", m.generator},
              {"dataset_size", m.dataset_size},
              {"selected", std::move(selected)}};
}

inline SelectionManifest manifest_from_json(const json& j) {
  try {
    SelectionManifest m;
    const auto kind = parse_strategy(j.at("strategy").get<std::string>());
    if (!kind) throw InvalidInputError("unknown strategy in manifest");
    m.strategy = *kind;
    m.fraction = j.at("fraction").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.generator = j.at("generator").get<std::string>();
    m.dataset_size = j.at("dataset_size").get<std::size_t>();
    for (const auto& s : j.at("selected")) {
      m.selected.push_back({s.at("prompt_id").get<std::string>(), s.at("score").get<double>()});
    }
    return m;
  } catch (const json::exception& e) {
    throw InvalidInputError(std::string("malformed manifest: ") + e.what());
  }
}

inline void emit_manifest(const SelectionManifest& m, const std::filesystem::path& path) {
  if (m.selected.empty()) throw InvalidInputError("refusing to write a manifest with no selected prompts");
  auto out = open_for_write(path);
  out << manifest_to_json(m).dump(2) << '\n';
  finish_write(out, path);
}

inline SelectionManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return manifest_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw InvalidInputError(std::string("malformed manifest: ") + e.what());
  }
}

inline void write_pairs(std::span<const PreferencePair> pairs, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  for (const auto& p : pairs) {
    out << json{{"prompt_id", p.prompt_id},
                {"chosen_id", p.chosen_id},
                {"rejected_id", p.rejected_id},
                {"reward_chosen", p.reward_chosen},
                {"reward_rejected", p.reward_rejected}}
               .dump()
        << '\n';
  }
  finish_write(out, path);
}

// ---- CSV reports ----

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

inline constexpr std::size_t kHistogramBins = 25;
inline constexpr double kHistogramUpper = 0.25;

struct HistogramBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
};

// Equal-width bins over [0, 0.25]; bin k covers [k/100, (k+1)/100), the last one is closed.
inline std::vector<HistogramBin> pvar_histogram(std::span<const double> values) {
  std::vector<HistogramBin> bins(kHistogramBins);
  const double width = kHistogramUpper / static_cast<double>(kHistogramBins);
  for (std::size_t k = 0; k < kHistogramBins; ++k) {
    bins[k].lower = static_cast<double>(k) * width;
    bins[k].upper = static_cast<double>(k + 1) * width;
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidInputError("histogram value is not finite");
    const double clamped = std::clamp(v, 0.0, kHistogramUpper);
    auto k = static_cast<std::size_t>(clamped / width);
    bins[std::min(k, kHistogramBins - 1)].count += 1;
  }
  return bins;
}

inline std::string render_pvar_histogram(std::span<const double> values) {
  if (values.empty()) throw InvalidInputError("histogram needs at least one value");
  std::ostringstream out;
  out << "bin,lower,upper,count\n";
  const auto bins = pvar_histogram(values);
  for (std::size_t k = 0; k < bins.size(); ++k) {
    out << k << ',' << format_double(bins[k].lower) << ',' << format_double(bins[k].upper) << ','
        << bins[k].count << '\n';
  }
  return out.str();
}

inline std::string render_train_trace(const TrainTrace& trace) {
  if (trace.size() == 0) throw InvalidInputError("train trace is empty");
  std::ostringstream out;
  out << "step,loss,margin,grad_norm\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out << i << ',' << format_double(trace.loss[i]) << ',' << format_double(trace.margin[i]) << ','
        << format_double(trace.grad_norm[i]) << '\n';
  }
  return out.str();
}

struct BoundSweepRow {
  std::uint64_t seed = 0;
  double grad_norm = 0.0;
  double pvar = 0.0;
  double bound = 0.0;
  double slack = 0.0;
  bool holds = false;
};

inline std::string render_bound_sweep(std::span<const BoundSweepRow> rows) {
  if (rows.empty()) throw InvalidInputError("bound sweep is empty");
  std::ostringstream out;
  out << "seed,grad_norm,pvar,bound,slack,holds\n";
  for (const auto& r : rows) {
    out << r.seed << ',' << format_double(r.grad_norm) << ',' << format_double(r.pvar) << ','
        << format_double(r.bound) << ',' << format_double(r.slack) << ',' << (r.holds ? "true" : "false") << '\n';
  }
  return out.str();
}

inline std::string render_estimates(std::span<const PVarEstimate> estimates) {
  if (estimates.empty()) throw InvalidInputError("no estimates to write");
  std::ostringstream out;
  out << "prompt_id,pvar,n_responses,mean_pref\n";
  for (const auto& e : estimates) {
    out << csv_field(e.prompt_id) << ',' << format_double(e.pvar) << ',' << e.n_responses << ','
        << format_double(e.mean_pref) << '\n';
  }
  return out.str();
}

inline void write_text(const std::string& content, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << content;
  finish_write(out, path);
}

inline void emit_report(std::span<const double> pvars, const std::filesystem::path& path) {
  write_text(render_pvar_histogram(pvars), path);
}
inline void emit_report(const TrainTrace& trace, const std::filesystem::path& path) {
  write_text(render_train_trace(trace), path);
}
inline void emit_report(std::span<const BoundSweepRow> rows, const std::filesystem::path& path) {
  write_text(render_bound_sweep(rows), path);
}

}  // namespace pvar::io
