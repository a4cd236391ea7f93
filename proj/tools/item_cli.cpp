#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "item/common.hpp"
#include "item/config.hpp"
#include "item/corpus.hpp"
#include "item/experiment.hpp"
#include "item/retrieval.hpp"

namespace {

using namespace item;

std::vector<Passage> load_collection(const std::string& path,
                                     const std::string& format,
                                     bool split_sentences) {
  const PassageFormat fmt =
      format == "jsonl" ? PassageFormat::jsonl : PassageFormat::tsv;
  auto passages = load_passages(path, fmt);
  if (split_sentences) {
    std::vector<Passage> windows;
    for (const auto& doc : passages) {
      auto parts = split_into_sentence_windows(doc);
      windows.insert(windows.end(), parts.begin(), parts.end());
    }
    passages = std::move(windows);
  }
  return passages;
}

int cmd_index(const std::string& passages_path, const std::string& format,
              bool split_sentences) {
  const auto passages = load_collection(passages_path, format, split_sentences);
  const auto index = build_index(passages);
  std::cout << "documents: " << index.doc_count << '\n'
            << "terms: " << index.postings.size() << '\n'
            << "avg_doc_length: " << index.avg_doc_length << '\n';
  return 0;
}

int cmd_retrieve(const std::string& passages_path, const std::string& format,
                 bool split_sentences, const std::string& queries_path,
                 int top_n, double k1, double b, const std::string& out_path,
                 const std::string& tag) {
  const auto passages = load_collection(passages_path, format, split_sentences);
  const auto index = build_index(passages);
  const auto queries = load_queries_tsv(queries_path);
  std::vector<RunEntry> entries;
  for (const auto& q : queries) {
    const auto ranked = bm25_search(index, q.text, top_n, {k1, b});
    for (size_t i = 0; i < ranked.size(); ++i) {
      entries.push_back({q.qid, ranked[i].first, static_cast<int>(i) + 1,
                         ranked[i].second, tag});
    }
  }
  save_run_file(out_path, entries);
  std::cout << "wrote " << entries.size() << " entries for " << queries.size()
            << " queries to " << out_path << '\n';
  return 0;
}

void print_run_summary(const EvalReport& report) {
  for (const auto& m : report.methods) {
    std::cout << m.label << ": questions=" << m.question_count;
    if (m.has_judgments) {
      std::cout << " f1=" << m.utility.f1 * 100.0;
    }
    if (m.has_ranking && m.question_count > 0) {
      std::cout << " ndcg@5=" << m.ndcg.at(5) * 100.0;
    }
    if (m.has_answers) {
      std::cout << " em=" << m.em * 100.0 << " token_f1=" << m.token_f1 * 100.0;
    }
    std::cout << '\n';
  }
  std::cout << "backend calls: " << report.backend_calls
            << ", cache hit rate: " << report.cache_hit_rate * 100.0 << "%\n";
  if (report.cache_io_warnings > 0) {
    std::cout << "warning: " << report.cache_io_warnings
              << " cache writes failed; responses were not persisted\n";
  }
  if (!report.failures.empty()) {
    std::cout << report.failures.size() << " question failures (see report)\n";
  }
}

struct ConfigOverrides {
  std::string output_dir;
  std::string cache;
  std::string templates;
  int jobs = 0;
  long long seed = -1;

  void apply(ExperimentConfig& config) const {
    if (!output_dir.empty()) config.output_dir = output_dir;
    if (!cache.empty()) config.cache_path = cache;
    if (!templates.empty()) config.template_dir = templates;
    if (jobs > 0) config.jobs = jobs;
    if (seed >= 0) {
      config.seed = static_cast<std::uint64_t>(seed);
      config.backend.seed = config.seed;
      for (auto& m : config.methods) m.seed = config.seed;
    }
  }
};

int cmd_run(const std::string& config_path, const ConfigOverrides& overrides) {
  auto config = load_experiment_config(config_path);
  overrides.apply(config);
  config.validate();
  const auto result = run_experiment(config);
  print_run_summary(result.report);
  std::cout << "outputs in " << config.output_dir << '\n';
  return result.exit_code;
}

int cmd_sweep(const std::string& config_path, const std::string& param,
              const std::vector<std::string>& values,
              const ConfigOverrides& overrides) {
  auto config = load_experiment_config(config_path);
  overrides.apply(config);
  config.validate();
  const auto parameter = sweep_parameter_from_string(param);
  const auto rows = sweep(config, parameter, values);
  std::filesystem::create_directories(config.output_dir);
  {
    std::ofstream md(config.output_dir + "/sweep.md", std::ios::binary);
    md << render_sweep_markdown(config, parameter, rows);
  }
  {
    std::ofstream csv(config.output_dir + "/sweep.csv", std::ios::binary);
    csv << render_sweep_csv(config, parameter, rows);
  }
  std::cout << render_sweep_markdown(config, parameter, rows);
  return 0;
}

int cmd_eval(const std::string& config_path) {
  const auto config = load_experiment_config(config_path);
  const auto dataset = prepare_dataset(config);
  TraceMatrix traces(config.methods.size(),
                     std::vector<std::optional<RunTrace>>(dataset.questions.size()));
  for (size_t mi = 0; mi < config.methods.size(); ++mi) {
    const std::string path = config.output_dir + "/traces-" +
                             config.methods[mi].label() + ".jsonl";
    std::map<std::string, RunTrace> by_qid;
    for (auto& trace : load_traces(path)) by_qid[trace.qid] = std::move(trace);
    for (size_t qi = 0; qi < dataset.questions.size(); ++qi) {
      auto it = by_qid.find(dataset.questions[qi].qid);
      if (it != by_qid.end()) traces[mi][qi] = it->second;
    }
  }
  const auto report =
      evaluate_traces(traces, config.methods, dataset, config.seed);
  {
    std::ofstream json_out(config.output_dir + "/report.json");
    json_out << report_to_json(report).dump(2) << '\n';
  }
  render_report(report, ReportFormat::markdown, config.output_dir + "/report.md");
  render_report(report, ReportFormat::csv, config.output_dir + "/report.csv");
  print_run_summary(report);
  return 0;
}

int cmd_report(const std::string& config_path, const std::string& format,
               const std::string& out_path) {
  const auto config = load_experiment_config(config_path);
  std::ifstream in(config.output_dir + "/report.json");
  if (!in) throw DataError("no report.json in " + config.output_dir + "; run `eval` or `run` first");
  nlohmann::json j;
  in >> j;
  const auto report = report_from_json(j);
  const ReportFormat fmt =
      format == "csv" ? ReportFormat::csv : ReportFormat::markdown;
  if (out_path.empty()) {
    std::cout << render_report_text(report, fmt);
  } else {
    render_report(report, fmt, out_path);
    std::cout << "wrote " << out_path << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterative utility judgment and ranking experiments over "
               "retrieved passage lists"};
  app.require_subcommand(1);

  std::string passages_path, format = "tsv", queries_path, out_path, tag = "bm25";
  std::string config_path, param, report_format = "markdown";
  std::vector<std::string> values;
  bool split_sentences = false;
  int top_n = 20;
  double k1 = 0.9, b = 0.4;

  auto* index_cmd = app.add_subcommand("index", "Build a BM25 index and print stats");
  index_cmd->add_option("--passages", passages_path, "Passage collection")->required();
  index_cmd->add_option("--format", format, "tsv or jsonl");
  index_cmd->add_flag("--split-sentences", split_sentences,
                      "Split documents into 2-3 sentence windows");

  auto* retrieve_cmd = app.add_subcommand("retrieve", "Write a TREC run file");
  retrieve_cmd->add_option("--passages", passages_path, "Passage collection")->required();
  retrieve_cmd->add_option("--format", format, "tsv or jsonl");
  retrieve_cmd->add_flag("--split-sentences", split_sentences,
                         "Split documents into 2-3 sentence windows");
  retrieve_cmd->add_option("--queries", queries_path, "qid<TAB>text queries")->required();
  retrieve_cmd->add_option("--top-n", top_n, "Results per query");
  retrieve_cmd->add_option("--k1", k1, "BM25 k1");
  retrieve_cmd->add_option("--b", b, "BM25 b");
  retrieve_cmd->add_option("--out", out_path, "Output run file")->required();
  retrieve_cmd->add_option("--tag", tag, "Run tag");

  ConfigOverrides overrides;
  auto add_overrides = [&](CLI::App* cmd) {
    cmd->add_option("--output-dir", overrides.output_dir, "Override output_dir");
    cmd->add_option("--cache", overrides.cache, "Override cache path");
    cmd->add_option("--templates", overrides.templates, "Override template dir");
    cmd->add_option("--jobs", overrides.jobs, "Override worker count");
    cmd->add_option("--seed", overrides.seed, "Override seed");
  };

  auto* run_cmd = app.add_subcommand("run", "Run the configured experiment");
  run_cmd->add_option("--config", config_path, "Experiment config")->required();
  add_overrides(run_cmd);

  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep one parameter across values");
  sweep_cmd->add_option("--config", config_path, "Experiment config")->required();
  sweep_cmd->add_option("--param", param, "m, topk_k, or p")->required();
  sweep_cmd->add_option("--values", values, "Values, comma separated")
      ->required()
      ->delimiter(',');
  add_overrides(sweep_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "Recompute the report from persisted traces");
  eval_cmd->add_option("--config", config_path, "Experiment config")->required();

  auto* report_cmd = app.add_subcommand("report", "Render a stored report");
  report_cmd->add_option("--config", config_path, "Experiment config")->required();
  report_cmd->add_option("--format", report_format, "markdown or csv");
  report_cmd->add_option("--out", out_path, "Output path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (index_cmd->parsed()) {
      return cmd_index(passages_path, format, split_sentences);
    }
    if (retrieve_cmd->parsed()) {
      return cmd_retrieve(passages_path, format, split_sentences, queries_path,
                          top_n, k1, b, out_path, tag);
    }
    if (run_cmd->parsed()) return cmd_run(config_path, overrides);
    if (sweep_cmd->parsed()) return cmd_sweep(config_path, param, values, overrides);
    if (eval_cmd->parsed()) return cmd_eval(config_path);
    if (report_cmd->parsed()) return cmd_report(config_path, report_format, out_path);
  } catch (const item::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
