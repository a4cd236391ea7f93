#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "item/common.hpp"
#include "item/config.hpp"
#include "item/experiment.hpp"
#include "synthetic.hpp"

using namespace item;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string fresh_dir(const std::string& name) {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

}  // namespace

TEST_CASE("toml parser handles scalars, tables, arrays, comments") {
  const auto root = parse_toml(
      "# a comment\n"
      "seed = 42\n"
      "name = \"hello # not a comment\"\n"
      "ratio = 0.25\n"
      "flag = true\n"
      "values = [1, 2, 3]\n"
      "[table]\n"
      "key = \"v\"\n"
      "[[row]]\n"
      "x = 1\n"
      "[[row]]\n"
      "x = 2\n");
  CHECK(root.get_int("seed", 0) == 42);
  CHECK(root.get_string("name", "") == "hello # not a comment");
  CHECK(root.get_real("ratio", 0) == doctest::Approx(0.25));
  CHECK(root.get_bool("flag", false));
  CHECK(root.values.at("values").as_array() ==
        std::vector<std::string>{"1", "2", "3"});
  CHECK(root.tables.at("table").get_string("key", "") == "v");
  REQUIRE(root.table_arrays.at("row").size() == 2);
  CHECK(root.table_arrays.at("row")[1].get_int("x", 0) == 2);
}

TEST_CASE("toml parser rejects malformed input") {
  CHECK_THROWS_AS(parse_toml("novalue\n"), ConfigError);
  CHECK_THROWS_AS(parse_toml("x = \n"), ConfigError);
  CHECK_THROWS_AS(parse_toml("x = what\n"), ConfigError);
  CHECK_THROWS_AS(parse_toml("[unterminated\n"), ConfigError);
}

TEST_CASE("credential interpolation resolves ${VAR} for the api key only") {
  setenv("ITEM_TEST_KEY", "sk-secret", 1);
  const auto ds = synthetic::make(fresh_dir("item_cfg_env"), 2, 5, 1);
  std::ostringstream toml;
  toml << "[dataset]\npassages = \"" << ds.passages_path << "\"\nqrels = \""
       << ds.qrels_path << "\"\nqueries = \"" << ds.queries_path << "\"\n"
       << "[retrieval]\ncandidate_n = 5\n"
       << "[backend]\nkind = \"http\"\nbase_url = \"http://x\"\n"
       << "api_key = \"${ITEM_TEST_KEY}\"\nmodel = \"${NOT_EXPANDED}\"\n"
       << "[[method]]\nmethod = \"vanilla\"\n";
  const auto config = experiment_config_from_toml(parse_toml(toml.str()));
  CHECK(config.backend.api_key == "sk-secret");
  CHECK(config.backend.model == "${NOT_EXPANDED}");
}

TEST_CASE("config validation rejects inconsistent setups") {
  const auto ds = synthetic::make(fresh_dir("item_cfg_bad"), 2, 5, 2);
  auto base = [&](const std::string& extra) {
    std::ostringstream toml;
    toml << "[dataset]\npassages = \"" << ds.passages_path << "\"\nqrels = \""
         << ds.qrels_path << "\"\nqueries = \"" << ds.queries_path << "\"\n"
         << extra;
    return toml.str();
  };
  // Pointwise with a listwise-only method.
  CHECK_THROWS_AS(experiment_config_from_toml(parse_toml(base(
                      "[[method]]\nmethod = \"item_ar_s\"\n"
                      "input_mode = \"pointwise\"\n"))),
                  ConfigError);
  // topk_k exceeding the candidate list.
  CHECK_THROWS_AS(experiment_config_from_toml(parse_toml(base(
                      "[retrieval]\ncandidate_n = 4\n"
                      "[[method]]\nmethod = \"item_a_r\"\ntopk_k = 9\n"))),
                  ConfigError);
  // run_file retriever without a run file.
  CHECK_THROWS_AS(experiment_config_from_toml(parse_toml(base(
                      "[retrieval]\nretriever = \"run_file\"\n"
                      "[[method]]\nmethod = \"vanilla\"\n"))),
                  ConfigError);
  // No methods at all.
  CHECK_THROWS_AS(experiment_config_from_toml(parse_toml(base(""))),
                  ConfigError);
}

namespace {

ExperimentConfig perfect_config(const synthetic::Dataset& ds,
                                const std::string& out_dir,
                                const std::string& methods,
                                const std::string& cache = "") {
  std::ostringstream toml;
  toml << "seed = 42\noutput_dir = \"" << out_dir << "\"\n"
       << "[dataset]\npassages = \"" << ds.passages_path << "\"\nqrels = \""
       << ds.qrels_path << "\"\nqa = \"" << ds.qa_path << "\"\n"
       << "[retrieval]\ncandidate_n = " << ds.n_candidates << "\n"
       << "[backend]\nkind = \"mock_perfect\"\n"
       << "[run]\ntemplates = \"" << ITEM_TEMPLATE_DIR << "\"\njobs = 2\n";
  if (!cache.empty()) toml << "cache = \"" << cache << "\"\n";
  toml << methods;
  return experiment_config_from_toml(parse_toml(toml.str()));
}

}  // namespace

TEST_CASE("run_experiment: perfect oracle yields exact utility F1 = 1") {
  const auto dir = fresh_dir("item_run_perfect");
  const auto ds = synthetic::make(dir + "/data", 8, 10, 3);
  const auto config = perfect_config(
      ds, dir + "/out",
      "[[method]]\nmethod = \"item_a_s\"\n[[method]]\nmethod = \"vanilla\"\n");
  const auto result = run_experiment(config);
  CHECK(result.exit_code == 0);
  REQUIRE(result.report.methods.size() == 2);
  for (const auto& m : result.report.methods) {
    CHECK(m.question_count == 8);
    CHECK(m.utility.f1 == 1.0);
  }
  // Perfect answers match gold exactly.
  CHECK(result.report.methods[0].has_answers);
  CHECK(result.report.methods[0].em == 1.0);

  namespace fs = std::filesystem;
  CHECK(fs::exists(dir + "/out/report.md"));
  CHECK(fs::exists(dir + "/out/report.csv"));
  CHECK(fs::exists(dir + "/out/report.json"));
  CHECK(fs::exists(dir + "/out/per_question.csv"));
  CHECK(fs::exists(dir + "/out/traces-item_a_s-expa-m3.jsonl"));
}

TEST_CASE("reports are deterministic and reproducible from traces") {
  const auto dir = fresh_dir("item_run_det");
  const auto ds = synthetic::make(dir + "/data", 6, 8, 4);
  const auto config = perfect_config(
      ds, dir + "/out",
      "[[method]]\nmethod = \"item_ar_s\"\n[[method]]\nmethod = \"rankgpt\"\n");

  const auto first = run_experiment(config);
  const std::string report_md = slurp(dir + "/out/report.md");
  const std::string report_csv = slurp(dir + "/out/report.csv");
  const std::string per_question = slurp(dir + "/out/per_question.csv");

  const auto second = run_experiment(config);
  CHECK(slurp(dir + "/out/report.md") == report_md);
  CHECK(slurp(dir + "/out/report.csv") == report_csv);
  CHECK(slurp(dir + "/out/per_question.csv") == per_question);

  // Metric values recompute identically from the persisted traces.
  const auto dataset = prepare_dataset(config);
  TraceMatrix traces;
  for (const auto& spec : config.methods) {
    const auto loaded =
        load_traces(dir + "/out/traces-" + spec.label() + ".jsonl");
    std::vector<std::optional<RunTrace>> column(dataset.questions.size());
    for (const auto& trace : loaded) {
      for (size_t qi = 0; qi < dataset.questions.size(); ++qi) {
        if (dataset.questions[qi].qid == trace.qid) column[qi] = trace;
      }
    }
    traces.push_back(std::move(column));
  }
  const auto recomputed =
      evaluate_traces(traces, config.methods, dataset, config.seed);
  CHECK(render_report_text(recomputed, ReportFormat::markdown) == report_md);
}

TEST_CASE("cache replay reruns offline with zero backend calls") {
  const auto dir = fresh_dir("item_run_cache");
  const auto ds = synthetic::make(dir + "/data", 5, 8, 5);
  // Cache inside the output dir, which does not exist before the first run.
  const auto config = perfect_config(
      ds, dir + "/out", "[[method]]\nmethod = \"item_a_s\"\n",
      dir + "/out/cache.jsonl");

  const auto cold = run_experiment(config);
  CHECK(cold.report.backend_calls > 0);
  CHECK(cold.report.cache_io_warnings == 0);
  const std::string report_md = slurp(dir + "/out/report.md");

  const auto warm = run_experiment(config);
  CHECK(warm.report.backend_calls == 0);
  CHECK(warm.report.cache_hit_rate == 1.0);
  CHECK(slurp(dir + "/out/report.md") == report_md);
}

TEST_CASE("csv report shape: methods x metric groups plus header") {
  const auto dir = fresh_dir("item_run_csv");
  const auto ds = synthetic::make(dir + "/data", 3, 6, 6);
  const auto config = perfect_config(
      ds, dir + "/out",
      "[[method]]\nmethod = \"vanilla\"\n[[method]]\nmethod = \"uj_expa\"\n");
  const auto result = run_experiment(config);
  const std::string csv = render_report_text(result.report, ReportFormat::csv);
  const size_t lines = std::count(csv.begin(), csv.end(), '\n');
  CHECK(lines == 2 * 3 + 1);
  CHECK(csv.rfind("method,group,", 0) == 0);
  // Markdown carries the parse-warning section.
  const std::string md = render_report_text(result.report, ReportFormat::markdown);
  CHECK(md.find("## Parse warnings") != std::string::npos);
}

TEST_CASE("report JSON round-trips") {
  const auto dir = fresh_dir("item_run_json");
  const auto ds = synthetic::make(dir + "/data", 3, 6, 7);
  const auto config =
      perfect_config(ds, dir + "/out", "[[method]]\nmethod = \"item_a_r\"\n");
  const auto result = run_experiment(config);
  const auto j = report_to_json(result.report);
  const auto round = report_from_json(j);
  CHECK(report_to_json(round).dump() == j.dump());
  CHECK(render_report_text(round, ReportFormat::markdown) ==
        render_report_text(result.report, ReportFormat::markdown));
}

TEST_CASE("sweep runs one row per value and rejects empty or inapplicable input") {
  const auto dir = fresh_dir("item_sweep");
  const auto ds = synthetic::make(dir + "/data", 4, 8, 8);
  const auto config = perfect_config(
      ds, dir + "/out", "[[method]]\nmethod = \"item_a_s\"\n",
      dir + "/cache.jsonl");

  const auto rows = sweep(config, SweepParameter::iteration_cap, {"1", "2", "3"});
  REQUIRE(rows.size() == 3);
  for (const auto& row : rows) {
    CHECK(row.report.methods[0].utility.f1 == 1.0);
  }
  const std::string md =
      render_sweep_markdown(config, SweepParameter::iteration_cap, rows);
  CHECK(std::count(md.begin(), md.end(), '\n') == 2 + 3 + 2);  // title + header rows + 3 values

  CHECK_THROWS_AS(sweep(config, SweepParameter::iteration_cap, {}), ConfigError);
  // rouge_p applies to no configured method (stop rule is the default).
  CHECK_THROWS_AS(sweep(config, SweepParameter::rouge_p, {"0.5"}), ConfigError);
}

TEST_CASE("auto-annotation labels candidates by answer containment") {
  const auto dir = fresh_dir("item_auto");
  const auto ds = synthetic::make(dir + "/data", 4, 8, 9);
  std::ostringstream toml;
  toml << "seed = 1\noutput_dir = \"" << dir << "/out\"\n"
       << "[dataset]\npassages = \"" << ds.passages_path << "\"\nqa = \""
       << ds.qa_path << "\"\nauto_annotate = true\n"
       << "[retrieval]\ncandidate_n = 8\ninject_utility = false\n"
       << "[backend]\nkind = \"mock_perfect\"\n"
       << "[run]\ntemplates = \"" << ITEM_TEMPLATE_DIR << "\"\njobs = 1\n"
       << "[[method]]\nmethod = \"vanilla\"\n";
  const auto config = experiment_config_from_toml(parse_toml(toml.str()));
  const auto dataset = prepare_dataset(config);
  CHECK(dataset.questions.size() == 4);
  // Gold passages embed the answer phrase, so annotation recovers them.
  for (const auto& q : dataset.questions) {
    CHECK_FALSE(dataset.label_set.utility_passages(q.qid).empty());
  }
  const auto result = run_experiment(config);
  CHECK(result.report.methods[0].utility.f1 == 1.0);
}
