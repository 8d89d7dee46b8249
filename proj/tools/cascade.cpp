// Command-line front end: decode, evaluate, sweep, emit-plot-data.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <cascade/decoders.hpp>
#include <cascade/metrics.hpp>
#include <cascade/scorer.hpp>
#include <cascade/sweep.hpp>
#include <cascade/task_io.hpp>
#include <cascade/trie.hpp>
#include <cascade/vocab.hpp>

namespace {

using namespace cascade;

std::unique_ptr<Scorer> make_scorer(const std::string& spec, const Vocabulary& vocab) {
  if (spec == "uniform") return std::make_unique<UniformScorer>(vocab.size(), vocab.pad());
  return std::make_unique<TableScorer>(load_table_scorer(spec, vocab.pad()));
}

std::ostream& open_output(std::ofstream& file, const std::string& path) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw std::runtime_error("cannot open output file: " + path);
  return file;
}

nlohmann::json result_to_json(const DecodeResult& r, const Vocabulary& vocab,
                              const Scorer& scorer, const std::vector<TokenId>& source) {
  nlohmann::json occupancy = nlohmann::json::array();
  for (const auto& row : r.stats.level_occupancy) occupancy.push_back(row);
  // raw_score re-scores the output under the unguided model for diagnostics;
  // it equals score whenever guidance is off
  return {{"hypothesis_text", vocab.detokenize(r.output.tokens)},
          {"token_ids", r.output.tokens},
          {"level", r.output.level},
          {"score", r.output.score},
          {"stats",
           {{"steps", r.stats.steps},
            {"peak_hypotheses", r.stats.peak_live_hypotheses},
            {"truncated", r.truncated},
            {"raw_score", sequence_log_prob(scorer, source, r.output.tokens)},
            {"level_occupancy", occupancy}}}};
}

struct CommonOpts {
  std::string tasks_path;
  std::string vocab_path;
  std::string scorer_spec = "uniform";
  std::string decoder = "cascaded";
  std::string strategy = "none";
  double alpha = 0.1;
  int beams = 5;
  int max_len = 32;
  bool length_norm = false;
  bool ignore_case = false;
  bool trace_distributor = false;
};

int run_decode(const CommonOpts& opt, const std::string& out_path) {
  Vocabulary vocab = load_vocabulary(opt.vocab_path);
  std::unique_ptr<Scorer> scorer = make_scorer(opt.scorer_spec, vocab);
  std::vector<Task> tasks = load_tasks(opt.tasks_path);

  DecodeConfig config;
  config.beams = opt.beams;
  config.max_len = opt.max_len;
  config.length_normalization = opt.length_norm;
  config.guidance = {opt.alpha, parse_strategy(opt.strategy)};
  if (opt.trace_distributor) config.trace_distributor = &std::cerr;

  std::ofstream file;
  std::ostream& out = open_output(file, out_path);
  for (const Task& task : tasks) {
    std::vector<TokenId> source = detail::source_ids(vocab, task.source);
    DecodeResult r =
        detail::run_decoder(opt.decoder, vocab, *scorer, source, task.terms, config,
                            !opt.ignore_case);
    out << result_to_json(r, vocab, *scorer, source).dump() << "\n";
  }
  return 0;
}

int run_evaluate(const std::string& hyps_path, const std::string& tasks_path,
                 const std::string& lemmas_path, const CommonOpts& opt, bool smooth,
                 const std::string& out_path) {
  std::vector<Task> tasks = load_tasks(tasks_path);

  std::ifstream in(hyps_path);
  if (!in) throw std::runtime_error("cannot open hypothesis file: " + hyps_path);
  std::vector<std::string> hyp_texts;
  std::vector<double> steps;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      hyp_texts.push_back(j.at("hypothesis_text").get<std::string>());
      steps.push_back(j.at("stats").at("steps").get<double>());
    } catch (const std::exception& e) {
      throw std::runtime_error(hyps_path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (hyp_texts.size() != tasks.size()) {
    throw std::runtime_error("hypothesis count " + std::to_string(hyp_texts.size()) +
                             " does not match task count " + std::to_string(tasks.size()));
  }

  Lemmatizer lemmatizer;
  if (!lemmas_path.empty()) lemmatizer = load_lemmatizer(lemmas_path);

  EvalCorpus corpus;
  std::vector<std::string> refs;
  double total_steps = 0;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    corpus.emplace_back(hyp_texts[i], tasks[i].terms);
    refs.push_back(tasks[i].reference);
    total_steps += steps[i];
  }
  const bool cs = !opt.ignore_case;
  std::ofstream file;
  std::ostream& out = open_output(file, out_path);
  out << "decoder,alpha,k,EMA,LMA,BLEU,avg_steps\n";
  out << opt.decoder << ',' << opt.alpha << ',' << opt.beams << ','
      << detail::format_double(ema(corpus, cs)) << ','
      << detail::format_double(lma(corpus, lemmatizer, cs)) << ','
      << detail::format_double(bleu(hyp_texts, refs, smooth), "%.4f") << ','
      << detail::format_double(total_steps / static_cast<double>(tasks.size()), "%.4f") << "\n";
  return 0;
}

std::vector<double> parse_doubles(const std::string& csv) {
  std::vector<double> out;
  std::istringstream is(csv);
  std::string field;
  while (std::getline(is, field, ',')) out.push_back(std::stod(field));
  return out;
}

std::vector<int> parse_ints(const std::string& csv) {
  std::vector<int> out;
  std::istringstream is(csv);
  std::string field;
  while (std::getline(is, field, ',')) out.push_back(std::stoi(field));
  return out;
}

std::vector<std::string> parse_strings(const std::string& csv) {
  std::vector<std::string> out;
  std::istringstream is(csv);
  std::string field;
  while (std::getline(is, field, ',')) out.push_back(field);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained decoding engine: cascaded beam search with logit guidance,"
               " grid beam search baselines and terminology metrics"};
  app.require_subcommand(1);

  CommonOpts opt;
  std::string out_path;

  auto add_decode_opts = [&](CLI::App* cmd) {
    cmd->add_option("--tasks", opt.tasks_path, "task JSONL file")->required();
    cmd->add_option("--vocab", opt.vocab_path, "vocabulary JSON file")->required();
    cmd->add_option("--scorer", opt.scorer_spec, "toy-model JSON file or 'uniform'");
    cmd->add_option("--decoder", opt.decoder, "beam | gbs | gbs+ | cascaded")
        ->check(CLI::IsMember({"beam", "gbs", "gbs+", "cascaded"}));
    cmd->add_option("--beams", opt.beams, "beams per level (k)");
    cmd->add_option("--max-len", opt.max_len, "maximum sequence length");
    cmd->add_option("--alpha", opt.alpha, "guidance strength");
    cmd->add_option("--strategy", opt.strategy, "none | tokenizer | longest | all")
        ->check(CLI::IsMember({"none", "tokenizer", "longest", "all"}));
    cmd->add_flag("--length-norm", opt.length_norm, "length-normalize final ranking");
    cmd->add_flag("--ignore-case", opt.ignore_case, "case-insensitive term matching");
  };

  CLI::App* decode = app.add_subcommand("decode", "decode a task file to hypothesis JSONL");
  add_decode_opts(decode);
  decode->add_flag("--trace-distributor", opt.trace_distributor,
                   "log every level decision to stderr");
  decode->add_option("--output", out_path, "output JSONL path (default stdout)");

  CLI::App* evaluate = app.add_subcommand("evaluate", "score hypothesis JSONL against tasks");
  std::string hyps_path;
  std::string lemmas_path;
  bool smooth = false;
  evaluate->add_option("--hyps", hyps_path, "hypothesis JSONL from decode")->required();
  evaluate->add_option("--tasks", opt.tasks_path, "task JSONL file")->required();
  evaluate->add_option("--lemmas", lemmas_path, "lemma table JSON (surface -> lemma)");
  evaluate->add_option("--decoder", opt.decoder, "decoder label for the CSV row");
  evaluate->add_option("--alpha", opt.alpha, "alpha label for the CSV row");
  evaluate->add_option("--k", opt.beams, "k label for the CSV row");
  evaluate->add_flag("--ignore-case", opt.ignore_case, "case-insensitive term matching");
  evaluate->add_flag("--smooth-bleu", smooth, "add-one smoothing on BLEU orders >= 2");
  evaluate->add_option("--output", out_path, "output CSV path (default stdout)");

  CLI::App* sweep = app.add_subcommand("sweep", "run a decode/metric grid, emit CSV");
  std::string alphas_csv = "0";
  std::string ks_csv = "5";
  std::string strategies_csv = "none";
  std::string decoders_csv = "cascaded";
  int max_cells = 512;
  sweep->add_option("--tasks", opt.tasks_path, "task JSONL file")->required();
  sweep->add_option("--vocab", opt.vocab_path, "vocabulary JSON file")->required();
  sweep->add_option("--scorer", opt.scorer_spec, "toy-model JSON file or 'uniform'");
  sweep->add_option("--alphas", alphas_csv, "comma-separated guidance strengths");
  sweep->add_option("--ks", ks_csv, "comma-separated beam counts");
  sweep->add_option("--strategies", strategies_csv, "comma-separated push strategies");
  sweep->add_option("--decoders", decoders_csv, "comma-separated decoders");
  sweep->add_option("--max-len", opt.max_len, "maximum sequence length");
  sweep->add_option("--max-cells", max_cells, "grid size cap");
  sweep->add_option("--lemmas", lemmas_path, "lemma table JSON");
  sweep->add_flag("--length-norm", opt.length_norm, "length-normalize final ranking");
  sweep->add_flag("--ignore-case", opt.ignore_case, "case-insensitive term matching");
  sweep->add_option("--output", out_path, "output CSV path (default stdout)");

  CLI::App* plot = app.add_subcommand("emit-plot-data", "project a sweep CSV to (series,x,y)");
  std::string sweep_path;
  std::string x_col = "alpha";
  std::string y_col = "ema";
  std::string series_col = "strategy";
  plot->add_option("--sweep", sweep_path, "sweep CSV file")->required();
  plot->add_option("--x", x_col, "x column");
  plot->add_option("--y", y_col, "y column");
  plot->add_option("--series", series_col, "series (group-by) column");
  plot->add_option("--output", out_path, "output CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage errors exit 1, --help exits 0
  }

  try {
    if (decode->parsed()) return run_decode(opt, out_path);
    if (evaluate->parsed()) {
      return run_evaluate(hyps_path, opt.tasks_path, lemmas_path, opt, smooth, out_path);
    }
    if (sweep->parsed()) {
      Vocabulary vocab = load_vocabulary(opt.vocab_path);
      std::unique_ptr<Scorer> scorer = make_scorer(opt.scorer_spec, vocab);
      std::vector<Task> tasks = load_tasks(opt.tasks_path);
      Lemmatizer lemmatizer;
      if (!lemmas_path.empty()) lemmatizer = load_lemmatizer(lemmas_path);
      SweepSpec spec;
      spec.decoders = parse_strings(decoders_csv);
      spec.alphas = parse_doubles(alphas_csv);
      spec.ks = parse_ints(ks_csv);
      for (const std::string& s : parse_strings(strategies_csv)) {
        spec.strategies.push_back(parse_strategy(s));
      }
      spec.max_len = opt.max_len;
      spec.max_cells = max_cells;
      spec.length_normalization = opt.length_norm;
      spec.case_sensitive = !opt.ignore_case;
      std::ofstream file;
      std::ostream& out = open_output(file, out_path);
      out << to_csv(run_sweep(tasks, vocab, *scorer, spec, lemmatizer));
      return 0;
    }
    if (plot->parsed()) {
      SweepTable table = load_sweep_csv(sweep_path);
      std::ofstream file;
      std::ostream& out = open_output(file, out_path);
      out << emit_plot_data(table, x_col, y_col, series_col);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
