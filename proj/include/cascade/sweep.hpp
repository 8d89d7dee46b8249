#pragma once

/**
 * Experiment sweeps: decode a task corpus over a grid of
 * (decoder, strategy, alpha, k) cells and emit one CSV row of metrics per
 * cell. Cells are independent; a decode failure marks the cell failed and the
 * sweep continues. Row order follows the grid order in the spec lists, so a
 * rerun over the same inputs produces a byte-identical table.
 */

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "decoders.hpp"
#include "metrics.hpp"
#include "task_io.hpp"

namespace cascade {

struct SweepSpec {
  std::vector<std::string> decoders;  // beam | gbs | gbs+ | cascaded
  std::vector<PushStrategy> strategies;
  std::vector<double> alphas;
  std::vector<int> ks;
  int max_len = 32;
  bool length_normalization = false;
  bool case_sensitive = true;
  int max_cells = 512;

  void validate() const {
    if (decoders.empty() || strategies.empty() || alphas.empty() || ks.empty()) {
      throw std::invalid_argument("sweep spec: all grid lists must be non-empty");
    }
    const std::size_t cells = decoders.size() * strategies.size() * alphas.size() * ks.size();
    if (cells > static_cast<std::size_t>(max_cells)) {
      throw std::invalid_argument("sweep spec: " + std::to_string(cells) +
                                  " cells exceed the cap of " + std::to_string(max_cells));
    }
  }
};

/// Generic column-named table; all cells already formatted.
struct SweepTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
  }
};

namespace detail {

inline std::string format_double(double v, const char* fmt = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

inline std::string format_alpha(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

inline DecodeResult run_decoder(const std::string& decoder, const Vocabulary& vocab,
                                const Scorer& scorer, const std::vector<TokenId>& source,
                                const TermList& terms, const DecodeConfig& config,
                                bool case_sensitive) {
  if (decoder == "beam") {
    TermTrie trie(terms, case_sensitive);
    return beam_search(vocab, scorer, source, &trie, config);
  }
  if (decoder == "gbs") return grid_beam_search(vocab, scorer, source, terms, config, false);
  if (decoder == "gbs+") return grid_beam_search(vocab, scorer, source, terms, config, true);
  if (decoder == "cascaded") {
    TermTrie trie(terms, case_sensitive);
    return cascaded_beam_search(vocab, scorer, source, trie, config);
  }
  throw std::invalid_argument("unknown decoder '" + decoder + "'");
}

/// Source text tokenized with the target-side vocabulary when coverable,
/// empty otherwise (the toy scorers only condition on the prefix).
inline std::vector<TokenId> source_ids(const Vocabulary& vocab, const std::string& source) {
  if (!vocab.coverable(source)) return {};
  return vocab.canonical_tokenize(source);
}

}  // namespace detail

inline const std::vector<std::string>& sweep_header() {
  static const std::vector<std::string> header = {
      "decoder", "strategy", "alpha", "k",         "status",
      "ema",     "lma",      "bleu",  "avg_steps", "peak_hyps"};
  return header;
}

inline SweepTable run_sweep(const std::vector<Task>& tasks, const Vocabulary& vocab,
                            const Scorer& scorer, const SweepSpec& spec,
                            const Lemmatizer& lemmatizer = Lemmatizer()) {
  spec.validate();
  SweepTable table;
  table.header = sweep_header();

  for (const std::string& decoder : spec.decoders) {
    for (PushStrategy strategy : spec.strategies) {
      for (double alpha : spec.alphas) {
        for (int k : spec.ks) {
          DecodeConfig config;
          config.beams = k;
          config.max_len = spec.max_len;
          config.length_normalization = spec.length_normalization;
          config.guidance = {alpha, strategy};

          std::vector<std::string> row = {decoder, to_string(strategy),
                                          detail::format_alpha(alpha), std::to_string(k)};
          EvalCorpus corpus;
          std::vector<std::string> hyps;
          std::vector<std::string> refs;
          long steps = 0;
          int peak = 0;
          bool ok = true;
          for (const Task& task : tasks) {
            try {
              DecodeResult r =
                  detail::run_decoder(decoder, vocab, scorer, detail::source_ids(vocab, task.source),
                                      task.terms, config, spec.case_sensitive);
              std::string text = vocab.detokenize(r.output.tokens);
              corpus.emplace_back(text, task.terms);
              hyps.push_back(std::move(text));
              refs.push_back(task.reference);
              steps += r.stats.steps;
              peak = std::max(peak, r.stats.peak_live_hypotheses);
            } catch (const std::exception&) {
              ok = false;
              break;
            }
          }
          if (ok && !tasks.empty()) {
            row.push_back("ok");
            row.push_back(detail::format_double(ema(corpus, spec.case_sensitive)));
            row.push_back(detail::format_double(lma(corpus, lemmatizer, spec.case_sensitive)));
            row.push_back(detail::format_double(bleu(hyps, refs), "%.4f"));
            row.push_back(detail::format_double(static_cast<double>(steps) /
                                                    static_cast<double>(tasks.size()),
                                                "%.4f"));
            row.push_back(std::to_string(peak));
          } else {
            row.push_back(ok ? "empty" : "failed");
            for (int i = 0; i < 5; ++i) row.push_back("");
          }
          table.rows.push_back(std::move(row));
        }
      }
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

// Fields never contain commas or quotes, so plain joining is enough.
inline std::string to_csv(const SweepTable& table) {
  std::ostringstream os;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) os << ',';
    os << table.header[i];
  }
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      os << row[i];
    }
    os << '\n';
  }
  return os.str();
}

inline SweepTable csv_to_table(std::istream& in) {
  SweepTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.push_back("");
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else {
      table.rows.push_back(std::move(fields));
    }
  }
  return table;
}

inline SweepTable load_sweep_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sweep file: " + path);
  return csv_to_table(in);
}

/// Long-format (series, x, y) projection of a sweep table for plotting.
/// Throws when a requested column does not exist; an empty table yields just
/// the header.
inline std::string emit_plot_data(const SweepTable& table, const std::string& x_column,
                                  const std::string& y_column, const std::string& series_column) {
  for (const std::string& name : {x_column, y_column, series_column}) {
    if (table.column(name) < 0) {
      throw std::invalid_argument("plot data: no column named '" + name + "'");
    }
  }
  const auto x = static_cast<std::size_t>(table.column(x_column));
  const auto y = static_cast<std::size_t>(table.column(y_column));
  const auto s = static_cast<std::size_t>(table.column(series_column));
  std::ostringstream os;
  os << "series,x,y\n";
  for (const auto& row : table.rows) {
    if (row.size() <= std::max({x, y, s})) continue;
    os << row[s] << ',' << row[x] << ',' << row[y] << '\n';
  }
  return os.str();
}

}  // namespace cascade
