#pragma once

/**
 * Task ingestion. Tasks arrive as JSONL, one object per sentence pair:
 *
 *   {"source": "...", "reference": "...",
 *    "terms": [{"src": "...", "tgts": ["...", ...]}, ...]}
 *
 * A task may carry no terms at all. Malformed lines are reported with their
 * 1-based line number.
 */

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "terms.hpp"

namespace cascade {

struct Task {
  int id = -1;  // line index in the source file
  std::string source;
  std::string reference;
  TermList terms;
};

inline Task task_from_json(const nlohmann::json& j, int id) {
  Task task;
  task.id = id;
  task.source = j.at("source").get<std::string>();
  task.reference = j.at("reference").get<std::string>();
  std::vector<TerminologyEntry> entries;
  if (j.contains("terms")) {
    for (const auto& tj : j.at("terms")) {
      TerminologyEntry e;
      e.source = tj.at("src").get<std::string>();
      e.targets = tj.at("tgts").get<std::vector<std::string>>();
      entries.push_back(std::move(e));
    }
  }
  task.terms = make_term_list(std::move(entries));
  return task;
}

inline std::vector<Task> load_tasks(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open task file: " + path);
  std::vector<Task> tasks;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      tasks.push_back(task_from_json(nlohmann::json::parse(line), static_cast<int>(tasks.size())));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return tasks;
}

}  // namespace cascade
