#pragma once

// Terminology constraints: one source term with one or more acceptable target
// strings. An output fulfills an entry when any one alternative appears,
// delimited by word boundaries.

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cascade {

struct TerminologyEntry {
  std::string source;
  std::vector<std::string> targets;  // disjunctive alternatives, each non-empty
  int index = -1;                    // position within the owning TermList
};

struct TermList {
  std::vector<TerminologyEntry> entries;

  int count() const { return static_cast<int>(entries.size()); }
  bool empty() const { return entries.empty(); }
};

/// Trim and collapse internal whitespace runs to single spaces.
inline std::string normalize_term_text(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c);
  }
  return out;
}

/// Validates entries and assigns indices by position.
inline TermList make_term_list(std::vector<TerminologyEntry> entries) {
  TermList list;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    TerminologyEntry e = std::move(entries[i]);
    e.index = static_cast<int>(i);
    if (e.targets.empty()) {
      throw std::invalid_argument("terminology '" + e.source + "': empty targets list");
    }
    for (std::string& t : e.targets) {
      t = normalize_term_text(t);
      if (t.empty()) {
        throw std::invalid_argument("terminology '" + e.source + "': empty target string");
      }
    }
    list.entries.push_back(std::move(e));
  }
  return list;
}

}  // namespace cascade
