// SPDX-License-Identifier: Apache-2.0
#include "kcgen/kt/tokenizer.hpp"

#include <algorithm>
#include <cctype>

#include "kcgen/util/error.hpp"

namespace kcgen::kt {

namespace {

bool word_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

}  // namespace

Tokenizer::Tokenizer() {
  pieces_ = {"<pad>", "<code>", "<end>"};
  for (int b = 0; b < 256; ++b) pieces_.push_back(std::string(1, static_cast<char>(b)));
  // Specials and bytes are addressed by id only; the index holds learned pieces.
}

void Tokenizer::add(const std::string& piece) {
  if (piece.size() < 2 || index_.count(piece)) return;
  index_.emplace(piece, static_cast<int>(pieces_.size()));
  pieces_.push_back(piece);
}

std::vector<std::string> Tokenizer::pre_tokenize(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t j = i;
    if (c == ' ' && i + 1 < s.size() && !std::isspace(static_cast<unsigned char>(s[i + 1]))) {
      j = i + 1;
    }
    const unsigned char d = static_cast<unsigned char>(s[j]);
    if (std::isspace(d)) {
      while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j]))) ++j;
      // Leave one trailing space to attach to the next word.
      if (j < s.size() && j - i > 1 && s[j - 1] == ' ') --j;
    } else if (word_char(d)) {
      while (j < s.size() && word_char(static_cast<unsigned char>(s[j]))) ++j;
    } else {
      ++j;
    }
    out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

Tokenizer Tokenizer::train(const std::vector<std::string>& corpus, std::size_t max_size,
                           const std::vector<std::string>& required) {
  Tokenizer t;
  for (const auto& w : required) {
    t.add(w);
    t.add(" " + w);
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& doc : corpus) {
    for (auto& p : pre_tokenize(doc)) {
      if (p.size() >= 2) ++counts[p];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [p, n] : ranked) {
    if (t.size() >= max_size) break;
    t.add(p);
  }
  return t;
}

int Tokenizer::lookup(std::string_view piece) const {
  if (piece.size() == 1) return kByteBase + static_cast<unsigned char>(piece[0]);
  const auto it = index_.find(piece);
  return it == index_.end() ? -1 : it->second;
}

std::vector<int> Tokenizer::encode(std::string_view s) const {
  std::vector<int> ids;
  for (const auto& p : pre_tokenize(s)) {
    const int id = lookup(p);
    if (id >= 0) {
      ids.push_back(id);
      continue;
    }
    // A leading space may still pair with a known word.
    if (p.size() > 2 && p[0] == ' ') {
      const int rest = lookup(std::string_view(p).substr(1));
      if (rest >= 0) {
        ids.push_back(kByteBase + ' ');
        ids.push_back(rest);
        continue;
      }
    }
    for (unsigned char c : p) ids.push_back(kByteBase + c);
  }
  return ids;
}

std::string Tokenizer::piece(int id) const {
  if (id < 0 || id >= static_cast<int>(pieces_.size())) throw DomainError("token id out of range");
  return pieces_[static_cast<std::size_t>(id)];
}

std::string Tokenizer::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (id < kSpecialCount) continue;
    out += piece(id);
  }
  return out;
}

std::vector<std::string> Tokenizer::learned_pieces() const {
  return {pieces_.begin() + kByteBase + 256, pieces_.end()};
}

Tokenizer Tokenizer::from_pieces(const std::vector<std::string>& learned) {
  Tokenizer t;
  for (const auto& p : learned) {
    if (p.size() < 2 || t.index_.count(p)) throw ParseError("tokenizer piece list is malformed");
    t.add(p);
  }
  return t;
}

}  // namespace kcgen::kt
