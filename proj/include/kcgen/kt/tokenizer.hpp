// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace kcgen::kt {

/// Lossless lexeme tokenizer. Text is cut into pieces (an optional leading
/// space plus a word, number or single symbol; or a whitespace run); pieces in
/// the vocabulary become one token, anything else falls back to one token per
/// byte. All 256 bytes are always in the vocabulary.
class Tokenizer {
 public:
  static constexpr int kPad = 0;
  static constexpr int kCode = 1;  ///< marks the end of the prompt
  static constexpr int kEnd = 2;   ///< end of generated code
  static constexpr int kSpecialCount = 3;
  static constexpr int kByteBase = kSpecialCount;

  Tokenizer();

  /// Adds the most frequent pieces of `corpus` (ties in lexical order) until
  /// the vocabulary holds `max_size` entries. Words in `required` are always
  /// added.
  static Tokenizer train(const std::vector<std::string>& corpus, std::size_t max_size,
                         const std::vector<std::string>& required = {"true", "false"});

  std::vector<int> encode(std::string_view s) const;
  std::string decode(const std::vector<int>& ids) const;
  std::string piece(int id) const;

  std::size_t size() const { return pieces_.size(); }
  int lookup(std::string_view piece) const;

  /// Pieces a string is cut into before vocabulary lookup.
  static std::vector<std::string> pre_tokenize(std::string_view s);

  /// Pieces after the byte block, in id order (for serialization).
  std::vector<std::string> learned_pieces() const;
  static Tokenizer from_pieces(const std::vector<std::string>& learned);

 private:
  void add(const std::string& piece);

  std::vector<std::string> pieces_;
  std::map<std::string, int, std::less<>> index_;
};

}  // namespace kcgen::kt
