#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace odm {

/// Raised for malformed or inconsistent inputs anywhere in the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file could not be opened, read, written, or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A run configuration is invalid.
class ConfigError : public Error {
 public:
  using Error::Error;
};

using ClassId = int;
using IdSequence = std::vector<ClassId>;

/// Splits UTF-8 text into one string per code point.
std::vector<std::string> split_utf8(std::string_view text);

/// Bijection between symbols and the ids 0..C-1.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> symbols);

  int size() const { return static_cast<int>(symbols_.size()); }
  const std::vector<std::string>& symbols() const { return symbols_; }
  const std::string& symbol(ClassId id) const;
  ClassId id(const std::string& symbol) const;
  bool contains(const std::string& symbol) const { return index_.contains(symbol); }

  IdSequence encode(const std::vector<std::string>& symbols) const;
  IdSequence encode(std::string_view utf8_text) const;
  std::string decode(const IdSequence& ids) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.symbols_ == b.symbols_;
  }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, ClassId> index_;
};

/// Distinct symbols in first-appearance order.
Vocabulary build_vocab(const std::vector<std::string>& text);
Vocabulary build_vocab(std::string_view utf8_text);

/// Space-separated symbol list with `\s`, `\t`, `\n`, `\\` escapes.
std::string escape_symbols(const Vocabulary& vocab);
Vocabulary unescape_symbols(std::string_view line);

}  // namespace odm
