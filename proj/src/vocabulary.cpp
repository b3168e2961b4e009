#include "odm/vocabulary.hpp"

namespace odm {

std::vector<std::string> split_utf8(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (lead >= 0xF0)
      len = 4;
    else if (lead >= 0xE0)
      len = 3;
    else if (lead >= 0xC0)
      len = 2;
    if (i + len > text.size()) throw Error("truncated UTF-8 sequence");
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (symbols_[i].empty()) throw Error("empty symbol in vocabulary");
    if (!index_.emplace(symbols_[i], static_cast<ClassId>(i)).second)
      throw Error("duplicate symbol '" + symbols_[i] + "' in vocabulary");
  }
}

const std::string& Vocabulary::symbol(ClassId id) const {
  if (id < 0 || id >= size()) throw Error("symbol id " + std::to_string(id) + " out of range");
  return symbols_[static_cast<std::size_t>(id)];
}

ClassId Vocabulary::id(const std::string& symbol) const {
  auto it = index_.find(symbol);
  if (it == index_.end()) throw Error("unknown symbol '" + symbol + "'");
  return it->second;
}

IdSequence Vocabulary::encode(const std::vector<std::string>& symbols) const {
  IdSequence ids;
  ids.reserve(symbols.size());
  for (const auto& s : symbols) ids.push_back(id(s));
  return ids;
}

IdSequence Vocabulary::encode(std::string_view utf8_text) const {
  return encode(split_utf8(utf8_text));
}

std::string Vocabulary::decode(const IdSequence& ids) const {
  std::string out;
  for (ClassId i : ids) out += symbol(i);
  return out;
}

Vocabulary build_vocab(const std::vector<std::string>& text) {
  if (text.empty()) throw Error("empty corpus");
  std::vector<std::string> symbols;
  std::unordered_map<std::string, bool> seen;
  for (const auto& s : text)
    if (seen.emplace(s, true).second) symbols.push_back(s);
  return Vocabulary(std::move(symbols));
}

Vocabulary build_vocab(std::string_view utf8_text) { return build_vocab(split_utf8(utf8_text)); }

std::string escape_symbols(const Vocabulary& vocab) {
  std::string out;
  for (int i = 0; i < vocab.size(); ++i) {
    if (i) out += ' ';
    for (char c : vocab.symbol(i)) {
      switch (c) {
        case ' ': out += "\\s"; break;
        case '\t': out += "\\t"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\\': out += "\\\\"; break;
        default: out += c;
      }
    }
  }
  return out;
}

Vocabulary unescape_symbols(std::string_view line) {
  std::vector<std::string> symbols;
  std::string cur;
  bool have = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == ' ') {
      if (have) symbols.push_back(std::move(cur));
      cur.clear();
      have = false;
      continue;
    }
    have = true;
    if (c != '\\') {
      cur += c;
      continue;
    }
    if (++i >= line.size()) throw Error("dangling escape in symbol list");
    switch (line[i]) {
      case 's': cur += ' '; break;
      case 't': cur += '\t'; break;
      case 'n': cur += '\n'; break;
      case 'r': cur += '\r'; break;
      case '\\': cur += '\\'; break;
      default: throw Error(std::string("unknown escape \\") + line[i]);
    }
  }
  if (have) symbols.push_back(std::move(cur));
  return Vocabulary(std::move(symbols));
}

}  // namespace odm
