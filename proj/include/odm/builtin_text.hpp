#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "odm/ngram.hpp"
#include "odm/vocabulary.hpp"

namespace odm {

/// The 29-symbol alphabet used by the cipher tasks: a-z, space, comma, period.
inline constexpr std::string_view kCipherAlphabet = "abcdefghijklmnopqrstuvwxyz ,.";

/// Two unrelated English passages. Corpus A drives the task text; corpus B
/// is only used for out-of-domain priors.
std::string_view builtin_passage_a();
std::string_view builtin_passage_b();

Vocabulary cipher_vocab();

/// English-like text of `length` symbols: the passage is normalized to the
/// cipher alphabet and resampled through its order-`chain_order` character chain.
IdSequence builtin_text(std::string_view passage, std::size_t length, std::uint64_t seed, int chain_order = 3);

}  // namespace odm
