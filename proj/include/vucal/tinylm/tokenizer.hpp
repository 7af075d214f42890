#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vucal::tinylm {

// Byte-level vocabulary: ids 0..255 are raw bytes, reserved specials follow.
namespace tok {
inline constexpr int kByteCount = 256;
inline constexpr int kBos = 256;
inline constexpr int kEos = 257;
inline constexpr int kModeCertain = 258;    // embedding -c * v_star
inline constexpr int kModeUncertain = 259;  // embedding +c * v_star
inline constexpr int kHedge = 260;          // renders as a hedging phrase
inline constexpr int kSure = 261;           // renders as a confidence phrase
inline constexpr int kSpecialCount = 6;
inline constexpr int kMinVocab = kByteCount + kSpecialCount;
}  // namespace tok

inline constexpr std::string_view kHedgePhrase = "i'm not sure, ";
inline constexpr std::string_view kSurePhrase = "certainly, ";

inline std::vector<int> encode(std::string_view text) {
    std::vector<int> ids;
    ids.reserve(text.size());
    for (unsigned char c : text) {
        ids.push_back(static_cast<int>(c));
    }
    return ids;
}

// Decode token ids to text. Control/extended bytes render as '_' so decoded
// answers stay printable ASCII (keeps JSONL artifacts valid UTF-8).
inline std::string decode(const std::vector<int>& ids) {
    std::string out;
    out.reserve(ids.size());
    for (int id : ids) {
        if (id >= 32 && id <= 126) {
            out.push_back(static_cast<char>(id));
        } else if (id >= 0 && id < tok::kByteCount) {
            out.push_back('_');
        } else if (id == tok::kHedge) {
            out += kHedgePhrase;
        } else if (id == tok::kSure) {
            out += kSurePhrase;
        }
        // BOS/EOS/mode tokens render as nothing
    }
    return out;
}

}  // namespace vucal::tinylm
