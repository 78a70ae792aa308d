#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semstream/sound.hpp"

namespace semstream {

enum class TokenStatus { Intact, Corrupted, Erased };

inline const char* to_string(TokenStatus s) {
    switch (s) {
        case TokenStatus::Intact: return "intact";
        case TokenStatus::Corrupted: return "corrupted";
        case TokenStatus::Erased: return "erased";
    }
    return "?";
}

// The on-the-wire semantic unit: a KG entity reference plus timing and
// salience metadata.
struct SemanticToken {
    std::string entity;
    EventKind kind = EventKind::Music;
    double onset = 0.0;
    double duration = 0.0;
    double salience = 1.0;
    std::size_t seq = 0; // position within the frame at encode time
    TokenStatus status = TokenStatus::Intact;
};

struct HeaderSlot {
    std::size_t seq = 0;
    double onset = 0.0;
    double duration = 0.0;
};

// Control-plane frame descriptor, delivered reliably out of band so the
// receiver can detect erased slots and start reconstruction promptly.
struct FrameHeader {
    std::int64_t frame_id = 0;
    std::vector<HeaderSlot> slots; // all encoded slots, pre-drop, in seq order
    double total_importance = 0.0;

    std::size_t slot_count() const { return slots.size(); }
};

} // namespace semstream
