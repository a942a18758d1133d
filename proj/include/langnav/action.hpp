#pragma once

namespace langnav {

// Panoramic action: move through one navigable candidate, or stop.
struct Action {
    enum class Kind { move, stop };
    Kind kind = Kind::stop;
    int index = -1;  // index into ObservationSnapshot::candidates when moving

    static Action move(int candidate_index) { return {Kind::move, candidate_index}; }
    static Action stop() { return {Kind::stop, -1}; }

    bool is_move() const { return kind == Kind::move; }
    bool is_stop() const { return kind == Kind::stop; }

    friend bool operator==(const Action& a, const Action& b) {
        if (a.kind != b.kind) return false;
        return a.kind == Kind::stop || a.index == b.index;
    }
};

}  // namespace langnav
