#include "urlab/polter.hpp"

#include <cmath>
#include <stdexcept>

namespace urlab::polter {

SnapshotSchedule SnapshotSchedule::reference() {
    SnapshotSchedule s;
    s.entries = {25000, 50000, 100000, 200000, 400000, 800000, 1600000};
    return s;
}

SnapshotSchedule SnapshotSchedule::scaled(std::int64_t n_pretrain) {
    if (n_pretrain <= 0) throw std::invalid_argument("schedule: pretraining length must be positive");
    const SnapshotSchedule ref = reference();
    const double ratio = static_cast<double>(n_pretrain) / 2000000.0;
    SnapshotSchedule s;
    std::int64_t prev = 0;
    for (std::int64_t e : ref.entries) {
        std::int64_t scaled = static_cast<std::int64_t>(std::llround(static_cast<double>(e) * ratio));
        if (scaled <= prev) scaled = prev + 1;  // keep strictly increasing at tiny scales
        if (scaled >= n_pretrain) break;
        s.entries.push_back(scaled);
        prev = scaled;
    }
    return s;
}

void SnapshotSchedule::validate() const {
    for (std::size_t i = 0; i + 1 < entries.size(); ++i)
        if (entries[i + 1] <= entries[i]) throw std::invalid_argument("schedule: entries must be strictly increasing");
    for (std::int64_t e : entries)
        if (e < 0) throw std::invalid_argument("schedule: entries must be non-negative");
}

}  // namespace urlab::polter
