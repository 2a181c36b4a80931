#pragma once

#include <cstdint>
#include <string>

namespace mathforge {

// Run-scoped id source: a stage prefix plus a zero-padded counter, e.g.
// "s1-000042". Ids carry no content so edits to a record's text never change
// its identity across a resumed run.
class IdAllocator {
public:
    explicit IdAllocator(std::string prefix, int width = 6)
        : prefix_(std::move(prefix)), width_(width) {}

    std::string next();

    // Counter value the next call will use (1-based).
    std::uint64_t next_value() const { return counter_ + 1; }

private:
    std::string prefix_;
    int width_;
    std::uint64_t counter_ = 0;
};

}  // namespace mathforge
