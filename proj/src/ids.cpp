#include "mathforge/ids.hpp"

#include <iomanip>
#include <sstream>

namespace mathforge {

std::string IdAllocator::next() {
    ++counter_;
    std::ostringstream os;
    os << prefix_ << '-' << std::setw(width_) << std::setfill('0') << counter_;
    return os.str();
}

}  // namespace mathforge
