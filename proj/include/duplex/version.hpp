#ifndef DUPLEX_VERSION_HPP
#define DUPLEX_VERSION_HPP

namespace duplex {

inline constexpr const char* kEngineVersion = "0.1.0";

}  // namespace duplex

#endif  // DUPLEX_VERSION_HPP
