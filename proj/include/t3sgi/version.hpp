#ifndef T3SGI_VERSION_HPP
#define T3SGI_VERSION_HPP

namespace t3sgi {

inline constexpr const char* kVersion = "0.1.0";

} // namespace t3sgi

#endif // T3SGI_VERSION_HPP
