#ifndef TALOS_VERSION_HPP
#define TALOS_VERSION_HPP

namespace talos {

inline constexpr const char* kVersion = "0.1.0";

} // namespace talos

#endif // TALOS_VERSION_HPP
