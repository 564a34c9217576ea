#ifndef PCAT_VERSION_HPP
#define PCAT_VERSION_HPP

namespace pcat {

inline constexpr const char* kToolName = "pcat";
inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kReportSchemaVersion = 1;

}  // namespace pcat

#endif  // PCAT_VERSION_HPP
