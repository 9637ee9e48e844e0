#pragma once

#include <functional>
#include <string>

namespace qrkit::diag {

using WarningSink = std::function<void(const std::string&)>;

// Replaces the process-wide warning sink. An empty sink restores the default,
// which prints "qrkit: warning: ..." to stderr.
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace qrkit::diag
