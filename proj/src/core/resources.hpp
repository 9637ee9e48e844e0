#pragma once

#include <optional>
#include <string_view>
#include <vector>

namespace qrkit {

// Files from data/ compiled into the library. Names are paths relative to
// data/, e.g. "stopwords_en_v1.txt" or "instructions/general.txt".
std::optional<std::string_view> find_bundled_resource(std::string_view name);
std::vector<std::string_view> bundled_resource_names();

}  // namespace qrkit
