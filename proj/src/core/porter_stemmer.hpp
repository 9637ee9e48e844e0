#pragma once

#include <string>
#include <string_view>

namespace qrkit {

// Porter (1980) suffix-stripping stemmer. Input is expected to be a lowercase
// ASCII word; anything containing other bytes is returned unchanged.
std::string porter_stem(std::string_view word);

}  // namespace qrkit
