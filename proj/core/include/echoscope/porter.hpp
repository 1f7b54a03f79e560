#pragma once

#include <string>
#include <string_view>

namespace echoscope::textsim {

// Porter (1980) suffix-stripping stemmer, following the author's reference C
// implementation: words of one or two letters are returned unchanged, and
// step 2 maps "bli" -> "ble" and "logi" -> "log". Expects lowercase input.
std::string porter_stem(std::string_view word);

}  // namespace echoscope::textsim
