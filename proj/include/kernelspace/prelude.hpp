#pragma once

#include <string_view>

namespace ks {

// Library procedures written in the language itself, loaded into every VM.
std::string_view prelude_source();

}  // namespace ks
