#pragma once

#include <string_view>

namespace mnmimo::log {

enum class Level { Quiet, Warn, Info };

void set_level(Level level);
Level level();

void warn(std::string_view message);
void info(std::string_view message);

} // namespace mnmimo::log
