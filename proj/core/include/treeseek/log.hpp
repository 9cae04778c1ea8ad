// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string_view>

namespace treeseek::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

void set_level(Level level);
Level level();

void debug(std::string_view message);
void info(std::string_view message);
void warn(std::string_view message);
void error(std::string_view message);

}  // namespace treeseek::log
