#pragma once

#include <string>

#include <ambinli/config.hpp>

namespace ambinli::cli {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitData = 3;

void cmd_build(const KeyValueConfig& cfg);
void cmd_train(const KeyValueConfig& cfg);
void cmd_eval(const KeyValueConfig& cfg);
void cmd_bins(const KeyValueConfig& cfg);
void cmd_crossval(const KeyValueConfig& cfg);
void cmd_transfer(const KeyValueConfig& cfg);
void cmd_synth(const KeyValueConfig& cfg);

} // namespace ambinli::cli
