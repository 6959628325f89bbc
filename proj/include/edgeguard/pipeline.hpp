#pragma once

#include <functional>
#include <string>

#include "edgeguard/config.hpp"

namespace edgeguard {

using LogSink = std::function<void(const std::string&)>;

/// Resolves the config for the command, runs it and writes config.txt with the
/// resolved values into the output directory. Validation problems throw
/// InvalidArgument; everything else throws another Error subclass.
void run_command(const std::string& command, const RunConfig& config, const LogSink& log = {});

/// Fails unless the directory is absent, empty, or force is set.
void prepare_output(const std::filesystem::path& dir, bool force);

}  // namespace edgeguard
