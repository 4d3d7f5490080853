#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace fastwdm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

// Entry point of the `fastwdm` tool. `args` excludes the program name.
// Subcommands: schedule, make-phantoms, train, inpaint, eval, bench.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Reads a flat key=value file ('#' starts a comment) and returns it as "--key value" tokens,
// skipping keys already present in `explicit_args`. "key=true" becomes a bare flag, "key=false"
// is dropped.
std::vector<std::string> config_file_tokens(const std::string& path, const std::vector<std::string>& explicit_args);

}  // namespace fastwdm::cli
