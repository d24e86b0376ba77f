#pragma once

#include <string>
#include <vector>

namespace secimg::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kBadArguments = 1;
inline constexpr int kDataError = 2;
inline constexpr int kIoError = 3;

// Entry point for the `secimg` tool. Subcommands: manifest, render, export,
// knn-fit, knn-predict, score, pipeline.
int run(int argc, char** argv);
// `args` excludes the program name.
int run(const std::vector<std::string>& args);

}  // namespace secimg::cli
